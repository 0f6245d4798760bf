#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adhocsim/medium.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/protocol.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

// Scenario configs are line-oriented text: [section] headers over key=value
// pairs, '#' comments, blank lines ignored.  [session] may repeat.  Parsing
// reports every error with its line number; scenario-critical fields have no
// silent defaults.

struct SessionSpec {
  FlowKey flow;
  enum Kind { kCbr, kPoisson } kind = kCbr;
  double cbr_pps = 0.0;        // kCbr
  double rate_bps = 0.0;       // kPoisson: mean = 8 * payload / rate
  std::uint64_t packets = 0;   // 0 = open-ended
  double start_s = 0.0;
  bool start_uniform = false;  // start drawn from U[start_lo, start_hi)
  double start_lo = 0.0;
  double start_hi = 0.0;

  bool operator==(const SessionSpec&) const = default;
};

struct PlacementSpec {
  enum Kind { kGrid, kExplicit } kind = kGrid;
  std::size_t rows = 0;      // kGrid
  std::size_t cols = 0;
  double spacing_m = 0.0;
  std::vector<double> xs;    // kExplicit, index = NodeId
  std::vector<double> ys;

  bool operator==(const PlacementSpec&) const = default;
};

struct EnergySpec {
  enum Kind { kUniform, kList } kind = kUniform;
  double lo_j = 0.0;           // kUniform: drawn per node at materialization
  double hi_j = 0.0;
  std::vector<double> values;  // kList, index = NodeId

  bool operator==(const EnergySpec&) const = default;
};

struct Scenario {
  std::string name;
  std::optional<Proto> protocol;  // CLI may supply or override
  std::uint64_t seed = 1;
  enum Mode { kHorizon, kCompletion } mode = kHorizon;
  double duration_s = 0.0;    // kHorizon end time
  double time_limit_s = 0.0;  // kCompletion safety cap (0 = unlimited)
  bool strict_pdr = false;

  std::size_t nodes = 0;
  PlacementSpec placement;
  EnergySpec energy;

  double comm_range_m = 250.0;
  MediumParams medium;

  // Protocol tunables; alpha and window default per protocol when unset.
  ProtocolConfig pcfg;
  std::optional<double> aedr_alpha;
  std::optional<double> aedr_window_s;

  std::vector<SessionSpec> sessions;
};

struct ParseError {
  std::size_t line;  // 0 = whole-file error
  std::string message;
};

// All errors are collected; a scenario is returned only when there are none.
std::optional<Scenario> parse_scenario(std::string_view text,
                                       std::vector<ParseError>& errors);
std::optional<Scenario> load_scenario_file(const std::string& path,
                                           std::vector<ParseError>& errors);

// Canonical form; parse(print(s)) reproduces s exactly (doubles are printed
// with shortest round-trip formatting).
std::string print_scenario(const Scenario& s);

bool operator==(const Scenario& a, const Scenario& b);

// Seed-resolved run inputs: positions laid out, per-node energies drawn
// (node stream draw #1), uniform session starts drawn (stream "start/<flow>").
struct Materialized {
  std::uint64_t seed = 0;
  Proto protocol = Proto::kAodv;
  std::vector<Position> positions;
  std::vector<double> energies_j;
  std::vector<double> session_starts_s;  // parallel to Scenario::sessions
  double aedr_alpha = 0.0;
  double aedr_window_s = 0.0;
};

// protocol_override wins over Scenario::protocol; absence of both is a
// contract violation (validation enforces one exists before running).
Materialized materialize(const Scenario& s, std::uint64_t seed,
                         std::optional<Proto> protocol_override = std::nullopt);

}  // namespace adhocsim
