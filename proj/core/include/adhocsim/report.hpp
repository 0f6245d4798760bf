#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adhocsim/metrics.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

// Line-oriented run report: scalar key=value pairs followed by CSV sections
// [drops], [net_curve], [cet], [flows].  Field names and formatting are
// frozen; golden tests and the batch aggregator parse this text.
struct RunReport {
  std::string scenario;
  std::string protocol;
  std::uint64_t seed = 0;
  double end_time_s = 0.0;
  std::uint64_t events = 0;

  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t routing_tx = 0;
  std::uint64_t deaths = 0;
  std::uint64_t path_violations = 0;

  std::optional<double> pdr;
  std::optional<double> pdr_strict;
  std::optional<double> coh;
  std::optional<double> avg_delay_s;
  std::optional<double> avg_hops;

  std::array<std::uint64_t, kDropCauseCount> drops_by_cause{};
  std::vector<std::pair<std::uint64_t, std::uint64_t>> net_curve;  // (t, alive)
  std::vector<std::pair<std::string, double>> cet;                 // (flow, t)

  struct FlowRow {
    std::string flow;
    std::uint64_t injected = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t suppressed = 0;
    std::optional<double> avg_delay_s;
    std::optional<double> avg_hops;
  };
  std::vector<FlowRow> flows;

  std::string to_text() const;
  static std::optional<RunReport> from_text(std::string_view text,
                                            std::string* error = nullptr);
};

RunReport build_report(const std::string& scenario_name,
                       const std::string& protocol, std::uint64_t seed,
                       double end_time_s, std::uint64_t events,
                       const MetricsLedger& m, bool strict_pdr);

// Mean and sample standard deviation (n-1 denominator; 0 when n = 1) per
// metric over per-seed reports.  Optional metrics aggregate over the seeds
// where they are present.
struct BatchReport {
  std::string scenario;
  std::string protocol;
  std::vector<std::uint64_t> seeds;

  struct Stat {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
  };
  Stat pdr, pdr_strict, coh, avg_delay_s, avg_hops, deaths, delivered, injected;

  std::string to_text() const;
};

BatchReport aggregate_reports(const std::vector<RunReport>& runs);

}  // namespace adhocsim
