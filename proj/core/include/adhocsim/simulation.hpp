#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adhocsim/battery.hpp"
#include "adhocsim/event_queue.hpp"
#include "adhocsim/medium.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/observer.hpp"
#include "adhocsim/protocol.hpp"
#include "adhocsim/report.hpp"
#include "adhocsim/rng.hpp"
#include "adhocsim/scenario.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/trace.hpp"
#include "adhocsim/traffic.hpp"

namespace adhocsim {

struct SimOptions {
  std::string trace_path;            // empty = no trace
  DiscoveryObserver* observer = nullptr;
  bool audit_paths = false;          // per-packet loop-freedom audit
  std::optional<Proto> protocol_override;
  std::optional<std::uint64_t> seed_override;
};

// One deterministic run: owns the event queue, topology, batteries, medium,
// per-node protocol instances and traffic.  Identical scenario + seed +
// options yield byte-identical traces and reports.
class Simulation : public MediumClient {
 public:
  Simulation(const Scenario& scenario, const SimOptions& opts = {});
  ~Simulation();

  RunReport run();

  // Post-run inspection.
  const MetricsLedger& metrics() const { return *metrics_; }
  const std::vector<Battery>& batteries() const { return batteries_; }
  const Topology& topology() const { return *topo_; }
  const Materialized& materialized() const { return mat_; }
  SimTime end_time() const { return end_time_; }

  // Largest relative imbalance of (initial - residual) vs recorded debits
  // over all nodes; the energy-ledger acceptance bound is 1e-9.
  double energy_ledger_error() const;

  // MediumClient
  void deliver(NodeId at, const Frame& f) override;
  void link_failed(const Frame& f) override;
  void node_died(NodeId n) override;

 private:
  void sample_tick(NodeId n);
  bool quiescent() const;

  Scenario scenario_;
  SimOptions opts_;
  Materialized mat_;
  EventQueue queue_;
  std::unique_ptr<Topology> topo_;
  std::vector<Battery> batteries_;
  std::unique_ptr<MetricsLedger> metrics_;
  TraceWriter trace_;
  std::unique_ptr<Medium> medium_;
  std::vector<std::unique_ptr<RngStream>> node_rngs_;
  std::vector<std::unique_ptr<RoutingProtocol>> protocols_;
  std::unique_ptr<TrafficManager> traffic_;
  std::uint64_t next_uid_ = 1;
  std::uint64_t events_ = 0;
  SimTime end_time_ = 0.0;
  bool ran_ = false;
};

}  // namespace adhocsim
