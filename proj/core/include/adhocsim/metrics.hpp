#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "adhocsim/types.hpp"

namespace adhocsim {

enum class DropCause {
  kQueueFull,
  kNodeDead,
  kNoRoute,
  kDiscoveryFail,
  kLinkBreak,
  kRepairFail,
  kStopped,
};
inline constexpr std::size_t kDropCauseCount = 7;
const char* to_string(DropCause c);

enum class EndReason { kComplete, kStopTraffic, kRetriesExhausted, kSourceDeath };
const char* to_string(EndReason r);

// Run-wide counters.  Every data packet ends in exactly one of delivered,
// dropped-with-cause, or in-flight-at-end; conservation is checked per flow.
class MetricsLedger {
 public:
  struct FlowStats {
    std::uint64_t injected = 0;
    std::uint64_t delivered = 0;
    std::array<std::uint64_t, kDropCauseCount> dropped{};
    std::uint64_t in_flight = 0;
    std::uint64_t suppressed = 0;  // never generated due to an early stop
    double delay_sum = 0.0;
    std::uint64_t hop_sum = 0;

    std::uint64_t dropped_total() const;
  };

  explicit MetricsLedger(std::size_t node_count, bool audit_paths = false);

  void injected(const FlowKey& f);
  void delivered(const FlowKey& f, double delay_s, std::uint32_t hops);
  void dropped(const FlowKey& f, DropCause cause);
  void in_flight(const FlowKey& f);
  void suppressed(const FlowKey& f, std::uint64_t count);
  void routing_tx() { ++routing_tx_; }
  void node_death(NodeId n, SimTime at);
  void session_end(const FlowKey& f, SimTime at, EndReason why);

  // Path audit (loop freedom): records each reception of a data packet and
  // flags any packet that visits the same node twice.
  void visit(std::uint64_t uid, NodeId node);
  bool audit_paths() const { return audit_paths_; }
  std::uint64_t path_violations() const { return path_violations_; }

  const std::map<FlowKey, FlowStats>& flows() const { return flows_; }
  std::uint64_t total_injected() const;
  std::uint64_t total_delivered() const;
  std::uint64_t total_dropped() const;
  std::uint64_t total_in_flight() const;
  std::uint64_t total_suppressed() const;
  std::uint64_t dropped_by_cause(DropCause c) const;
  std::uint64_t routing_tx_count() const { return routing_tx_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t deaths() const { return deaths_.size(); }
  const std::vector<std::pair<SimTime, NodeId>>& death_log() const { return deaths_; }

  // Alive count after applying all deaths at instants <= t.
  std::size_t alive_at(SimTime t) const;

  // Session-cease times excluding natural completions, in flow order.
  std::vector<std::pair<FlowKey, SimTime>> cet_list() const;
  const std::map<FlowKey, std::pair<SimTime, EndReason>>& session_ends() const {
    return session_ends_;
  }

  // delivered / (injected [+ suppressed when strict]); nullopt on empty
  // denominator.
  std::optional<double> pdr(bool strict = false) const;
  std::optional<double> control_overhead() const;  // routing_tx / delivered
  std::optional<double> avg_delay() const;
  std::optional<double> avg_hops() const;

 private:
  std::map<FlowKey, FlowStats> flows_;
  std::vector<std::pair<SimTime, NodeId>> deaths_;
  std::map<FlowKey, std::pair<SimTime, EndReason>> session_ends_;
  std::uint64_t routing_tx_ = 0;
  std::size_t node_count_;
  bool audit_paths_;
  std::map<std::uint64_t, std::vector<NodeId>> paths_;
  std::uint64_t path_violations_ = 0;
};

}  // namespace adhocsim
