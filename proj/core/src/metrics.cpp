#include "adhocsim/metrics.hpp"

#include <algorithm>

#include "adhocsim/contract.hpp"

namespace adhocsim {

const char* to_string(DropCause c) {
  switch (c) {
    case DropCause::kQueueFull: return "queue_full";
    case DropCause::kNodeDead: return "node_dead";
    case DropCause::kNoRoute: return "no_route";
    case DropCause::kDiscoveryFail: return "discovery_fail";
    case DropCause::kLinkBreak: return "link_break";
    case DropCause::kRepairFail: return "repair_fail";
    case DropCause::kStopped: return "stopped";
  }
  return "?";
}

const char* to_string(EndReason r) {
  switch (r) {
    case EndReason::kComplete: return "complete";
    case EndReason::kStopTraffic: return "stop_traffic";
    case EndReason::kRetriesExhausted: return "retries_exhausted";
    case EndReason::kSourceDeath: return "source_death";
  }
  return "?";
}

std::uint64_t MetricsLedger::FlowStats::dropped_total() const {
  std::uint64_t n = 0;
  for (std::uint64_t d : dropped) n += d;
  return n;
}

MetricsLedger::MetricsLedger(std::size_t node_count, bool audit_paths)
    : node_count_(node_count), audit_paths_(audit_paths) {}

void MetricsLedger::injected(const FlowKey& f) { ++flows_[f].injected; }

void MetricsLedger::delivered(const FlowKey& f, double delay_s, std::uint32_t hops) {
  contract_check(delay_s >= 0.0, "metrics: negative delay");
  FlowStats& s = flows_[f];
  ++s.delivered;
  s.delay_sum += delay_s;
  s.hop_sum += hops;
}

void MetricsLedger::dropped(const FlowKey& f, DropCause cause) {
  ++flows_[f].dropped[static_cast<std::size_t>(cause)];
}

void MetricsLedger::in_flight(const FlowKey& f) { ++flows_[f].in_flight; }

void MetricsLedger::suppressed(const FlowKey& f, std::uint64_t count) {
  flows_[f].suppressed += count;
}

void MetricsLedger::node_death(NodeId n, SimTime at) {
  deaths_.emplace_back(at, n);
}

void MetricsLedger::session_end(const FlowKey& f, SimTime at, EndReason why) {
  session_ends_.emplace(f, std::make_pair(at, why));
}

void MetricsLedger::visit(std::uint64_t uid, NodeId node) {
  if (!audit_paths_) return;
  auto& path = paths_[uid];
  if (std::find(path.begin(), path.end(), node) != path.end()) ++path_violations_;
  path.push_back(node);
}

std::uint64_t MetricsLedger::total_injected() const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.injected;
  return n;
}

std::uint64_t MetricsLedger::total_delivered() const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.delivered;
  return n;
}

std::uint64_t MetricsLedger::total_dropped() const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.dropped_total();
  return n;
}

std::uint64_t MetricsLedger::total_in_flight() const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.in_flight;
  return n;
}

std::uint64_t MetricsLedger::total_suppressed() const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.suppressed;
  return n;
}

std::uint64_t MetricsLedger::dropped_by_cause(DropCause c) const {
  std::uint64_t n = 0;
  for (const auto& [f, s] : flows_) n += s.dropped[static_cast<std::size_t>(c)];
  return n;
}

std::size_t MetricsLedger::alive_at(SimTime t) const {
  std::size_t dead = 0;
  for (const auto& [at, n] : deaths_) {
    if (at <= t) ++dead;
  }
  return node_count_ - dead;
}

std::vector<std::pair<FlowKey, SimTime>> MetricsLedger::cet_list() const {
  std::vector<std::pair<FlowKey, SimTime>> out;
  for (const auto& [f, end] : session_ends_) {
    if (end.second != EndReason::kComplete) out.emplace_back(f, end.first);
  }
  return out;
}

std::optional<double> MetricsLedger::pdr(bool strict) const {
  std::uint64_t denom = total_injected() + (strict ? total_suppressed() : 0);
  if (denom == 0) return std::nullopt;
  return static_cast<double>(total_delivered()) / static_cast<double>(denom);
}

std::optional<double> MetricsLedger::control_overhead() const {
  std::uint64_t del = total_delivered();
  if (del == 0) return std::nullopt;
  return static_cast<double>(routing_tx_) / static_cast<double>(del);
}

std::optional<double> MetricsLedger::avg_delay() const {
  std::uint64_t del = total_delivered();
  if (del == 0) return std::nullopt;
  double sum = 0.0;
  for (const auto& [f, s] : flows_) sum += s.delay_sum;
  return sum / static_cast<double>(del);
}

std::optional<double> MetricsLedger::avg_hops() const {
  std::uint64_t del = total_delivered();
  if (del == 0) return std::nullopt;
  std::uint64_t sum = 0;
  for (const auto& [f, s] : flows_) sum += s.hop_sum;
  return static_cast<double>(sum) / static_cast<double>(del);
}

}  // namespace adhocsim
