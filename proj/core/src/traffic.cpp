#include "adhocsim/traffic.hpp"

#include <utility>

#include "adhocsim/contract.hpp"

namespace adhocsim {

TrafficManager::TrafficManager(EventQueue& queue, MetricsLedger& metrics,
                               TraceWriter& trace, std::uint64_t seed,
                               std::function<std::uint64_t()> next_uid)
    : queue_(queue),
      metrics_(metrics),
      trace_(trace),
      seed_(seed),
      next_uid_(std::move(next_uid)) {}

void TrafficManager::add_session(const SessionPlan& plan) {
  contract_check(plan.flow.src != plan.flow.dst, "traffic: src == dst");
  contract_check(plan.start_s >= 0.0, "traffic: negative start");
  if (plan.kind == SessionPlan::kCbr) {
    contract_check(plan.cbr_pps > 0.0, "traffic: cbr rate must be > 0");
  } else {
    contract_check(plan.poisson_mean_s > 0.0, "traffic: poisson mean must be > 0");
  }
  contract_check(sessions_.count(plan.flow) == 0, "traffic: duplicate flow");

  Session s;
  s.plan = plan;
  s.rng = std::make_unique<RngStream>(RngStream::for_session(seed_, plan.flow));
  sessions_.emplace(plan.flow, std::move(s));
  ++unfinished_;
}

void TrafficManager::set_protocols(std::vector<RoutingProtocol*> protocols) {
  protocols_ = std::move(protocols);
}

std::optional<double> TrafficManager::declared_duration(const SessionPlan& plan) {
  if (plan.packet_count == 0) return std::nullopt;
  double interval = plan.kind == SessionPlan::kCbr ? 1.0 / plan.cbr_pps
                                                   : plan.poisson_mean_s;
  return static_cast<double>(plan.packet_count) * interval;
}

void TrafficManager::start() {
  contract_check(!protocols_.empty(), "traffic: protocols not wired");
  for (auto& [flow, s] : sessions_) {
    FlowKey key = flow;
    SimTime at = s.plan.start_s;
    s.next = queue_.schedule(at, [this, key] {
      Session& ses = sessions_.at(key);
      if (ses.ended) return;
      ses.started = true;
      protocols_[key.src]->flow_starting(key, declared_duration(ses.plan));
      generate(key);
    });
  }
}

void TrafficManager::generate(const FlowKey& flow) {
  Session& s = sessions_.at(flow);
  if (s.ended) return;
  SimTime now = queue_.now();

  DataBody d;
  d.flow = flow;
  d.injected_at = now;
  d.payload_bytes = s.plan.payload_bytes;
  Packet pkt{next_uid_(), d};

  metrics_.injected(flow);
  metrics_.visit(pkt.uid, flow.src);
  trace_.pkt(now, TraceEvent::kSend, flow.src, pkt,
             kDataHeaderBytes + d.payload_bytes);
  ++s.generated;
  s.last_arrival = now;

  protocols_[flow.src]->inject(pkt);

  // The injection can cascade into this very session's end (the transmission
  // debit may kill the source); nothing more to schedule then.
  if (s.ended) return;
  if (s.plan.packet_count > 0 && s.generated >= s.plan.packet_count) {
    finish(s, EndReason::kComplete);
    return;
  }
  schedule_next(s);
}

void TrafficManager::schedule_next(Session& s) {
  SimTime t;
  if (s.plan.kind == SessionPlan::kCbr) {
    // Arrival k sits at start + k/rate, computed from k each time so float
    // error never accumulates across a long session.
    t = s.plan.start_s + static_cast<double>(s.generated) / s.plan.cbr_pps;
  } else {
    t = s.last_arrival + s.rng->exponential(s.plan.poisson_mean_s);
  }
  FlowKey key = s.plan.flow;
  s.next = queue_.schedule(t, [this, key] { generate(key); });
}

void TrafficManager::finish(Session& s, EndReason why) {
  contract_check(!s.ended, "traffic: double finish");
  s.ended = true;
  contract_check(unfinished_ > 0, "traffic: unfinished underflow");
  --unfinished_;
  queue_.cancel(s.next);

  const FlowKey& flow = s.plan.flow;
  if (why != EndReason::kComplete && s.plan.packet_count > 0 &&
      s.generated < s.plan.packet_count) {
    metrics_.suppressed(flow, s.plan.packet_count - s.generated);
  }
  metrics_.session_end(flow, queue_.now(), why);
  trace_.sess_end(queue_.now(), flow.src, flow, why);
  protocols_[flow.src]->flow_finished(flow, why);
}

void TrafficManager::end_session(const FlowKey& flow, EndReason why) {
  auto it = sessions_.find(flow);
  if (it == sessions_.end()) return;
  if (it->second.ended) return;
  finish(it->second, why);
}

void TrafficManager::source_died(NodeId n) {
  for (auto& [flow, s] : sessions_) {
    if (flow.src == n && !s.ended) finish(s, EndReason::kSourceDeath);
  }
}

bool TrafficManager::session_active(const FlowKey& flow) const {
  auto it = sessions_.find(flow);
  return it != sessions_.end() && it->second.started && !it->second.ended;
}

std::optional<double> TrafficManager::remaining_duration(const FlowKey& flow) const {
  auto it = sessions_.find(flow);
  if (it == sessions_.end()) return std::nullopt;
  auto dd = declared_duration(it->second.plan);
  if (!dd.has_value()) return std::nullopt;
  double remaining = it->second.plan.start_s + *dd - queue_.now();
  if (remaining <= 0.0) return std::nullopt;
  return remaining;
}

}  // namespace adhocsim
