#include "adhocsim/sqaodv.hpp"

#include <variant>

#include "adhocsim/contract.hpp"

namespace adhocsim {

void SqAodvProtocol::start() {
  env_.queue->schedule(env_.queue->now() + env_.cfg.rcr_check_interval_s,
                       [this] { rcr_tick(); });
}

void SqAodvProtocol::on_death() {
  FlowProtocolBase::on_death();
  delivered_flows_.clear();
  rcr_relayed_for_.clear();
}

bool SqAodvProtocol::admissible(double residual_j, double aedr_w,
                                std::optional<double> duration_s,
                                double threshold1_s) {
  if (duration_s.has_value()) return residual_j > *duration_s * aedr_w;
  return residual_j > threshold1_s * aedr_w;
}

bool SqAodvProtocol::admit(const RreqBody& rreq) {
  double residual = env_.battery->residual();
  double aedr = env_.battery->aedr();
  bool ok = admissible(residual, aedr, rreq.session_duration_s,
                       env_.cfg.threshold1_s);
  if (env_.observer != nullptr) {
    double needed = rreq.session_duration_s.has_value()
                        ? *rreq.session_duration_s * aedr
                        : env_.cfg.threshold1_s * aedr;
    env_.observer->admission_checked(env_.self, rreq.bid, ok, residual, needed);
  }
  return ok;
}

std::optional<double> SqAodvProtocol::rreq_duration(const FlowKey& flow) const {
  return env_.remaining_duration(flow);
}

void SqAodvProtocol::delivered_here(const FlowKey& flow) {
  delivered_flows_.insert(flow);
}

void SqAodvProtocol::rcr_tick() {
  if (!env_.battery->alive()) return;
  const Battery& b = *env_.battery;
  if (b.aedr() > 0.0 && b.residual() < b.threshold(env_.cfg.threshold2_s)) {
    if (!rcr_sent_this_episode_ && participates()) {
      broadcast_rcr();
      rcr_sent_this_episode_ = true;
    }
  } else {
    // Back above the warning line (the smoothed rate dropped); a later dip
    // counts as a new drain episode.
    rcr_sent_this_episode_ = false;
  }
  if (!env_.battery->alive()) return;  // the RCR itself may have finished us
  env_.queue->schedule(env_.queue->now() + env_.cfg.rcr_check_interval_s,
                       [this] { rcr_tick(); });
}

bool SqAodvProtocol::participates() const {
  SimTime now = env_.queue->now();
  for (const auto& [flow, e] : fwd_) {
    if (e.state == RouteState::kUp && now < e.expires_at) return true;
  }
  for (const FlowKey& flow : delivered_flows_) {
    auto it = rev_.find(flow);
    if (it != rev_.end() && it->second.state == RouteState::kUp &&
        now < it->second.expires_at) {
      return true;
    }
  }
  return false;
}

void SqAodvProtocol::broadcast_rcr() {
  RrepBody rcr;
  rcr.rcr = true;
  rcr.drained = env_.self;
  rcr.timestamp = env_.queue->now();
  env_.medium->enqueue(env_.self, std::nullopt, Packet{env_.next_uid(), rcr},
                       TraceVerb::kSend);
}

void SqAodvProtocol::handle_rcr(const Frame& f, const RrepBody& rcr) {
  NodeId drained = rcr.drained;
  if (rcr.flow.has_value()) {
    act_on_drain(*rcr.flow, drained, f.pkt.uid);
    return;
  }

  // Broadcast from the drained node itself: react per flow we carry through
  // it, plus flows we terminate whose upstream is the drained node.
  SimTime now = env_.queue->now();
  for (const auto& [flow, e] : fwd_) {
    if (e.state == RouteState::kUp && now < e.expires_at && e.next_hop == drained) {
      act_on_drain(flow, drained, f.pkt.uid);
    }
  }
  for (const FlowKey& flow : delivered_flows_) {
    auto it = rev_.find(flow);
    if (it != rev_.end() && it->second.state == RouteState::kUp &&
        now < it->second.expires_at && it->second.next_hop == drained) {
      relay_rcr_toward_source(flow, drained, f.pkt.uid);
    }
  }
}

void SqAodvProtocol::act_on_drain(const FlowKey& flow, NodeId drained,
                                  std::uint64_t uid) {
  if (drained == flow.src) return;  // the source drains itself; nothing to save
  if (env_.self == flow.src) {
    if (drained == flow.dst) {
      // No detour can save a dying destination: tell the application.
      env_.end_session(flow, EndReason::kStopTraffic);
    } else if (!discovery_pending(flow)) {
      // Make-before-break: rebuild while the old route still carries data.
      start_discovery(flow, DiscoveryKind::kMbb);
    }
    return;
  }
  relay_rcr_toward_source(flow, drained, uid);
}

void SqAodvProtocol::relay_rcr_toward_source(const FlowKey& flow, NodeId drained,
                                             std::uint64_t uid) {
  if (!rcr_relayed_for_[flow].insert(drained).second) return;
  RouteEntry* back = usable(rev_, flow);
  if (back == nullptr) return;  // the break will surface reactively instead
  RrepBody rcr;
  rcr.rcr = true;
  rcr.drained = drained;
  rcr.flow = flow;
  rcr.timestamp = env_.queue->now();
  env_.medium->enqueue(env_.self, back->next_hop, Packet{uid, rcr},
                       TraceVerb::kFwd);
}

}  // namespace adhocsim
