#include "adhocsim/mdr.hpp"

namespace adhocsim {

void MdrProtocol::route_established(const FlowKey& flow, bool first) {
  if (!first) return;
  Refresh& r = refresh_[flow];
  r.anchor = env_.queue->now();
  r.ticks = 0;
  r.active = true;
  std::uint64_t epoch = r.epoch;
  env_.queue->schedule(r.anchor + env_.cfg.refresh_interval_s,
                       [this, flow, epoch] { refresh_tick(flow, epoch); });
}

void MdrProtocol::refresh_tick(const FlowKey& flow, std::uint64_t epoch) {
  if (!env_.battery->alive()) return;
  auto it = refresh_.find(flow);
  if (it == refresh_.end()) return;
  Refresh& r = it->second;
  if (!r.active || r.epoch != epoch) return;

  ++r.ticks;
  // Flood regardless of route health; a still-unanswered discovery is simply
  // replaced (the destination cancels its stale collector on the newer bid).
  start_discovery(flow, DiscoveryKind::kRefresh);

  it = refresh_.find(flow);
  if (it == refresh_.end() || !it->second.active || it->second.epoch != epoch) {
    return;  // the flood's failure path ended the flow synchronously
  }
  if (!env_.battery->alive()) return;
  // Drift-free cadence: tick k sits at anchor + k * period regardless of how
  // long any discovery took.
  SimTime next = it->second.anchor +
                 static_cast<double>(it->second.ticks + 1) *
                     env_.cfg.refresh_interval_s;
  env_.queue->schedule(next, [this, flow, epoch] { refresh_tick(flow, epoch); });
}

void MdrProtocol::flow_finished(const FlowKey& flow, EndReason why) {
  FlowProtocolBase::flow_finished(flow, why);
  auto it = refresh_.find(flow);
  if (it != refresh_.end()) {
    ++it->second.epoch;
    it->second.active = false;
  }
}

}  // namespace adhocsim
