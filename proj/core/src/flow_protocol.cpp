#include "adhocsim/flow_protocol.hpp"

#include <algorithm>
#include <utility>
#include <variant>

#include "adhocsim/contract.hpp"

namespace adhocsim {

namespace {
std::uint32_t data_size(const DataBody& d) {
  return kDataHeaderBytes + d.payload_bytes;
}
}  // namespace

const RouteEntry* FlowProtocolBase::forward_route(const FlowKey& flow) const {
  auto it = fwd_.find(flow);
  return it == fwd_.end() ? nullptr : &it->second;
}

const RouteEntry* FlowProtocolBase::reverse_route(const FlowKey& flow) const {
  auto it = rev_.find(flow);
  return it == rev_.end() ? nullptr : &it->second;
}

std::size_t FlowProtocolBase::choose_candidate(const std::vector<Candidate>& cands) {
  contract_check(!cands.empty(), "flow: choosing from no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const Candidate& a = cands[i];
    const Candidate& b = cands[best];
    if (a.bottleneck_s > b.bottleneck_s) {
      best = i;
    } else if (a.bottleneck_s == b.bottleneck_s) {
      if (a.hop_count < b.hop_count ||
          (a.hop_count == b.hop_count && a.order < b.order)) {
        best = i;
      }
    }
  }
  return best;
}

RouteEntry* FlowProtocolBase::usable(std::map<FlowKey, RouteEntry>& table,
                                     const FlowKey& flow) {
  auto it = table.find(flow);
  if (it == table.end()) return nullptr;
  RouteEntry& e = it->second;
  if (e.state == RouteState::kUp && env_.queue->now() >= e.expires_at) {
    e.state = RouteState::kDown;
    ++e.dst_seq;
  }
  return e.state == RouteState::kUp ? &e : nullptr;
}

bool FlowProtocolBase::has_usable_forward(const FlowKey& flow) {
  return usable(fwd_, flow) != nullptr;
}

std::uint32_t FlowProtocolBase::max_sends(DiscoveryKind kind) const {
  if (kind == DiscoveryKind::kMbb) return env_.cfg.mbb_max_attempts;
  return 1 + env_.cfg.rreq_retries;
}

void FlowProtocolBase::drop_data(const DataBody& d, std::uint64_t uid,
                                 DropCause cause) {
  env_.trace->pkt(env_.queue->now(), TraceEvent::kDrop, env_.self,
                  Packet{uid, d}, data_size(d), to_string(cause));
  env_.metrics->dropped(d.flow, cause);
}

void FlowProtocolBase::forward_data(DataBody data, std::uint64_t uid,
                                    const RouteEntry& via, TraceVerb verb) {
  data.route_seq = via.dst_seq;
  env_.medium->enqueue(env_.self, via.next_hop, Packet{uid, data}, verb);
}

void FlowProtocolBase::install_forward(const FlowKey& flow, const RouteEntry& cand) {
  auto it = fwd_.find(flow);
  if (it == fwd_.end()) {
    fwd_[flow] = cand;
    return;
  }
  RouteEntry& inc = it->second;
  if (inc.state == RouteState::kUp && env_.queue->now() >= inc.expires_at) {
    inc.state = RouteState::kDown;
    ++inc.dst_seq;
  }
  if (!better_route(cand, inc)) return;
  if (inc.state == RouteState::kUp && inc.next_hop != cand.next_hop) {
    // Make-before-break switchover: packets stamped with the old generation
    // finish their segment on the shadow.
    fwd_shadows_[flow] =
        ShadowEntry{inc, env_.queue->now() + env_.cfg.shadow_life_s};
  }
  inc = cand;
}

void FlowProtocolBase::inject(const Packet& pkt) {
  const auto* d = std::get_if<DataBody>(&pkt.body);
  contract_check(d != nullptr, "flow: inject expects a data packet");
  contract_check(d->flow.src == env_.self, "flow: inject at non-source");
  if (!env_.battery->alive()) {
    drop_data(*d, pkt.uid, DropCause::kNodeDead);
    return;
  }

  RouteEntry* e = usable(fwd_, d->flow);
  if (e != nullptr) {
    e->expires_at = env_.queue->now() + env_.cfg.active_route_timeout_s;
    forward_data(*d, pkt.uid, *e, TraceVerb::kNone);
    return;
  }

  auto pit = pending_.find(d->flow);
  if (pit != pending_.end()) {
    pit->second.buffer.push_back(pkt);
    return;
  }
  pending_[d->flow].buffer.push_back(pkt);
  start_discovery(d->flow, DiscoveryKind::kData);
}

void FlowProtocolBase::start_discovery(const FlowKey& flow, DiscoveryKind kind) {
  // Single outstanding discovery per flow: a new one (e.g. a periodic
  // refresh) adopts the buffer and restarts the send budget.
  Pending& p = pending_[flow];
  env_.queue->cancel(p.retry);
  p.kind = kind;
  p.sends = 0;
  if (env_.observer != nullptr) {
    env_.observer->discovery_started(env_.self, flow.dst, bid_ + 1, flow);
  }
  send_rreq(flow, p);
}

void FlowProtocolBase::send_rreq(const FlowKey& flow, Pending& p) {
  ++own_seq_;
  ++bid_;
  p.bid = bid_;
  ++p.sends;

  RreqBody r;
  r.origin = env_.self;
  r.origin_seq = own_seq_;
  r.bid = bid_;
  r.dst = flow.dst;
  auto it = fwd_.find(flow);
  r.dst_seq = it != fwd_.end() ? it->second.dst_seq : 0;
  r.hop_count = 0;
  r.flow = flow;
  r.session_duration_s = rreq_duration(flow);
  r.bottleneck_s = kLifetimeCapS;  // source energy does not gate its own flow

  env_.medium->enqueue(env_.self, std::nullopt, Packet{env_.next_uid(), r},
                       TraceVerb::kSend);
  p.retry = env_.queue->schedule(
      env_.queue->now() + env_.cfg.retry_interval_s,
      [this, flow] { retry_timer_fired(flow); });
}

void FlowProtocolBase::retry_timer_fired(const FlowKey& flow) {
  if (!env_.battery->alive()) return;
  auto it = pending_.find(flow);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  if (p.sends >= max_sends(p.kind)) {
    finish_discovery_failure(flow);
    return;
  }
  send_rreq(flow, p);
}

void FlowProtocolBase::finish_discovery_failure(const FlowKey& flow) {
  auto it = pending_.find(flow);
  contract_check(it != pending_.end(), "flow: failing unknown discovery");
  Pending p = std::move(it->second);
  pending_.erase(it);

  for (const Packet& pkt : p.buffer) {
    drop_data(std::get<DataBody>(pkt.body), pkt.uid, DropCause::kDiscoveryFail);
  }
  if (env_.observer != nullptr) {
    env_.observer->discovery_ended(env_.self, flow.dst, false);
  }
  // A failed make-before-break ends the session outright; other kinds end it
  // only when the flow is left with no working route.
  if (p.kind == DiscoveryKind::kMbb || !has_usable_forward(flow)) {
    env_.end_session(flow, EndReason::kRetriesExhausted);
  }
}

void FlowProtocolBase::receive(const Frame& f) {
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, DataBody>) {
          handle_data(f, body, f.pkt.uid);
        } else if constexpr (std::is_same_v<T, RreqBody>) {
          handle_rreq(f, body);
        } else if constexpr (std::is_same_v<T, RrepBody>) {
          handle_rrep(f, body);
        } else if constexpr (std::is_same_v<T, RerrBody>) {
          handle_rerr(f, body);
        }
      },
      f.pkt.body);
}

void FlowProtocolBase::handle_data(const Frame& f, DataBody data,
                                   std::uint64_t uid) {
  ++data.hops;
  SimTime now = env_.queue->now();
  const FlowKey& flow = data.flow;

  // Any data arrival refreshes the reverse path: drain warnings travel to
  // the source over exactly the links the data came in on.
  RouteEntry& rv = rev_[flow];
  rv.next_hop = f.sender;
  rv.state = RouteState::kUp;
  rv.expires_at = now + env_.cfg.active_route_timeout_s;

  if (flow.dst == env_.self) {
    env_.metrics->delivered(flow, now - data.injected_at, data.hops);
    env_.trace->pkt(now, TraceEvent::kRecv, env_.self, Packet{uid, data},
                    data_size(data), std::to_string(data.hops));
    delivered_here(flow);
    return;
  }

  auto it = fwd_.find(flow);
  RouteEntry* e = it != fwd_.end() ? &it->second : nullptr;
  if (e != nullptr && e->state == RouteState::kUp && now >= e->expires_at) {
    e->state = RouteState::kDown;
    ++e->dst_seq;
  }

  if (e != nullptr && e->state == RouteState::kUp && e->dst_seq == data.route_seq) {
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    forward_data(data, uid, *e, TraceVerb::kFwd);
    return;
  }
  auto sh = fwd_shadows_.find(flow);
  if (sh != fwd_shadows_.end() && now < sh->second.expires_at &&
      sh->second.entry.dst_seq == data.route_seq) {
    forward_data(data, uid, sh->second.entry, TraceVerb::kFwd);
    return;
  }
  if (e != nullptr && e->state == RouteState::kUp) {
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    forward_data(data, uid, *e, TraceVerb::kFwd);
    return;
  }

  drop_data(data, uid, DropCause::kNoRoute);
  RerrBody rerr;
  rerr.items.push_back({flow.dst, e != nullptr ? e->dst_seq : 0, flow});
  env_.medium->enqueue(env_.self, std::nullopt,
                       Packet{env_.next_uid(), std::move(rerr)},
                       TraceVerb::kSend);
}

void FlowProtocolBase::handle_rreq(const Frame& f, RreqBody rreq) {
  if (rreq.origin == env_.self) return;
  contract_check(rreq.flow.has_value(), "flow: RREQ without flow key");
  const FlowKey flow = *rreq.flow;
  SimTime now = env_.queue->now();
  NodeId prev = f.sender;

  // The destination sees every copy; path diversity is the whole point of
  // the wait rule.  Everyone else suppresses duplicates.
  if (flow.dst == env_.self) {
    collect(f, rreq);
    return;
  }
  if (!seen_.insert({rreq.origin, rreq.bid}).second) return;

  RouteEntry rev;
  rev.next_hop = prev;
  rev.hop_count = rreq.hop_count + 1;
  rev.dst_seq = rreq.origin_seq;
  rev.state = RouteState::kUp;
  rev.expires_at = now + env_.cfg.reverse_route_life_s;
  auto rit = rev_.find(flow);
  if (rit == rev_.end() || better_route(rev, rit->second)) rev_[flow] = rev;

  if (!admit(rreq)) {
    env_.trace->pkt(now, TraceEvent::kDrop, env_.self, f.pkt, f.size_bytes,
                    "admission_reject");
    return;
  }

  RreqBody relay = rreq;
  ++relay.hop_count;
  relay.bottleneck_s = std::min(relay.bottleneck_s, env_.battery->lifetime());
  if (env_.observer != nullptr) {
    env_.observer->request_relayed(env_.self, relay.origin, relay.bid, prev,
                                   relay.bottleneck_s);
  }
  double jitter = env_.rng->uniform(0.0, env_.cfg.relay_jitter_max_s);
  std::uint64_t uid = f.pkt.uid;
  env_.queue->schedule(now + jitter, [this, relay, uid] {
    if (!env_.battery->alive()) return;
    env_.medium->enqueue(env_.self, std::nullopt, Packet{uid, relay},
                         TraceVerb::kFwd);
  });
}

void FlowProtocolBase::collect(const Frame& f, const RreqBody& rreq) {
  const FlowKey flow = *rreq.flow;
  auto rit = replied_.find(flow);
  if (rit != replied_.end() && rreq.bid <= rit->second) return;

  auto it = collectors_.find(flow);
  if (it != collectors_.end()) {
    Collector& c = it->second;
    if (rreq.bid < c.bid) return;  // copy from a superseded discovery
    if (rreq.bid > c.bid) {
      if (env_.observer != nullptr) {
        env_.observer->collector_cancelled(env_.self, rreq.origin, c.bid);
      }
      env_.queue->cancel(c.deadline);
      collectors_.erase(it);
      it = collectors_.end();
    }
  }

  SimTime now = env_.queue->now();
  if (it == collectors_.end()) {
    Collector c;
    c.bid = rreq.bid;
    c.origin_seq = rreq.origin_seq;
    c.rreq_dst_seq = rreq.dst_seq;
    c.first_at = now;
    FlowKey key = flow;
    c.deadline = env_.queue->schedule(now + env_.cfg.collect_window_s,
                                      [this, key] { collector_fire(key); });
    it = collectors_.emplace(flow, std::move(c)).first;
  }

  Collector& c = it->second;
  for (const Candidate& cand : c.cands) {
    if (cand.prev == f.sender) return;  // same previous hop: keep first copy
  }
  Candidate cand;
  cand.prev = f.sender;
  cand.bottleneck_s = rreq.bottleneck_s;
  cand.hop_count = rreq.hop_count + 1;
  cand.order = static_cast<std::uint32_t>(c.cands.size());
  c.cands.push_back(cand);
  if (env_.observer != nullptr) {
    env_.observer->candidate_retained(env_.self, rreq.origin, rreq.bid,
                                      cand.prev, cand.bottleneck_s,
                                      cand.hop_count);
  }
  if (c.cands.size() >= env_.cfg.collect_max_candidates) {
    env_.queue->cancel(c.deadline);
    collector_fire(flow);
  }
}

void FlowProtocolBase::collector_fire(const FlowKey& flow) {
  auto it = collectors_.find(flow);
  if (it == collectors_.end()) return;  // superseded or node died
  Collector c = std::move(it->second);
  collectors_.erase(it);
  contract_check(!c.cands.empty(), "flow: collector fired with no candidates");
  replied_[flow] = c.bid;

  std::size_t win = choose_candidate(c.cands);
  const Candidate& w = c.cands[win];
  SimTime now = env_.queue->now();

  RouteEntry rev;
  rev.next_hop = w.prev;
  rev.hop_count = w.hop_count;
  rev.dst_seq = c.origin_seq;
  rev.state = RouteState::kUp;
  rev.expires_at = now + env_.cfg.reverse_route_life_s;
  auto rvit = rev_.find(flow);
  if (rvit == rev_.end() || better_route(rev, rvit->second)) rev_[flow] = rev;

  own_seq_ = std::max(own_seq_, c.rreq_dst_seq) + 1;

  RrepBody rep;
  rep.origin = flow.src;
  rep.dst = env_.self;
  rep.dst_seq = own_seq_;
  rep.hop_count = 0;
  rep.lifetime_s = w.bottleneck_s;
  rep.timestamp = now;
  rep.flow = flow;
  if (env_.observer != nullptr) {
    env_.observer->reply_sent(env_.self, flow.src, c.bid, w.prev, w.bottleneck_s);
  }
  env_.medium->enqueue(env_.self, w.prev, Packet{env_.next_uid(), rep},
                       TraceVerb::kSend);
}

void FlowProtocolBase::handle_rrep(const Frame& f, RrepBody rrep) {
  if (rrep.rcr) {
    handle_rcr(f, rrep);
    return;
  }
  contract_check(rrep.flow.has_value(), "flow: RREP without flow key");
  const FlowKey flow = *rrep.flow;
  SimTime now = env_.queue->now();

  RouteEntry cand;
  cand.next_hop = f.sender;
  cand.hop_count = rrep.hop_count + 1;
  cand.dst_seq = rrep.dst_seq;
  cand.state = RouteState::kUp;
  cand.expires_at =
      now + std::clamp(rrep.lifetime_s, 0.0, env_.cfg.active_route_timeout_s);
  install_forward(flow, cand);

  if (rrep.origin == env_.self) {
    auto pit = pending_.find(flow);
    if (pit == pending_.end()) return;  // a reply we no longer wait for
    RouteEntry* e = usable(fwd_, flow);
    if (e == nullptr) return;  // stale reply lost to a fresher dead route
    Pending p = std::move(pit->second);
    pending_.erase(pit);
    env_.queue->cancel(p.retry);
    if (env_.observer != nullptr) {
      env_.observer->discovery_ended(env_.self, flow.dst, true);
    }
    bool first = established_.insert(flow).second;
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    for (const Packet& pkt : p.buffer) {
      forward_data(std::get<DataBody>(pkt.body), pkt.uid, *e, TraceVerb::kNone);
    }
    route_established(flow, first);
    return;
  }

  RouteEntry* back = usable(rev_, flow);
  if (back == nullptr) {
    env_.trace->pkt(now, TraceEvent::kDrop, env_.self, f.pkt, f.size_bytes,
                    "no_route");
    return;
  }
  RrepBody relay = rrep;
  ++relay.hop_count;
  env_.medium->enqueue(env_.self, back->next_hop, Packet{f.pkt.uid, relay},
                       TraceVerb::kFwd);
}

void FlowProtocolBase::handle_rerr(const Frame& f, const RerrBody& rerr) {
  NodeId from = f.sender;
  std::vector<RerrBody::Unreachable> fwd_items;
  for (const auto& item : rerr.items) {
    if (!item.flow.has_value()) continue;
    const FlowKey& flow = *item.flow;
    auto it = fwd_.find(flow);
    if (it == fwd_.end()) continue;
    RouteEntry& e = it->second;
    if (e.state != RouteState::kUp || e.next_hop != from) continue;
    e.state = RouteState::kDown;
    e.dst_seq = std::max(e.dst_seq, item.dst_seq);
    FlowKey key = flow;
    env_.medium->purge(
        env_.self, [key](const DataBody& d) { return d.flow == key; },
        DropCause::kLinkBreak);
    if (flow.src != env_.self) {
      fwd_items.push_back({item.dst, e.dst_seq, flow});
    }
    // The source rebuilds lazily: the next injection finds no usable route
    // and starts a discovery with the buffer behind it.
  }
  if (!fwd_items.empty()) {
    env_.medium->enqueue(env_.self, std::nullopt,
                         Packet{env_.next_uid(), RerrBody{std::move(fwd_items)}},
                         TraceVerb::kSend);
  }
}

void FlowProtocolBase::link_failed(const Frame& f) {
  const auto* d = std::get_if<DataBody>(&f.pkt.body);
  if (!env_.battery->alive()) {
    if (d != nullptr) drop_data(*d, f.pkt.uid, DropCause::kNodeDead);
    return;
  }
  contract_check(f.to.has_value(), "flow: broadcast cannot fail");
  NodeId lost = *f.to;
  std::vector<RerrBody::Unreachable> items;

  for (auto& [flow, e] : fwd_) {
    if (e.state == RouteState::kUp && e.next_hop == lost) {
      e.state = RouteState::kDown;
      ++e.dst_seq;
      if (flow.src != env_.self) items.push_back({flow.dst, e.dst_seq, flow});
    }
  }
  for (auto& [flow, e] : rev_) {
    if (e.state == RouteState::kUp && e.next_hop == lost) {
      e.state = RouteState::kDown;
      ++e.dst_seq;
    }
  }
  for (auto it = fwd_shadows_.begin(); it != fwd_shadows_.end();) {
    if (it->second.entry.next_hop == lost) {
      it = fwd_shadows_.erase(it);
    } else {
      ++it;
    }
  }

  if (d != nullptr) {
    const FlowKey flow = d->flow;
    if (flow.src == env_.self) {
      auto pit = pending_.find(flow);
      if (pit != pending_.end()) {
        pit->second.buffer.push_back(Packet{f.pkt.uid, *d});
      } else {
        pending_[flow].buffer.push_back(Packet{f.pkt.uid, *d});
        start_discovery(flow, DiscoveryKind::kData);
      }
    } else {
      drop_data(*d, f.pkt.uid, DropCause::kLinkBreak);
    }
  }

  if (!items.empty()) {
    env_.medium->enqueue(env_.self, std::nullopt,
                         Packet{env_.next_uid(), RerrBody{std::move(items)}},
                         TraceVerb::kSend);
  }
}

void FlowProtocolBase::flow_finished(const FlowKey& flow, EndReason why) {
  if (why == EndReason::kComplete) return;  // late packets may still make it
  auto pit = pending_.find(flow);
  if (pit == pending_.end()) return;
  env_.queue->cancel(pit->second.retry);
  for (const Packet& pkt : pit->second.buffer) {
    drop_data(std::get<DataBody>(pkt.body), pkt.uid, DropCause::kStopped);
  }
  pending_.erase(pit);
}

void FlowProtocolBase::on_death() {
  for (auto& [flow, p] : pending_) {
    env_.queue->cancel(p.retry);
    for (const Packet& pkt : p.buffer) {
      drop_data(std::get<DataBody>(pkt.body), pkt.uid, DropCause::kNodeDead);
    }
  }
  pending_.clear();
  for (auto& [flow, c] : collectors_) env_.queue->cancel(c.deadline);
  collectors_.clear();
  fwd_.clear();
  rev_.clear();
  fwd_shadows_.clear();
}

std::size_t FlowProtocolBase::busy() const {
  return pending_.size() + collectors_.size();
}

void FlowProtocolBase::census(MetricsLedger& m) const {
  for (const auto& [flow, p] : pending_) {
    for (const Packet& pkt : p.buffer) {
      m.in_flight(std::get<DataBody>(pkt.body).flow);
    }
  }
}

}  // namespace adhocsim
