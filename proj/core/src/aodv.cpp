#include "adhocsim/aodv.hpp"

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

void AodvProtocol::start() {
  if (env_.cfg.hello_enabled) {
    env_.queue->schedule(env_.queue->now() + env_.cfg.hello_interval_s,
                         [this] { maybe_hello(); });
  }
}

void AodvProtocol::maybe_hello() {
  if (!env_.battery->alive()) return;
  env_.medium->enqueue(env_.self, std::nullopt,
                       Packet{env_.next_uid(), HelloBody{}}, TraceVerb::kSend);
  if (!env_.battery->alive()) return;  // the beacon itself may have killed us
  env_.queue->schedule(env_.queue->now() + env_.cfg.hello_interval_s,
                       [this] { maybe_hello(); });
}

const RouteEntry* AodvProtocol::route(NodeId dst) const {
  auto it = routes_.find(dst);
  return it == routes_.end() ? nullptr : &it->second;
}

RouteEntry* AodvProtocol::lookup(NodeId dst) {
  auto it = routes_.find(dst);
  if (it == routes_.end()) return nullptr;
  RouteEntry& e = it->second;
  if (e.state == RouteState::kUp && env_.queue->now() >= e.expires_at) {
    e.state = RouteState::kDown;
    ++e.dst_seq;  // stale information must lose to anything fresher
  }
  return &e;
}

bool AodvProtocol::install(NodeId dst, const RouteEntry& cand) {
  RouteEntry* inc = lookup(dst);
  if (inc == nullptr) {
    routes_[dst] = cand;
    return true;
  }
  if (!better_route(cand, *inc)) return false;
  if (inc->state == RouteState::kUp && inc->next_hop != cand.next_hop) {
    shadows_[dst] = ShadowEntry{*inc, env_.queue->now() + env_.cfg.shadow_life_s};
  }
  // Precursors survive replacement: upstream consumers do not disappear when
  // the path under them improves.
  std::set<NodeId> prec = std::move(inc->precursors);
  prec.insert(cand.precursors.begin(), cand.precursors.end());
  *inc = cand;
  inc->precursors = std::move(prec);
  return true;
}

void AodvProtocol::forward_data(DataBody data, std::uint64_t uid,
                                const RouteEntry& via, TraceVerb verb) {
  data.route_seq = via.dst_seq;
  env_.medium->enqueue(env_.self, via.next_hop, Packet{uid, data}, verb);
}

void AodvProtocol::drop_data(const DataBody& d, std::uint64_t uid, DropCause cause) {
  env_.trace->pkt(env_.queue->now(), TraceEvent::kDrop, env_.self,
                  Packet{uid, d}, data_size(d), to_string(cause));
  env_.metrics->dropped(d.flow, cause);
}

void AodvProtocol::inject(const Packet& pkt) {
  const auto* d = std::get_if<DataBody>(&pkt.body);
  contract_check(d != nullptr, "aodv: inject expects a data packet");
  if (!env_.battery->alive()) {
    drop_data(*d, pkt.uid, DropCause::kNodeDead);
    return;
  }

  NodeId dst = d->flow.dst;
  RouteEntry* e = lookup(dst);
  if (e != nullptr && e->state == RouteState::kUp) {
    e->expires_at = env_.queue->now() + env_.cfg.active_route_timeout_s;
    forward_data(*d, pkt.uid, *e, TraceVerb::kNone);
    return;
  }

  auto pit = pending_.find(dst);
  if (pit != pending_.end()) {
    pit->second.buffer.push_back(pkt);
    return;
  }
  pending_[dst].buffer.push_back(pkt);
  start_discovery(dst, /*repair=*/false, /*hop_cap=*/0);
}

void AodvProtocol::start_discovery(NodeId dst, bool repair, std::uint32_t hop_cap) {
  Pending& p = pending_[dst];
  p.repair = repair;
  p.repair_hop_cap = hop_cap;
  p.retries_used = 0;
  if (env_.observer != nullptr) {
    env_.observer->discovery_started(env_.self, dst, bid_ + 1, std::nullopt);
  }
  send_rreq(dst, p);
}

void AodvProtocol::send_rreq(NodeId dst, Pending& p) {
  ++own_seq_;
  ++bid_;
  p.bid = bid_;

  RreqBody r;
  r.origin = env_.self;
  r.origin_seq = own_seq_;
  r.bid = bid_;
  r.dst = dst;
  RouteEntry* e = lookup(dst);
  r.dst_seq = e != nullptr ? e->dst_seq : 0;
  r.hop_count = 0;

  env_.medium->enqueue(env_.self, std::nullopt, Packet{env_.next_uid(), r},
                       TraceVerb::kSend);
  p.retry = env_.queue->schedule(
      env_.queue->now() + env_.cfg.retry_interval_s,
      [this, dst] { retry_timer_fired(dst); });
}

void AodvProtocol::retry_timer_fired(NodeId dst) {
  if (!env_.battery->alive()) return;
  auto it = pending_.find(dst);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  if (p.retries_used >= env_.cfg.rreq_retries) {
    finish_discovery_failure(dst);
    return;
  }
  ++p.retries_used;
  send_rreq(dst, p);
}

void AodvProtocol::finish_discovery_failure(NodeId dst) {
  auto it = pending_.find(dst);
  contract_check(it != pending_.end(), "aodv: failing unknown discovery");
  Pending p = std::move(it->second);
  pending_.erase(it);

  DropCause cause = p.repair ? DropCause::kRepairFail : DropCause::kDiscoveryFail;
  for (const Packet& pkt : p.buffer) {
    drop_data(std::get<DataBody>(pkt.body), pkt.uid, cause);
  }
  if (env_.observer != nullptr) {
    env_.observer->discovery_ended(env_.self, dst, false);
  }
  if (p.repair) {
    RouteEntry* e = lookup(dst);
    if (e != nullptr && !e->precursors.empty()) {
      emit_rerr({RerrBody::Unreachable{dst, e->dst_seq, std::nullopt}});
    }
  }
}

void AodvProtocol::receive(const Frame& f) {
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
        } else if constexpr (std::is_same_v<T, HelloBody>) {
          handle_hello(f);
        }
        // StopBody is an application-layer artifact; nothing reaches here.
      },
      f.pkt.body);
}

void AodvProtocol::handle_data(const Frame& /*f*/, DataBody data,
                               std::uint64_t uid) {
  ++data.hops;
  SimTime now = env_.queue->now();

  if (data.flow.dst == env_.self) {
    env_.metrics->delivered(data.flow, now - data.injected_at, data.hops);
    env_.trace->pkt(now, TraceEvent::kRecv, env_.self, Packet{uid, data},
                    data_size(data), std::to_string(data.hops));
    return;
  }

  NodeId dst = data.flow.dst;
  RouteEntry* e = lookup(dst);

  // Same-generation entry first, then an unexpired shadow of that generation,
  // then adopt the current route (re-stamping the packet's generation).
  if (e != nullptr && e->state == RouteState::kUp && e->dst_seq == data.route_seq) {
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    forward_data(data, uid, *e, TraceVerb::kFwd);
    return;
  }
  auto sh = shadows_.find(dst);
  if (sh != shadows_.end() && now < sh->second.expires_at &&
      sh->second.entry.dst_seq == data.route_seq) {
    forward_data(data, uid, sh->second.entry, TraceVerb::kFwd);
    return;
  }
  if (e != nullptr && e->state == RouteState::kUp) {
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    forward_data(data, uid, *e, TraceVerb::kFwd);
    return;
  }

  auto pit = pending_.find(dst);
  if (pit != pending_.end()) {
    pit->second.buffer.push_back(Packet{uid, data});
    return;
  }

  drop_data(data, uid, DropCause::kNoRoute);
  emit_rerr({RerrBody::Unreachable{dst, e != nullptr ? e->dst_seq : 0,
                                   std::nullopt}});
}

void AodvProtocol::handle_rreq(const Frame& f, RreqBody rreq) {
  if (rreq.origin == env_.self) return;  // echo of our own flood
  if (!seen_.insert({rreq.origin, rreq.bid}).second) return;

  SimTime now = env_.queue->now();
  NodeId prev = f.sender;

  // Reverse route toward the originator rides the first copy.
  RouteEntry rev;
  rev.next_hop = prev;
  rev.hop_count = rreq.hop_count + 1;
  rev.dst_seq = rreq.origin_seq;
  rev.state = RouteState::kUp;
  rev.expires_at = now + env_.cfg.reverse_route_life_s;
  install(rreq.origin, rev);

  if (rreq.dst == env_.self) {
    own_seq_ = std::max(own_seq_, rreq.dst_seq) + 1;
    RrepBody rep;
    rep.origin = rreq.origin;
    rep.dst = env_.self;
    rep.dst_seq = own_seq_;
    rep.hop_count = 0;
    rep.lifetime_s = env_.cfg.active_route_timeout_s;
    rep.timestamp = now;
    RouteEntry* back = lookup(rreq.origin);
    contract_check(back != nullptr, "aodv: reverse route vanished");
    env_.medium->enqueue(env_.self, back->next_hop,
                         Packet{env_.next_uid(), rep}, TraceVerb::kSend);
    return;
  }

  RouteEntry* cached = lookup(rreq.dst);
  if (cached != nullptr && cached->state == RouteState::kUp &&
      cached->dst_seq >= rreq.dst_seq) {
    // Cached reply; both adjacent hops become precursors of the entries they
    // will use, so a later break can be reported upstream and downstream.
    cached->precursors.insert(prev);
    RouteEntry* back = lookup(rreq.origin);
    contract_check(back != nullptr, "aodv: reverse route vanished");
    back->precursors.insert(cached->next_hop);

    RrepBody rep;
    rep.origin = rreq.origin;
    rep.dst = rreq.dst;
    rep.dst_seq = cached->dst_seq;
    rep.hop_count = cached->hop_count;
    rep.lifetime_s = cached->expires_at - now;
    rep.timestamp = now;
    env_.medium->enqueue(env_.self, back->next_hop,
                         Packet{env_.next_uid(), rep}, TraceVerb::kSend);
    return;
  }

  RreqBody relay = rreq;
  ++relay.hop_count;
  if (cached != nullptr) relay.dst_seq = std::max(relay.dst_seq, cached->dst_seq);
  double jitter = env_.rng->uniform(0.0, env_.cfg.relay_jitter_max_s);
  std::uint64_t uid = f.pkt.uid;
  env_.queue->schedule(now + jitter, [this, relay, uid] {
    if (!env_.battery->alive()) return;
    env_.medium->enqueue(env_.self, std::nullopt, Packet{uid, relay},
                         TraceVerb::kFwd);
  });
}

void AodvProtocol::handle_rrep(const Frame& f, RrepBody rrep) {
  if (rrep.rcr) return;  // RCR is a per-flow protocol concept
  SimTime now = env_.queue->now();
  NodeId prev = f.sender;

  auto pit = pending_.find(rrep.dst);
  bool mine = rrep.origin == env_.self;
  if (mine && pit != pending_.end() && pit->second.repair &&
      rrep.hop_count + 1 > pit->second.repair_hop_cap) {
    return;  // repair must not lengthen the path past its cap
  }

  RouteEntry cand;
  cand.next_hop = prev;
  cand.hop_count = rrep.hop_count + 1;
  cand.dst_seq = rrep.dst_seq;
  cand.state = RouteState::kUp;
  double life = std::clamp(rrep.lifetime_s, 0.0, env_.cfg.active_route_timeout_s);
  cand.expires_at = now + life;
  install(rrep.dst, cand);

  if (mine) {
    if (pit == pending_.end()) return;  // late reply; route already updated
    RouteEntry* e = lookup(rrep.dst);
    if (e == nullptr || e->state != RouteState::kUp) return;  // keep waiting
    Pending p = std::move(pit->second);
    pending_.erase(pit);
    env_.queue->cancel(p.retry);
    if (env_.observer != nullptr) {
      env_.observer->discovery_ended(env_.self, rrep.dst, true);
    }
    e->expires_at = now + env_.cfg.active_route_timeout_s;
    for (const Packet& pkt : p.buffer) {
      forward_data(std::get<DataBody>(pkt.body), pkt.uid, *e, TraceVerb::kNone);
    }
    return;
  }

  RouteEntry* back = lookup(rrep.origin);
  if (back == nullptr || back->state != RouteState::kUp) {
    env_.trace->pkt(now, TraceEvent::kDrop, env_.self, f.pkt, kRrepBytes,
                    "no_route");
    return;
  }
  RouteEntry* fwd = lookup(rrep.dst);
  if (fwd != nullptr) fwd->precursors.insert(back->next_hop);
  RrepBody relay = rrep;
  ++relay.hop_count;
  env_.medium->enqueue(env_.self, back->next_hop, Packet{f.pkt.uid, relay},
                       TraceVerb::kFwd);
}

void AodvProtocol::invalidate_routes_via(NodeId lost,
                                         std::vector<RerrBody::Unreachable>& out) {
  for (auto& [dst, e] : routes_) {
    if (e.state == RouteState::kUp && e.next_hop == lost) {
      e.state = RouteState::kDown;
      ++e.dst_seq;
      out.push_back({dst, e.dst_seq, std::nullopt});
    }
  }
  for (auto it = shadows_.begin(); it != shadows_.end();) {
    if (it->second.entry.next_hop == lost) {
      it = shadows_.erase(it);
    } else {
      ++it;
    }
  }
}

void AodvProtocol::emit_rerr(std::vector<RerrBody::Unreachable> items) {
  contract_check(!items.empty(), "aodv: empty RERR");
  env_.medium->enqueue(env_.self, std::nullopt,
                       Packet{env_.next_uid(), RerrBody{std::move(items)}},
                       TraceVerb::kSend);
}

void AodvProtocol::link_failed(const Frame& f) {
  const auto* d = std::get_if<DataBody>(&f.pkt.body);
  if (!env_.battery->alive()) {
    if (d != nullptr) drop_data(*d, f.pkt.uid, DropCause::kNodeDead);
    return;
  }
  contract_check(f.to.has_value(), "aodv: broadcast cannot fail");
  NodeId lost = *f.to;

  std::vector<RerrBody::Unreachable> items;
  invalidate_routes_via(lost, items);

  std::optional<NodeId> repairing;
  if (d != nullptr) {
    NodeId dst = d->flow.dst;
    if (d->flow.src == env_.self) {
      // Source side: hold the packet and rediscover.
      auto pit = pending_.find(dst);
      if (pit != pending_.end()) {
        pit->second.buffer.push_back(Packet{f.pkt.uid, *d});
      } else {
        pending_[dst].buffer.push_back(Packet{f.pkt.uid, *d});
        start_discovery(dst, /*repair=*/false, /*hop_cap=*/0);
      }
    } else {
      auto pit = pending_.find(dst);
      RouteEntry* e = lookup(dst);
      if (pit != pending_.end()) {
        pit->second.buffer.push_back(Packet{f.pkt.uid, *d});
        if (pit->second.repair) repairing = dst;
      } else if (env_.cfg.local_repair && e != nullptr &&
                 e->hop_count <= env_.cfg.local_repair_max_hops_from_dst) {
        pending_[dst].buffer.push_back(Packet{f.pkt.uid, *d});
        repairing = dst;
        start_discovery(dst, /*repair=*/true, /*hop_cap=*/e->hop_count + 1);
      } else {
        drop_data(*d, f.pkt.uid, DropCause::kLinkBreak);
      }
    }
  }

  // Report breaks upstream, except for the destination under repair; its
  // outcome is decided when the repair resolves.
  std::vector<RerrBody::Unreachable> to_send;
  for (auto& item : items) {
    if (repairing.has_value() && item.dst == *repairing) continue;
    auto it = routes_.find(item.dst);
    if (it != routes_.end() && !it->second.precursors.empty()) {
      to_send.push_back(item);
    }
  }
  if (!to_send.empty()) emit_rerr(std::move(to_send));
}

void AodvProtocol::handle_rerr(const Frame& f, const RerrBody& rerr) {
  NodeId from = f.sender;
  std::vector<RerrBody::Unreachable> fwd_items;
  for (const auto& item : rerr.items) {
    auto it = routes_.find(item.dst);
    if (it == routes_.end()) continue;
    RouteEntry& e = it->second;
    if (e.state != RouteState::kUp || e.next_hop != from) continue;
    e.state = RouteState::kDown;
    e.dst_seq = std::max(e.dst_seq, item.dst_seq);
    NodeId dst = item.dst;
    env_.medium->purge(
        env_.self, [dst](const DataBody& d) { return d.flow.dst == dst; },
        DropCause::kLinkBreak);
    if (!e.precursors.empty()) {
      fwd_items.push_back({item.dst, e.dst_seq, std::nullopt});
    }
  }
  if (!fwd_items.empty()) emit_rerr(std::move(fwd_items));
}

void AodvProtocol::handle_hello(const Frame&) {
  // Beacons carry no state here; failure detection stays reactive.
}

void AodvProtocol::on_death() {
  for (auto& [dst, p] : pending_) {
    env_.queue->cancel(p.retry);
    for (const Packet& pkt : p.buffer) {
      drop_data(std::get<DataBody>(pkt.body), pkt.uid, DropCause::kNodeDead);
    }
  }
  pending_.clear();
  routes_.clear();
  shadows_.clear();
}

void AodvProtocol::census(MetricsLedger& m) const {
  for (const auto& [dst, p] : pending_) {
    for (const Packet& pkt : p.buffer) {
      m.in_flight(std::get<DataBody>(pkt.body).flow);
    }
  }
}

}  // namespace adhocsim
