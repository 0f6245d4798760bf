#include "adhocsim/medium.hpp"

#include <cstdio>
#include <string>
#include <utility>
#include <variant>

#include "adhocsim/contract.hpp"

namespace adhocsim {

namespace {
// Aux column for origination/relay lines: RREQs carry the accumulated
// bottleneck lifetime (evaluated at this transmission, for replay checks),
// RREPs their route lifetime, RCRs the drained node.
std::string frame_aux(const Packet& p) {
  if (const auto* r = std::get_if<RreqBody>(&p.body)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r->bottleneck_s);
    return buf;
  }
  if (const auto* r = std::get_if<RrepBody>(&p.body)) {
    if (r->rcr) return std::to_string(r->drained);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r->lifetime_s);
    return buf;
  }
  return "-";
}
}  // namespace

Medium::Medium(EventQueue& queue, const Topology& topo,
               std::vector<Battery>& batteries, const MediumParams& params,
               Proto proto, MetricsLedger& metrics, TraceWriter& trace)
    : queue_(queue),
      topo_(topo),
      batteries_(batteries),
      params_(params),
      proto_(proto),
      metrics_(metrics),
      trace_(trace) {
  contract_check(batteries_.size() == topo_.size(),
                 "medium: one battery per node required");
  contract_check(params_.data_rate_bps > 0.0, "medium: data rate must be > 0");
  contract_check(params_.queue_capacity > 0, "medium: queue capacity must be > 0");
  ifaces_.resize(topo_.size());
  in_flight_.resize(topo_.size());
}

double Medium::tx_duration(std::uint32_t size_bytes) const {
  return 8.0 * static_cast<double>(size_bytes) / params_.data_rate_bps;
}

void Medium::enqueue(NodeId sender, std::optional<NodeId> to, const Packet& pkt,
                     TraceVerb verb) {
  contract_check(sender < topo_.size(), "medium: sender out of range");
  contract_check(!to.has_value() || *to < topo_.size(),
                 "medium: receiver out of range");

  Frame f{sender, to, pkt, wire_size(pkt, proto_)};

  // The origination/relay line precedes any drop line for the same frame,
  // but a dead node never transmits, so it gets no SEND/FWD at all.
  bool sender_alive = batteries_[sender].alive();
  if (sender_alive && verb != TraceVerb::kNone) {
    trace_.pkt(queue_.now(),
               verb == TraceVerb::kSend ? TraceEvent::kSend : TraceEvent::kFwd,
               sender, pkt, f.size_bytes, frame_aux(pkt));
  }
  if (!sender_alive) {
    drop_frame(sender, f, DropCause::kNodeDead);
    return;
  }

  Iface& ifc = ifaces_[sender];
  if (ifc.q.size() >= params_.queue_capacity) {
    drop_frame(sender, f, DropCause::kQueueFull);
    return;
  }

  ifc.q.push_back(std::move(f));
  ++busy_frames_;
  if (!ifc.transmitting) start_transmission(sender);
}

void Medium::start_transmission(NodeId n) {
  Iface& ifc = ifaces_[n];
  contract_check(!ifc.transmitting, "medium: interface already transmitting");
  contract_check(!ifc.q.empty(), "medium: nothing to transmit");

  Frame f = std::move(ifc.q.front());
  ifc.q.pop_front();
  ifc.transmitting = true;
  in_flight_[n] = f;

  if (is_routing_frame(f.pkt)) metrics_.routing_tx();

  double dur = tx_duration(f.size_bytes);

  // All energy for this transmission is committed at its start: the sender
  // pays tx, every currently-alive neighbor pays rx (overhearing).  A death
  // triggered here does not abort the frame; it is already on the air.
  debit(n, params_.tx_power_w * dur);
  double rx_j = params_.rx_power_w * dur;
  for (NodeId nb : topo_.neighbors(n)) {
    if (batteries_[nb].alive()) debit(nb, rx_j);
  }

  queue_.schedule(queue_.now() + dur,
                  [this, n, fr = std::move(f)]() { finish_transmission(n, fr); });
}

void Medium::finish_transmission(NodeId n, const Frame& f) {
  Iface& ifc = ifaces_[n];
  contract_check(ifc.transmitting, "medium: finish without transmission");
  ifc.transmitting = false;
  contract_check(busy_frames_ > 0, "medium: busy frame underflow");
  --busy_frames_;

  if (f.to.has_value()) {
    NodeId to = *f.to;
    if (topo_.in_range(n, to) && batteries_[to].alive()) {
      client_->deliver(to, f);
    } else {
      client_->link_failed(f);
    }
  } else {
    for (NodeId nb : topo_.neighbors(n)) {
      // Aliveness is re-checked per receiver at delivery time; a reaction to
      // an earlier delivery of this same frame may have drained a later one.
      if (batteries_[nb].alive()) client_->deliver(nb, f);
    }
  }

  // A reaction above (a RERR after link_failed, say) may already have
  // restarted this interface through enqueue; the front frame it picked is
  // the oldest waiting one either way.
  if (batteries_[n].alive() && !ifc.transmitting && !ifc.q.empty())
    start_transmission(n);
}

void Medium::debit(NodeId n, double joules) {
  Battery& b = batteries_[n];
  if (!b.alive()) return;
  b.debit(joules);
  if (!b.alive()) on_death(n);
}

void Medium::on_death(NodeId n) {
  trace_.die(queue_.now(), n, batteries_[n].residual());
  metrics_.node_death(n, queue_.now());

  // Waiting frames die with the node; an in-flight frame completes.
  Iface& ifc = ifaces_[n];
  while (!ifc.q.empty()) {
    Frame f = std::move(ifc.q.front());
    ifc.q.pop_front();
    contract_check(busy_frames_ > 0, "medium: busy frame underflow");
    --busy_frames_;
    drop_frame(n, f, DropCause::kNodeDead);
  }

  if (client_ != nullptr) client_->node_died(n);
}

void Medium::drop_frame(NodeId at, const Frame& f, DropCause cause) {
  trace_.pkt(queue_.now(), TraceEvent::kDrop, at, f.pkt, f.size_bytes,
             to_string(cause));
  if (const auto* d = std::get_if<DataBody>(&f.pkt.body)) {
    metrics_.dropped(d->flow, cause);
  }
}

void Medium::purge(NodeId n, const std::function<bool(const DataBody&)>& pred,
                   DropCause cause) {
  contract_check(n < ifaces_.size(), "medium: purge node out of range");
  Iface& ifc = ifaces_[n];
  std::deque<Frame> kept;
  for (Frame& f : ifc.q) {
    const auto* d = std::get_if<DataBody>(&f.pkt.body);
    if (d != nullptr && pred(*d)) {
      contract_check(busy_frames_ > 0, "medium: busy frame underflow");
      --busy_frames_;
      drop_frame(n, f, cause);
    } else {
      kept.push_back(std::move(f));
    }
  }
  ifc.q.swap(kept);
}

void Medium::census_in_flight(MetricsLedger& m) const {
  for (std::size_t n = 0; n < ifaces_.size(); ++n) {
    for (const Frame& f : ifaces_[n].q) {
      if (const auto* d = std::get_if<DataBody>(&f.pkt.body)) m.in_flight(d->flow);
    }
    if (ifaces_[n].transmitting) {
      if (const auto* d = std::get_if<DataBody>(&in_flight_[n].pkt.body)) {
        m.in_flight(d->flow);
      }
    }
  }
}

}  // namespace adhocsim
