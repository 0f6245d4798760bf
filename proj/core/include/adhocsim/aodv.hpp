#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "adhocsim/protocol.hpp"
#include "adhocsim/route_table.hpp"

namespace adhocsim {

// Classic destination-keyed AODV: on-demand discovery with destination
// sequence numbers, intermediate cached replies, precursor-driven RERR
// propagation, and hop-bounded local repair.  No energy awareness.
class AodvProtocol : public RoutingProtocol {
 public:
  explicit AodvProtocol(ProtocolEnv env) : env_(std::move(env)) {}

  void start() override;
  void inject(const Packet& pkt) override;
  void receive(const Frame& f) override;
  void link_failed(const Frame& f) override;
  void on_death() override;
  std::size_t busy() const override { return pending_.size(); }
  void census(MetricsLedger& m) const override;

  // Test access.
  const RouteEntry* route(NodeId dst) const;
  std::uint32_t own_seq() const { return own_seq_; }

 private:
  struct Pending {
    std::vector<Packet> buffer;  // DataBody packets awaiting a route
    std::uint32_t retries_used = 0;
    std::uint32_t bid = 0;
    EventQueue::Handle retry = 0;
    bool repair = false;
    std::uint32_t repair_hop_cap = 0;  // accept only routes at most this long
  };

  void handle_data(const Frame& f, DataBody data, std::uint64_t uid);
  void handle_rreq(const Frame& f, RreqBody rreq);
  void handle_rrep(const Frame& f, RrepBody rrep);
  void handle_rerr(const Frame& f, const RerrBody& rerr);
  void handle_hello(const Frame& f);

  // Route lookup with lazy expiry: an expired Up entry flips to Down with
  // its sequence number bumped before the caller sees it.
  RouteEntry* lookup(NodeId dst);
  bool install(NodeId dst, const RouteEntry& cand);
  void forward_data(DataBody data, std::uint64_t uid, const RouteEntry& via,
                    TraceVerb verb);

  void start_discovery(NodeId dst, bool repair, std::uint32_t hop_cap);
  void send_rreq(NodeId dst, Pending& p);
  void retry_timer_fired(NodeId dst);
  void finish_discovery_failure(NodeId dst);

  void invalidate_routes_via(NodeId lost, std::vector<RerrBody::Unreachable>& out);
  void emit_rerr(std::vector<RerrBody::Unreachable> items);
  void drop_data(const DataBody& d, std::uint64_t uid, DropCause cause);
  void maybe_hello();

  ProtocolEnv env_;
  std::map<NodeId, RouteEntry> routes_;
  std::map<NodeId, ShadowEntry> shadows_;
  std::map<NodeId, Pending> pending_;
  std::set<std::pair<NodeId, std::uint32_t>> seen_;  // (origin, bid)
  std::uint32_t own_seq_ = 0;
  std::uint32_t bid_ = 0;
};

}  // namespace adhocsim
