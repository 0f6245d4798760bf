#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "adhocsim/protocol.hpp"
#include "adhocsim/route_table.hpp"

namespace adhocsim {

// Shared machinery for the per-flow protocols (SQ-AODV, MDR): FlowKey-keyed
// forward/reverse tables, flooding with bottleneck-lifetime accumulation,
// the destination wait rule (reply at min(first arrival + collect window,
// third distinct previous hop)), and flow-scoped error handling.
// Intermediates never answer from cache.  Subclasses supply the admission
// rule and per-protocol reactions.
class FlowProtocolBase : public RoutingProtocol {
 public:
  explicit FlowProtocolBase(ProtocolEnv env) : env_(std::move(env)) {}

  void inject(const Packet& pkt) override;
  void receive(const Frame& f) override;
  void link_failed(const Frame& f) override;
  void on_death() override;
  void flow_finished(const FlowKey& flow, EndReason why) override;
  std::size_t busy() const override;
  void census(MetricsLedger& m) const override;

  struct Candidate {
    NodeId prev = 0;
    double bottleneck_s = 0.0;
    std::uint32_t hop_count = 0;  // full path length origin -> dst
    std::uint32_t order = 0;      // arrival rank within the collector
  };
  // Declared destination rule: max bottleneck, then fewer hops, then
  // earliest arrival.  Exposed for oracle tests; cands must be non-empty.
  static std::size_t choose_candidate(const std::vector<Candidate>& cands);

  // Test access.
  const RouteEntry* forward_route(const FlowKey& flow) const;
  const RouteEntry* reverse_route(const FlowKey& flow) const;

 protected:
  enum class DiscoveryKind { kData, kMbb, kRefresh };

  struct Pending {
    DiscoveryKind kind = DiscoveryKind::kData;
    std::vector<Packet> buffer;
    std::uint32_t sends = 0;
    std::uint32_t bid = 0;
    EventQueue::Handle retry = 0;
  };

  // Subclass hooks.
  virtual bool admit(const RreqBody& rreq) = 0;  // relay admission rule
  virtual std::optional<double> rreq_duration(const FlowKey& flow) const = 0;
  // first is true the first time this flow's route exists at the source.
  virtual void route_established(const FlowKey& /*flow*/, bool /*first*/) {}
  // A data packet for flow was delivered here (self is the destination).
  virtual void delivered_here(const FlowKey& /*flow*/) {}

  void start_discovery(const FlowKey& flow, DiscoveryKind kind);
  bool has_usable_forward(const FlowKey& flow);
  RouteEntry* usable(std::map<FlowKey, RouteEntry>& table, const FlowKey& flow);
  void drop_data(const DataBody& d, std::uint64_t uid, DropCause cause);
  // Handles a route-change-request frame; base treats it as unknown.
  virtual void handle_rcr(const Frame& /*f*/, const RrepBody& /*rcr*/) {}
  bool discovery_pending(const FlowKey& flow) const { return pending_.count(flow) != 0; }
  std::uint32_t max_sends(DiscoveryKind kind) const;

  ProtocolEnv env_;
  std::map<FlowKey, RouteEntry> fwd_;   // toward flow.dst
  std::map<FlowKey, RouteEntry> rev_;   // toward flow.src
  std::map<FlowKey, ShadowEntry> fwd_shadows_;
  std::map<FlowKey, Pending> pending_;
  std::uint32_t own_seq_ = 0;
  std::uint32_t bid_ = 0;

 private:
  struct Collector {
    std::uint32_t bid = 0;
    std::uint32_t origin_seq = 0;
    std::uint32_t rreq_dst_seq = 0;
    SimTime first_at = 0.0;
    EventQueue::Handle deadline = 0;
    std::vector<Candidate> cands;
  };

  void handle_data(const Frame& f, DataBody data, std::uint64_t uid);
  void handle_rreq(const Frame& f, RreqBody rreq);
  void handle_rrep(const Frame& f, RrepBody rrep);
  void handle_rerr(const Frame& f, const RerrBody& rerr);
  void collect(const Frame& f, const RreqBody& rreq);
  void collector_fire(const FlowKey& flow);
  void send_rreq(const FlowKey& flow, Pending& p);
  void retry_timer_fired(const FlowKey& flow);
  void finish_discovery_failure(const FlowKey& flow);
  void forward_data(DataBody data, std::uint64_t uid, const RouteEntry& via,
                    TraceVerb verb);
  void install_forward(const FlowKey& flow, const RouteEntry& cand);

  std::map<FlowKey, Collector> collectors_;
  std::map<FlowKey, std::uint32_t> replied_;  // highest bid already answered
  std::set<std::pair<NodeId, std::uint32_t>> seen_;  // (origin, bid)
  std::set<FlowKey> established_;  // flows this source has routed at least once
};

}  // namespace adhocsim
