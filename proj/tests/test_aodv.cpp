#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>
#include <vector>

#include "adhocsim/aodv.hpp"
#include "support/rig.hpp"

using namespace adhocsim;
using rigtest::MiniNet;
using rigtest::NodeInit;

namespace {

// Counts discovery lifecycle events per origin.
struct DiscoveryCounter : DiscoveryObserver {
  std::vector<std::pair<NodeId, std::uint32_t>> started;  // (origin, bid)
  std::vector<std::pair<NodeId, bool>> ended;             // (origin, success)
  void discovery_started(NodeId origin, NodeId, std::uint32_t bid,
                         std::optional<FlowKey>) override {
    started.emplace_back(origin, bid);
  }
  void discovery_ended(NodeId origin, NodeId, bool ok) override {
    ended.emplace_back(origin, ok);
  }
};

std::vector<NodeInit> chain4() {
  // 0-1-2-3 at exactly the comm range; no shortcuts.
  return {{{0, 0}}, {{100, 0}}, {{200, 0}}, {{300, 0}}};
}

}  // namespace

TEST_CASE("chain discovery installs routes both ways and delivers") {
  DiscoveryCounter obs;
  MiniNet net(chain4(), 100.0, Proto::kAodv, {}, 1, &obs);
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(1.0);

  CHECK(net.metrics.total_delivered() == 1);
  CHECK(net.metrics.total_dropped() == 0);
  CHECK(*net.metrics.avg_hops() == doctest::Approx(3.0));
  // Flood: origin + two relays broadcast once each (duplicates suppressed);
  // reply: three unicast hops.
  CHECK(net.metrics.routing_tx_count() == 6);

  const RouteEntry* r0 = net.aodv(0)->route(3);
  REQUIRE(r0 != nullptr);
  CHECK(r0->state == RouteState::kUp);
  CHECK(r0->next_hop == 1);
  CHECK(r0->hop_count == 3);

  const RouteEntry* r1 = net.aodv(1)->route(3);
  REQUIRE(r1 != nullptr);
  CHECK(r1->next_hop == 2);
  CHECK(r1->hop_count == 2);
  CHECK(r1->precursors.count(0) == 1);

  // Reverse route at the destination, built from the RREQ.
  const RouteEntry* back = net.aodv(3)->route(0);
  REQUIRE(back != nullptr);
  CHECK(back->next_hop == 2);
  CHECK(back->hop_count == 3);

  CHECK(net.walk_forward_route(flow) ==
        std::vector<NodeId>{0, 1, 2, 3});
  REQUIRE(obs.started.size() == 1);
  REQUIRE(obs.ended.size() == 1);
  CHECK(obs.ended[0].second == true);
}

TEST_CASE("packets injected during discovery are buffered then flushed in order") {
  MiniNet net(chain4(), 100.0, Proto::kAodv);
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.inject_data(flow);
  net.inject_data(flow);
  CHECK(net.aodv(0)->busy() == 1);  // one pending discovery
  net.queue.run_until(1.0);
  CHECK(net.metrics.total_delivered() == 3);
  CHECK(net.metrics.total_dropped() == 0);
  CHECK(net.aodv(0)->busy() == 0);
}

TEST_CASE("a warm intermediate answers from its cache without re-flooding") {
  // Chain plus a spur: node 4 is adjacent only to node 1.
  auto nodes = chain4();
  nodes.push_back({{100, 100}});
  MiniNet net(nodes, 100.0, Proto::kAodv);

  FlowKey warm{0, 3, 1};
  net.begin_flow(warm);
  net.inject_data(warm);
  net.queue.run_until(0.5);
  REQUIRE(net.metrics.total_delivered() == 1);
  std::uint64_t tx_before = net.metrics.routing_tx_count();

  FlowKey spur{4, 3, 2};
  net.begin_flow(spur);
  net.inject_data(spur);
  net.queue.run_until(1.0);

  CHECK(net.metrics.total_delivered() == 2);
  // One RREQ from node 4 plus node 1's cached RREP; a flood would have cost
  // more transmissions and would also be visible at nodes 0 and 2.
  CHECK(net.metrics.routing_tx_count() - tx_before == 2);
  const RouteEntry* r4 = net.aodv(4)->route(3);
  REQUIRE(r4 != nullptr);
  CHECK(r4->next_hop == 1);
  CHECK(r4->hop_count == 3);
  CHECK(net.walk_forward_route(spur) == std::vector<NodeId>{4, 1, 2, 3});
}

TEST_CASE("link failure invalidates, reports upstream, and rediscovery recovers") {
  DiscoveryCounter obs;
  MiniNet net(chain4(), 100.0, Proto::kAodv, {}, 1, &obs);
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(0.5);
  REQUIRE(net.metrics.total_delivered() == 1);

  // Hand node 1 the medium upcall it would get if its unicast to 2 had
  // failed while carrying a data packet of this flow.  Account the phantom
  // packet as injected so the per-flow ledger stays conserved.
  net.metrics.injected(flow);
  DataBody d;
  d.flow = flow;
  d.injected_at = net.queue.now();
  d.route_seq = net.aodv(1)->route(3)->dst_seq;
  Frame broken;
  broken.sender = 1;
  broken.to = 2;
  broken.pkt = Packet{9001, d};
  broken.size_bytes = kDataHeaderBytes + d.payload_bytes;
  net.queue.schedule(0.5, [&] { net.aodv(1)->link_failed(broken); });
  net.queue.run_until(0.6);

  // No local repair: the intermediate drops the packet and sends an RERR
  // that downs the upstream route; node 2's own route is untouched.
  CHECK(net.metrics.dropped_by_cause(DropCause::kLinkBreak) == 1);
  CHECK(net.aodv(1)->route(3)->state == RouteState::kDown);
  CHECK(net.aodv(0)->route(3)->state == RouteState::kDown);
  CHECK(net.aodv(2)->route(3)->state == RouteState::kUp);

  // The next injection finds the downed route and rediscovers; the bumped
  // sequence number makes node 1's stale cache unusable, so the request
  // reaches the destination, which replies fresher than everything seen.
  net.inject_data(flow);
  net.queue.run_until(1.5);
  CHECK(net.metrics.total_delivered() == 2);
  CHECK(net.aodv(0)->route(3)->state == RouteState::kUp);
  CHECK(net.aodv(3)->own_seq() == 3);
  CHECK(obs.started.size() == 2);
}

TEST_CASE("unreachable destination: fixed-interval retries then discovery failure") {
  DiscoveryCounter obs;
  std::vector<NodeInit> nodes{{{0, 0}}, {{50, 0}}, {{1000, 1000}}};
  MiniNet net(nodes, 100.0, Proto::kAodv, {}, 1, &obs);
  FlowKey flow{0, 2, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(20.0);

  // Four sends at t = 0, 2, 4, 6; failure declared at t = 8.
  CHECK(net.metrics.dropped_by_cause(DropCause::kDiscoveryFail) == 1);
  CHECK(net.metrics.total_delivered() == 0);
  // Each attempt is one origin broadcast plus one rebroadcast by node 1.
  CHECK(net.metrics.routing_tx_count() == 8);
  CHECK(net.aodv(0)->busy() == 0);
  REQUIRE(obs.started.size() == 1);
  REQUIRE(obs.ended.size() == 1);
  CHECK(obs.ended[0] == std::pair<NodeId, bool>{0, false});
}

TEST_CASE("active route timeout expires lazily and triggers rediscovery") {
  DiscoveryCounter obs;
  MiniNet net(chain4(), 100.0, Proto::kAodv, {}, 1, &obs);
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(0.5);
  REQUIRE(net.metrics.total_delivered() == 1);

  // Inside the timeout: direct forward, no new discovery.
  net.queue.schedule(5.0, [&] { net.inject_data(flow); });
  net.queue.run_until(6.0);
  CHECK(net.metrics.total_delivered() == 2);
  CHECK(obs.started.size() == 1);

  // The forward at t = 5 armed expiry at 15; idle past it.
  net.queue.schedule(15.5, [&] { net.inject_data(flow); });
  net.queue.run_until(17.0);
  CHECK(net.metrics.total_delivered() == 3);
  CHECK(obs.started.size() == 2);
}

TEST_CASE("death clears protocol state and drops buffered packets") {
  std::vector<NodeInit> nodes{{{0, 0}}, {{50, 0}}, {{1000, 1000}}};
  MiniNet net(nodes, 100.0, Proto::kAodv);
  FlowKey flow{0, 2, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.inject_data(flow);
  CHECK(net.aodv(0)->busy() == 1);
  net.aodv(0)->on_death();
  CHECK(net.aodv(0)->busy() == 0);
  CHECK(net.metrics.dropped_by_cause(DropCause::kNodeDead) == 2);
  CHECK(net.aodv(0)->route(2) == nullptr);
  // The cancelled retry timer must stay silent.
  net.queue.run_until(20.0);
  CHECK(net.metrics.total_dropped() == 2);
}

TEST_CASE("route preference: fresher sequence wins, then fewer hops") {
  RouteEntry a;
  a.dst_seq = 5;
  a.hop_count = 7;
  a.state = RouteState::kUp;
  RouteEntry b;
  b.dst_seq = 4;
  b.hop_count = 1;
  b.state = RouteState::kUp;
  CHECK(better_route(a, b));
  CHECK_FALSE(better_route(b, a));

  b.dst_seq = 5;
  CHECK(better_route(b, a));   // same seq, fewer hops
  CHECK_FALSE(better_route(a, b));

  // An Up candidate revives a Down incumbent at equal seq regardless of hops.
  RouteEntry down = a;
  down.state = RouteState::kDown;
  CHECK(better_route(a, down));
  CHECK_FALSE(better_route(down, a));

  // Exact tie keeps the incumbent.
  CHECK_FALSE(better_route(a, a));
}
