#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>
#include <tuple>
#include <vector>

#include "adhocsim/contract.hpp"
#include "adhocsim/sqaodv.hpp"
#include "support/rig.hpp"

using namespace adhocsim;
using rigtest::MiniNet;
using rigtest::NodeInit;

namespace {

// Time-stamped discovery probe.  queue must be wired before the run.
struct TimedObserver : DiscoveryObserver {
  EventQueue* queue = nullptr;
  std::vector<std::tuple<NodeId, std::uint32_t, double>> started;
  std::vector<std::pair<NodeId, bool>> ended;
  std::vector<std::tuple<NodeId, bool, double, double>> admissions;
  std::vector<std::tuple<NodeId, double, std::uint32_t>> retained;  // prev, b, hops
  std::optional<std::pair<NodeId, double>> reply;  // chosen prev, bottleneck

  void discovery_started(NodeId origin, NodeId, std::uint32_t bid,
                         std::optional<FlowKey>) override {
    started.emplace_back(origin, bid, queue->now());
  }
  void discovery_ended(NodeId origin, NodeId, bool ok) override {
    ended.emplace_back(origin, ok);
  }
  void admission_checked(NodeId relay, std::uint32_t, bool admitted,
                         double residual_j, double needed_j) override {
    admissions.emplace_back(relay, admitted, residual_j, needed_j);
  }
  void candidate_retained(NodeId, NodeId, std::uint32_t, NodeId prev,
                          double bottleneck_s, std::uint32_t hops) override {
    retained.emplace_back(prev, bottleneck_s, hops);
  }
  void reply_sent(NodeId, NodeId, std::uint32_t, NodeId chosen_prev,
                  double bottleneck_s) override {
    reply = {chosen_prev, bottleneck_s};
  }
};

// Two-path diamond: 0 -> {1, 2} -> 3, the relays out of range of each other.
std::vector<NodeInit> diamond(NodeInit i1, NodeInit i2) {
  i1.pos = {80, 60};
  i2.pos = {80, -60};
  return {{{0, 0}}, i1, i2, {{160, 0}}};
}

// Receive debit for one SQ-AODV request frame; relays pay it before their
// admission and lifetime computations run.
constexpr double kRreqRxJ = 0.2818 * 8 * 32 / 1e6;

}  // namespace

TEST_CASE("admission rule: strict inequality on declared need") {
  // Declared duration gates on duration * aedr.
  CHECK_FALSE(SqAodvProtocol::admissible(50.0, 0.6, 100.0, 5.0));
  CHECK(SqAodvProtocol::admissible(120.0, 1.0, 100.0, 5.0));
  // Unknown duration falls back to threshold1 seconds of drain.
  CHECK_FALSE(SqAodvProtocol::admissible(2.0, 0.5, std::nullopt, 5.0));
  CHECK(SqAodvProtocol::admissible(2.6, 0.5, std::nullopt, 5.0));
  // Boundary equality rejects in both forms.
  CHECK_FALSE(SqAodvProtocol::admissible(60.0, 0.6, 100.0, 5.0));
  CHECK_FALSE(SqAodvProtocol::admissible(2.5, 0.5, std::nullopt, 5.0));
  // A cold estimate (aedr 0) needs only a positive residual.
  CHECK(SqAodvProtocol::admissible(1e-12, 0.0, 100.0, 5.0));
  CHECK_FALSE(SqAodvProtocol::admissible(0.0, 0.0, 100.0, 5.0));
}

TEST_CASE("candidate choice: bottleneck desc, then hops asc, then order asc") {
  using C = FlowProtocolBase::Candidate;
  CHECK(FlowProtocolBase::choose_candidate({{1, 5.0, 2, 0}, {2, 7.0, 9, 1}}) == 1);
  CHECK(FlowProtocolBase::choose_candidate({{1, 7.0, 3, 0}, {2, 7.0, 2, 1}}) == 1);
  CHECK(FlowProtocolBase::choose_candidate({{1, 7.0, 2, 0}, {2, 7.0, 2, 1}}) == 0);
  CHECK(FlowProtocolBase::choose_candidate({{9, 1.0, 1, 0}}) == 0);
  std::vector<C> mixed{{1, 3.0, 4, 0}, {2, 8.0, 9, 1}, {3, 8.0, 5, 2},
                       {4, 8.0, 5, 3}, {5, 2.0, 1, 4}};
  CHECK(FlowProtocolBase::choose_candidate(mixed) == 2);
  CHECK_THROWS_AS(FlowProtocolBase::choose_candidate({}), ContractViolation);
}

TEST_CASE("destination waits the collect window and picks the max bottleneck") {
  TimedObserver obs;
  // I1 lifetime ~100 s, I2 ~500 s; both admissible without a duration.
  MiniNet net(diamond({{0, 0}, 50.0, 0.5}, {{0, 0}, 50.0, 0.1}), 100.0,
              Proto::kSqAodv, {}, 1, &obs);
  obs.queue = &net.queue;
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(2.0);

  CHECK(net.metrics.total_delivered() == 1);
  CHECK(obs.retained.size() == 2);
  REQUIRE(obs.reply.has_value());
  CHECK(obs.reply->first == 2);
  // Bottlenecks are computed after each relay paid one request rx debit.
  CHECK(obs.reply->second ==
        doctest::Approx((50.0 - kRreqRxJ) / 0.1).epsilon(1e-12));
  CHECK(net.walk_forward_route(flow) == std::vector<NodeId>{0, 2, 3});
  // Only two distinct previous hops exist, so the reply waited out the full
  // collect window; that wait is part of the first packet's delay.
  CHECK(*net.metrics.avg_delay() >= 0.25);
  CHECK(*net.metrics.avg_delay() <= 0.35);
  CHECK(*net.metrics.avg_hops() == doctest::Approx(2.0));
}

TEST_CASE("a third distinct previous hop releases the reply early") {
  TimedObserver obs;
  auto nodes = diamond({{0, 0}, 50.0, 0.5}, {{0, 0}, 50.0, 0.1});
  nodes.push_back({{80, 0}, 50.0, 0.25});  // I3: lifetime ~200 s
  MiniNet net(nodes, 100.0, Proto::kSqAodv, {}, 1, &obs);
  obs.queue = &net.queue;
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(2.0);

  CHECK(net.metrics.total_delivered() == 1);
  CHECK(obs.retained.size() == 3);
  REQUIRE(obs.reply.has_value());
  CHECK(obs.reply->first == 2);
  CHECK(net.walk_forward_route(flow) == std::vector<NodeId>{0, 2, 3});
  // No 0.25 s wait: the third copy fired the collector within jitter time.
  CHECK(*net.metrics.avg_delay() < 0.1);
}

TEST_CASE("relays reject flows whose declared duration they cannot carry") {
  TimedObserver obs;
  // I1 needs 120 * 0.1 = 12 J of margin, has 50: admit.  I2 needs 60: reject.
  MiniNet net(diamond({{0, 0}, 50.0, 0.1}, {{0, 0}, 50.0, 0.5}), 100.0,
              Proto::kSqAodv, {}, 1, &obs);
  obs.queue = &net.queue;
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow, 120.0);
  net.inject_data(flow);
  net.queue.run_until(2.0);

  CHECK(net.metrics.total_delivered() == 1);
  bool saw_reject = false;
  for (const auto& [relay, admitted, residual, needed] : obs.admissions) {
    if (relay == 2) {
      saw_reject = true;
      CHECK_FALSE(admitted);
      CHECK(needed == doctest::Approx(60.0).epsilon(1e-9));
      CHECK(residual == doctest::Approx(50.0 - kRreqRxJ).epsilon(1e-12));
    }
    if (relay == 1) CHECK(admitted);
  }
  CHECK(saw_reject);
  // The rejected branch never reached the destination.
  CHECK(obs.retained.size() == 1);
  REQUIRE(obs.reply.has_value());
  CHECK(obs.reply->first == 1);
  CHECK(obs.reply->second ==
        doctest::Approx((50.0 - kRreqRxJ) / 0.1).epsilon(1e-12));
  CHECK(net.walk_forward_route(flow) == std::vector<NodeId>{0, 1, 3});
}

TEST_CASE("a draining destination makes the source stop the session") {
  // D sits below its drain warning line from the start (0.4 J < 1 s * 0.5 W)
  // but only participates once traffic has been delivered to it.
  std::vector<NodeInit> nodes = diamond({{0, 0}, 50.0, 0.1}, {{0, 0}, 50.0, 0.5});
  nodes[3].energy_j = 0.4;
  nodes[3].aedr_w = 0.5;
  MiniNet net(nodes, 100.0, Proto::kSqAodv);
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.run_until(1.0);

  CHECK(net.metrics.total_delivered() == 1);
  REQUIRE(net.ended.size() == 1);
  CHECK(net.ended[0].first == flow);
  CHECK(net.ended[0].second == EndReason::kStopTraffic);
}

TEST_CASE("drained relay with no admissible alternative: MBB fails, zero loss") {
  TimedObserver obs;
  // I1 admits (0.6 > 5 * 0.1) and carries the flow; I2 can never admit
  // (0.4 < 0.5).  Relaying drains I1 below its warning line (0.1 J), the
  // make-before-break flood finds nothing, and the session is declared over
  // while the old route keeps delivering.
  MiniNet net(diamond({{0, 0}, 0.6, 0.1}, {{0, 0}, 0.4, 0.1}), 100.0,
              Proto::kSqAodv, {}, 1, &obs);
  obs.queue = &net.queue;
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  const int kPackets = 240;
  for (int k = 0; k < kPackets; ++k) {
    net.queue.schedule(0.05 + k * 0.02, [&net, flow] { net.inject_data(flow); });
  }
  net.queue.run_until(15.0);

  CHECK(net.metrics.total_delivered() == kPackets);
  CHECK(net.metrics.total_dropped() == 0);
  // Initial discovery plus exactly one make-before-break attempt.
  REQUIRE(obs.started.size() == 2);
  REQUIRE(obs.ended.size() == 2);
  CHECK(obs.ended[0].second == true);
  CHECK(obs.ended[1].second == false);
  REQUIRE(net.ended.size() == 1);
  CHECK(net.ended[0].second == EndReason::kRetriesExhausted);
  // The drain episode really happened and the relay survived it.
  CHECK(net.batteries[1].alive());
  CHECK(net.batteries[1].residual() < 0.1);
  bool mbb_reject_i1 = false, mbb_reject_i2 = false;
  for (const auto& [relay, admitted, residual, needed] : obs.admissions) {
    if (!admitted && relay == 1) mbb_reject_i1 = true;
    if (!admitted && relay == 2) mbb_reject_i2 = true;
  }
  CHECK(mbb_reject_i1);
  CHECK(mbb_reject_i2);
  CHECK(net.flow_proto(0)->busy() == 0);
}

TEST_CASE("MDR refreshes on a drift-free cadence anchored at establishment") {
  TimedObserver obs;
  std::vector<NodeInit> chain{{{0, 0}}, {{100, 0}}, {{200, 0}}, {{300, 0}}};
  MiniNet net(chain, 100.0, Proto::kMdr, {}, 1, &obs);
  obs.queue = &net.queue;
  FlowKey flow{0, 3, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.queue.schedule(12.0, [&net, flow] { net.inject_data(flow); });
  net.queue.schedule(22.0, [&net, flow] { net.inject_data(flow); });
  // End the flow between the second and third refresh; the epoch guard must
  // silence the already-scheduled timer.
  net.queue.schedule(25.0, [&net, flow] {
    net.active_flows.erase(flow);
    net.protocols[0]->flow_finished(flow, EndReason::kStopTraffic);
  });
  net.queue.run_until(40.0);

  CHECK(net.metrics.total_delivered() == 3);
  // Initial discovery at ~0, refreshes at anchor+10 and anchor+20, none at
  // anchor+30.
  REQUIRE(obs.started.size() == 3);
  double t1 = std::get<2>(obs.started[1]);
  double t2 = std::get<2>(obs.started[2]);
  CHECK(t2 - t1 == doctest::Approx(10.0).epsilon(1e-12));
  // The chain destination sees one previous hop, so establishment waited the
  // 0.25 s collect window: the anchor sits near 0.25, the refresh near 10.25.
  CHECK(t1 > 10.2);
  CHECK(t1 < 10.4);
}

TEST_CASE("ending a flow mid-discovery drops its buffer as stopped") {
  std::vector<NodeInit> nodes{{{0, 0}}, {{50, 0}}, {{1000, 1000}}};
  MiniNet net(nodes, 100.0, Proto::kSqAodv);
  FlowKey flow{0, 2, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.inject_data(flow);
  CHECK(net.flow_proto(0)->busy() == 1);
  net.queue.schedule(0.5, [&net, flow] {
    net.active_flows.erase(flow);
    net.protocols[0]->flow_finished(flow, EndReason::kStopTraffic);
  });
  net.queue.run_until(20.0);
  CHECK(net.metrics.dropped_by_cause(DropCause::kStopped) == 2);
  CHECK(net.metrics.total_dropped() == 2);
  CHECK(net.flow_proto(0)->busy() == 0);
  // The cancelled retry timer must not fire a failure afterwards.
  CHECK(net.ended.empty());
}

TEST_CASE("natural completion keeps late discoveries alive") {
  std::vector<NodeInit> nodes{{{0, 0}}, {{50, 0}}, {{1000, 1000}}};
  MiniNet net(nodes, 100.0, Proto::kSqAodv);
  FlowKey flow{0, 2, 1};
  net.begin_flow(flow);
  net.inject_data(flow);
  net.protocols[0]->flow_finished(flow, EndReason::kComplete);
  net.queue.run_until(20.0);
  // The buffer ran its full retry budget and failed normally.
  CHECK(net.metrics.dropped_by_cause(DropCause::kDiscoveryFail) == 1);
  REQUIRE(net.ended.size() == 1);
  CHECK(net.ended[0].second == EndReason::kRetriesExhausted);
}
