#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <optional>
#include <vector>

#include "adhocsim/battery.hpp"
#include "adhocsim/contract.hpp"
#include "adhocsim/event_queue.hpp"
#include "adhocsim/medium.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/trace.hpp"

using namespace adhocsim;

TEST_CASE("make_grid is row-major with the documented coordinates") {
  auto pos = make_grid(4, 3, 250.0);
  REQUIRE(pos.size() == 12);
  CHECK(pos[0].x == 0.0);
  CHECK(pos[0].y == 0.0);
  // Node r*cols+c sits at (c*spacing, r*spacing).
  CHECK(pos[5].x == 2 * 250.0);  // r=1, c=2
  CHECK(pos[5].y == 1 * 250.0);
  CHECK(pos[11].x == 2 * 250.0);
  CHECK(pos[11].y == 3 * 250.0);
}

TEST_CASE("make_square_grid spans the area with k-1 spacing") {
  auto pos = make_square_grid(49, 540.0, 540.0);
  REQUIRE(pos.size() == 49);
  CHECK(pos[0].x == 0.0);
  CHECK(pos[48].x == doctest::Approx(540.0).epsilon(1e-15));
  CHECK(pos[48].y == doctest::Approx(540.0).epsilon(1e-15));
  CHECK(pos[1].x == doctest::Approx(90.0).epsilon(1e-15));
}

TEST_CASE("unit-disk connectivity is boundary inclusive and symmetric") {
  Topology t({{0, 0}, {250, 0}, {250.0001, 100000}}, 250.0);
  CHECK(t.in_range(0, 1));  // exactly at range
  CHECK(t.in_range(1, 0));
  CHECK_FALSE(t.in_range(0, 2));
  CHECK(t.distance(0, 1) == 250.0);
}

TEST_CASE("neighbor lists are sorted by id and exclude self") {
  // 7x7 lattice at 90 m spacing with 250 m range: the corner reaches the 7
  // nodes within 250 m (offsets (0,1),(1,0),(1,1),(0,2),(2,0),(1,2),(2,1));
  // (2,2) sits at 90*sqrt(8) = 254.6 m, out of range.
  Topology t(make_grid(7, 7, 90.0), 250.0);
  const auto& nb = t.neighbors(0);
  CHECK(nb == std::vector<NodeId>{1, 2, 7, 8, 9, 14, 15});
}

TEST_CASE("corner and center degrees in the 49-node lattice") {
  // Hand-counted oracle: corner degree 7, center degree 20 (all offsets
  // (dr,dc) with 90*hypot(dr,dc) <= 250, i.e. |dr|,|dc| <= 2 minus the four
  // (±2,±2) diagonals).
  Topology t(make_grid(7, 7, 90.0), 250.0);
  CHECK(t.neighbors(0).size() == 7);
  CHECK(t.neighbors(24).size() == 20);  // node (3,3)
}

namespace {

struct CapturingClient : MediumClient {
  std::vector<std::pair<NodeId, Frame>> delivered;
  std::vector<Frame> failed;
  std::vector<NodeId> died;
  void deliver(NodeId at, const Frame& f) override {
    delivered.emplace_back(at, f);
  }
  void link_failed(const Frame& f) override { failed.push_back(f); }
  void node_died(NodeId n) override { died.push_back(n); }
};

struct MediumFixture {
  EventQueue queue;
  Topology topo;
  std::vector<Battery> batteries;
  MetricsLedger metrics;
  TraceWriter trace;
  CapturingClient client;
  Medium medium;

  static std::vector<Battery> make_batteries(const std::vector<double>& energy) {
    std::vector<Battery> out;
    for (double e : energy) out.emplace_back(e);
    return out;
  }

  explicit MediumFixture(std::vector<Position> pos, std::vector<double> energy,
                         double range = 250.0)
      : topo(std::move(pos), range),
        batteries(make_batteries(energy)),
        metrics(topo.size()),
        medium(queue, topo, batteries, MediumParams{}, Proto::kAodv, metrics,
               trace) {
    medium.set_client(&client);
  }

  Packet data_packet(std::uint64_t uid, NodeId src, NodeId dst) {
    DataBody d;
    d.flow = FlowKey{src, dst, 1};
    d.injected_at = queue.now();
    return Packet{uid, d};
  }
};

constexpr double kDataTx = 8.0 * 532.0 / 1e6;          // 4.256 ms
constexpr double kDataEnergy = 0.2818 * kDataTx;       // per tx or rx
}  // namespace

TEST_CASE("tx duration is 8*bytes/rate") {
  MediumFixture f({{0, 0}, {100, 0}}, {10, 10});
  CHECK(f.medium.tx_duration(532) == kDataTx);
  CHECK(f.medium.tx_duration(24) == 8.0 * 24.0 / 1e6);
}

TEST_CASE("energy commits at transmission start, delivery at end") {
  MediumFixture f({{0, 0}, {100, 0}, {600, 0}}, {10, 10, 10});
  f.medium.enqueue(0, std::nullopt, f.data_packet(1, 0, 1), TraceVerb::kNone);

  // Sender and in-range neighbor paid immediately; the far node did not.
  CHECK(f.batteries[0].residual() == doctest::Approx(10.0 - kDataEnergy).epsilon(1e-12));
  CHECK(f.batteries[1].residual() == doctest::Approx(10.0 - kDataEnergy).epsilon(1e-12));
  CHECK(f.batteries[2].residual() == 10.0);
  CHECK(f.client.delivered.empty());

  f.queue.run_until(kDataTx);
  REQUIRE(f.client.delivered.size() == 1);
  CHECK(f.client.delivered[0].first == 1);
  CHECK(f.queue.now() == kDataTx);
}

TEST_CASE("rx debit applies to alive neighbors in sorted id order") {
  // Both neighbors hold exactly one rx debit of energy; the frame kills
  // both at transmission start and the death log preserves id order.
  MediumFixture f({{0, 0}, {100, 0}, {0, 100}}, {10, kDataEnergy, kDataEnergy});
  f.medium.enqueue(0, std::nullopt, f.data_packet(1, 0, 1), TraceVerb::kNone);
  REQUIRE(f.metrics.death_log().size() == 2);
  CHECK(f.metrics.death_log()[0].second == 1);
  CHECK(f.metrics.death_log()[1].second == 2);
  CHECK(f.client.died == std::vector<NodeId>{1, 2});
  // Dead receivers get no delivery.
  f.queue.run_until(1.0);
  CHECK(f.client.delivered.empty());
}

TEST_CASE("unicast to a node that dies before tx end reports link_failed") {
  // Node 1 holds exactly two rx debits.  Frame 1's debit leaves one; frame
  // 2's debit at its own start kills node 1, so frame 1 is delivered (node
  // 1 was alive at frame 1's end) but frame 2's delivery recheck fails.
  MediumFixture f({{0, 0}, {100, 0}}, {10, 2 * kDataEnergy});
  f.medium.enqueue(0, 1, f.data_packet(1, 0, 1), TraceVerb::kNone);
  f.medium.enqueue(0, 1, f.data_packet(2, 0, 1), TraceVerb::kNone);
  f.queue.run_until(1.0);
  REQUIRE(f.client.delivered.size() == 1);
  CHECK(f.client.delivered[0].second.pkt.uid == 1);
  REQUIRE(f.client.failed.size() == 1);
  CHECK(f.client.failed[0].pkt.uid == 2);
}

TEST_CASE("unicast out of range fails at delivery time") {
  MediumFixture f({{0, 0}, {600, 0}}, {10, 10});
  f.medium.enqueue(0, 1, f.data_packet(1, 0, 1), TraceVerb::kNone);
  f.queue.run_until(1.0);
  CHECK(f.client.delivered.empty());
  REQUIRE(f.client.failed.size() == 1);
}

TEST_CASE("per-node transmissions serialize FIFO") {
  MediumFixture f({{0, 0}, {100, 0}}, {10, 10});
  f.medium.enqueue(0, 1, f.data_packet(1, 0, 1), TraceVerb::kNone);
  f.medium.enqueue(0, 1, f.data_packet(2, 0, 1), TraceVerb::kNone);
  f.medium.enqueue(0, 1, f.data_packet(3, 0, 1), TraceVerb::kNone);
  CHECK(f.medium.busy_frames() == 3);
  f.queue.run_until(10.0);
  REQUIRE(f.client.delivered.size() == 3);
  CHECK(f.client.delivered[0].second.pkt.uid == 1);
  CHECK(f.client.delivered[1].second.pkt.uid == 2);
  CHECK(f.client.delivered[2].second.pkt.uid == 3);
  // Serialized: deliveries at k * tx_duration.
  CHECK(f.medium.busy_frames() == 0);
}

TEST_CASE("the waiting queue holds 50 frames beyond the in-flight slot") {
  MediumFixture f({{0, 0}, {100, 0}}, {1000, 1000});
  for (std::uint64_t i = 1; i <= 52; ++i)
    f.medium.enqueue(0, 1, f.data_packet(i, 0, 1), TraceVerb::kNone);
  // 1 in flight + 50 waiting; the 52nd dropped as queue_full.
  CHECK(f.medium.busy_frames() == 51);
  CHECK(f.metrics.dropped_by_cause(DropCause::kQueueFull) == 1);
  f.queue.run_until(10.0);
  CHECK(f.client.delivered.size() == 51);
}

TEST_CASE("dead senders drop data with node_dead accounting") {
  MediumFixture f({{0, 0}, {100, 0}}, {1e-9, 10});
  f.batteries[0].debit(1e-9);  // exhaust: node 0 is dead
  REQUIRE_FALSE(f.batteries[0].alive());
  f.medium.enqueue(0, 1, f.data_packet(1, 0, 1), TraceVerb::kNone);
  CHECK(f.metrics.dropped_by_cause(DropCause::kNodeDead) == 1);
  CHECK(f.medium.busy_frames() == 0);
}

TEST_CASE("a sender dying mid-flight still completes the transmission") {
  // Node 0 starts a long transmission; node 2's frame debits node 0 at its
  // own start (overhearing) and kills it mid-flight.  The original frame
  // still reaches node 1, and node 0's waiting queue drains with cause.
  MediumFixture f({{0, 0}, {100, 0}, {0, 100}},
                  {kDataEnergy + 0.5 * kDataEnergy, 10, 10});
  f.medium.enqueue(0, 1, f.data_packet(1, 0, 1), TraceVerb::kNone);
  f.medium.enqueue(0, 1, f.data_packet(2, 0, 1), TraceVerb::kNone);  // waits
  f.queue.run_until(0.001);  // mid-flight of frame 1
  f.medium.enqueue(2, std::nullopt, f.data_packet(3, 2, 0), TraceVerb::kNone);
  // Node 0 paid rx for node 2's transmission and died.
  CHECK_FALSE(f.batteries[0].alive());
  CHECK(f.client.died == std::vector<NodeId>{0});
  // Its waiting frame 2 was dropped on death; frame 1 still lands.
  CHECK(f.metrics.dropped_by_cause(DropCause::kNodeDead) == 1);
  f.queue.run_until(1.0);
  bool frame1_delivered = false;
  for (auto& [at, fr] : f.client.delivered)
    if (at == 1 && fr.pkt.uid == 1) frame1_delivered = true;
  CHECK(frame1_delivered);
}

TEST_CASE("purge removes matching waiting data frames") {
  MediumFixture f({{0, 0}, {100, 0}}, {1000, 1000});
  for (std::uint64_t i = 1; i <= 5; ++i)
    f.medium.enqueue(0, 1, f.data_packet(i, 0, 1), TraceVerb::kNone);
  // In-flight frame 1 is untouchable; purge the waiting four.
  f.medium.purge(0, [](const DataBody&) { return true; },
                 DropCause::kLinkBreak);
  CHECK(f.metrics.dropped_by_cause(DropCause::kLinkBreak) == 4);
  f.queue.run_until(1.0);
  CHECK(f.client.delivered.size() == 1);
}

TEST_CASE("census accounts for queued and in-flight data at run end") {
  MediumFixture f({{0, 0}, {100, 0}}, {1000, 1000});
  FlowKey flow{0, 1, 1};
  for (std::uint64_t i = 1; i <= 3; ++i) {
    f.metrics.injected(flow);
    f.medium.enqueue(0, 1, f.data_packet(i, 0, 1), TraceVerb::kNone);
  }
  f.medium.census_in_flight(f.metrics);
  CHECK(f.metrics.total_in_flight() == 3);
  CHECK(f.metrics.flows().at(flow).in_flight == 3);
}
