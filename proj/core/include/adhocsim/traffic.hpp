#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "adhocsim/event_queue.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/protocol.hpp"
#include "adhocsim/rng.hpp"
#include "adhocsim/trace.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

struct SessionPlan {
  FlowKey flow;
  enum Kind { kCbr, kPoisson } kind = kCbr;
  double cbr_pps = 0.0;          // kCbr: packets per second
  double poisson_mean_s = 0.0;   // kPoisson: mean inter-arrival
  std::uint64_t packet_count = 0;  // 0 = open-ended (runs to horizon)
  double start_s = 0.0;
  std::uint16_t payload_bytes = 512;
};

// Session-based traffic generation and lifecycle.  CBR arrival k fires at
// start + k/rate computed from k (no drift accumulation); Poisson gaps come
// from the per-session stream.  A data packet's trace lifecycle begins with
// its SEND line at injection, so discovery latency counts toward its delay.
class TrafficManager {
 public:
  TrafficManager(EventQueue& queue, MetricsLedger& metrics, TraceWriter& trace,
                 std::uint64_t seed, std::function<std::uint64_t()> next_uid);

  void add_session(const SessionPlan& plan);

  // Protocols are wired after construction (they need the callbacks below).
  void set_protocols(std::vector<RoutingProtocol*> protocols);

  // Schedules session starts; call once before running.
  void start();

  // Terminal end of a locally originated session (protocol or death driven).
  // Completion is recorded internally when the last packet is generated.
  void end_session(const FlowKey& flow, EndReason why);

  // Ends every active session originated at n.
  void source_died(NodeId n);

  bool session_active(const FlowKey& flow) const;

  // Time left of the declared duration; absent for open-ended sessions or
  // after the declared end has passed.
  std::optional<double> remaining_duration(const FlowKey& flow) const;

  // Declared duration: packet_count * mean inter-arrival (absent if open).
  static std::optional<double> declared_duration(const SessionPlan& plan);

  // Sessions that have not yet reached a terminal state (still generating).
  std::size_t unfinished() const { return unfinished_; }

 private:
  struct Session {
    SessionPlan plan;
    std::unique_ptr<RngStream> rng;
    std::uint64_t generated = 0;
    SimTime last_arrival = 0.0;
    bool started = false;
    bool ended = false;  // terminal (complete or ceased)
    EventQueue::Handle next = 0;
  };

  void schedule_next(Session& s);
  void generate(const FlowKey& flow);
  void finish(Session& s, EndReason why);

  EventQueue& queue_;
  MetricsLedger& metrics_;
  TraceWriter& trace_;
  std::uint64_t seed_;
  std::function<std::uint64_t()> next_uid_;
  std::vector<RoutingProtocol*> protocols_;
  std::map<FlowKey, Session> sessions_;
  std::size_t unfinished_ = 0;
};

}  // namespace adhocsim
