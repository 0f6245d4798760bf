#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "adhocsim/battery.hpp"
#include "adhocsim/event_queue.hpp"
#include "adhocsim/medium.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/observer.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/rng.hpp"
#include "adhocsim/trace.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

struct ProtocolConfig {
  // Discovery.
  std::uint32_t rreq_retries = 3;     // attempts after the first
  double retry_interval_s = 2.0;
  double reverse_route_life_s = 3.0;
  double active_route_timeout_s = 10.0;
  double relay_jitter_max_s = 0.010;  // rebroadcast jitter at relays

  // AODV local repair (off by default, matching the classic baseline; the
  // repair path stays available as an option).
  bool local_repair = false;
  std::uint32_t local_repair_max_hops_from_dst = 2;

  // Energy awareness (SQ/MDR; AODV ignores all of these).
  double aedr_alpha = 0.5;
  double aedr_window_s = 1.0;
  double threshold1_s = 5.0;  // admission floor: energy for this many seconds
  double threshold2_s = 1.0;  // drain warning: energy for this many seconds
  double rcr_check_interval_s = 0.1;
  std::uint32_t mbb_max_attempts = 3;

  // Destination reply collection (SQ/MDR).
  double collect_window_s = 0.25;
  std::uint32_t collect_max_candidates = 3;

  // MDR periodic refresh.
  double refresh_interval_s = 10.0;

  // Shadow retention after in-place route replacement.
  double shadow_life_s = 1.0;

  // Optional HELLO beaconing (off everywhere by default).  Beacons cost
  // energy like any broadcast; link failure detection stays reactive.
  bool hello_enabled = false;
  double hello_interval_s = 1.0;

  bool operator==(const ProtocolConfig&) const = default;
};

// Per-node context handed to a protocol instance.  end_session reports a
// terminal outcome for a locally originated flow; session_active and
// remaining_duration let the protocol consult the traffic layer when it
// rebuilds a route mid-flow.
struct ProtocolEnv {
  EventQueue* queue = nullptr;
  Medium* medium = nullptr;
  MetricsLedger* metrics = nullptr;
  TraceWriter* trace = nullptr;
  RngStream* rng = nullptr;
  Battery* battery = nullptr;
  NodeId self = 0;
  ProtocolConfig cfg;
  DiscoveryObserver* observer = nullptr;
  std::function<std::uint64_t()> next_uid;
  std::function<void(const FlowKey&, EndReason)> end_session;
  std::function<bool(const FlowKey&)> session_active;
  std::function<std::optional<double>(const FlowKey&)> remaining_duration;
};

// One instance per node.  The simulation delivers frames, link failures and
// death notifications; the traffic layer injects data and brackets flows.
class RoutingProtocol {
 public:
  virtual ~RoutingProtocol() = default;

  virtual void start() {}

  // Data packet originated at this node (body holds a DataBody).  The
  // protocol owns it from here: forward, buffer pending discovery, or drop
  // with cause.
  virtual void inject(const Packet& pkt) = 0;

  virtual void receive(const Frame& f) = 0;

  // Unicast transmission to f.to completed but the receiver was dead or out
  // of range.
  virtual void link_failed(const Frame& f) = 0;

  // This node just died.  Recurring timers must not reschedule after this.
  virtual void on_death() {}

  // Flow lifecycle hints from the traffic layer (source side only).  A
  // completed flow may still have packets in discovery buffers; any other
  // end reason abandons them.
  virtual void flow_starting(const FlowKey&, std::optional<double> /*duration_s*/) {}
  virtual void flow_finished(const FlowKey&, EndReason /*why*/) {}

  // Outstanding protocol work (pending discoveries, armed reply collectors);
  // run-to-completion mode stops when traffic is done, the medium is idle,
  // and this is zero everywhere.  Recurring housekeeping timers must not
  // count.
  virtual std::size_t busy() const { return 0; }

  // End-of-run accounting for data packets the protocol still holds.
  virtual void census(MetricsLedger&) const {}
};

}  // namespace adhocsim
