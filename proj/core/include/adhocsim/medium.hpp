#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "adhocsim/battery.hpp"
#include "adhocsim/event_queue.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/trace.hpp"

namespace adhocsim {

struct MediumParams {
  double data_rate_bps = 1e6;
  std::size_t queue_capacity = 50;
  double tx_power_w = 0.2818;
  double rx_power_w = 0.2818;

  bool operator==(const MediumParams&) const = default;
};

struct Frame {
  NodeId sender = 0;
  std::optional<NodeId> to;  // nullopt = broadcast
  Packet pkt;
  std::uint32_t size_bytes = 0;
};

// Upcalls from the medium into the protocol layer.
struct MediumClient {
  virtual ~MediumClient() = default;
  virtual void deliver(NodeId at, const Frame& f) = 0;
  virtual void link_failed(const Frame& f) = 0;          // unicast undeliverable
  virtual void node_died(NodeId n) = 0;
};

enum class TraceVerb { kNone, kSend, kFwd };

// Half-duplex interfaces over unit-disk connectivity.  Each node owns one
// FIFO transmit queue; its transmissions serialize, tx_duration is
// 8*size/data_rate, and every alive neighbor pays the receive debit for
// every transmission in range (overhearing).  There are no collisions and
// no carrier sense; contention exists only through this serialization and
// the bounded queue.  Propagation is instantaneous: delivery fires at
// transmission end.
class Medium {
 public:
  Medium(EventQueue& queue, const Topology& topo, std::vector<Battery>& batteries,
         const MediumParams& params, Proto proto, MetricsLedger& metrics,
         TraceWriter& trace);

  void set_client(MediumClient* c) { client_ = c; }

  bool alive(NodeId n) const { return batteries_[n].alive(); }
  double tx_duration(std::uint32_t size_bytes) const;

  // Hands a frame to the sender's interface.  verb selects the SEND/FWD
  // trace line written on acceptance (kNone for data leaving its source,
  // which was already traced at injection).  Dead senders and full queues
  // drop with cause accounting.
  void enqueue(NodeId sender, std::optional<NodeId> to, const Packet& pkt,
               TraceVerb verb);

  // Drops waiting data frames matching pred from n's queue (route teardown).
  void purge(NodeId n, const std::function<bool(const DataBody&)>& pred,
             DropCause cause);

  // Waiting plus in-flight frames, run-termination predicate input.
  std::size_t busy_frames() const { return busy_frames_; }

  // End-of-run census of undelivered data frames sitting in queues or in
  // flight.
  void census_in_flight(MetricsLedger& m) const;

 private:
  struct Iface {
    std::deque<Frame> q;
    bool transmitting = false;
  };

  void start_transmission(NodeId n);
  void finish_transmission(NodeId n, const Frame& f);
  void debit(NodeId n, double joules);
  void on_death(NodeId n);
  void drop_frame(NodeId at, const Frame& f, DropCause cause);

  EventQueue& queue_;
  const Topology& topo_;
  std::vector<Battery>& batteries_;
  MediumParams params_;
  Proto proto_;
  MetricsLedger& metrics_;
  TraceWriter& trace_;
  MediumClient* client_ = nullptr;
  std::vector<Iface> ifaces_;
  std::vector<Frame> in_flight_;  // slot per node, valid while transmitting
  std::size_t busy_frames_ = 0;
};

}  // namespace adhocsim
