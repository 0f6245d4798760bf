#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "adhocsim/battery.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

enum class Proto { kAodv, kSqAodv, kMdr };

const char* to_string(Proto p);

// Wire sizes in bytes.  These are design constants; tx duration and energy
// debits derive from them bit-exactly.
inline constexpr std::uint32_t kDataHeaderBytes = 20;
inline constexpr std::uint32_t kRreqBytesAodv = 24;
inline constexpr std::uint32_t kRreqBytesSq = 32;
inline constexpr std::uint32_t kRreqBytesMdr = 28;
inline constexpr std::uint32_t kRrepBytes = 24;
inline constexpr std::uint32_t kRerrBytes = 24;
inline constexpr std::uint32_t kRcrBytes = 24;
inline constexpr std::uint32_t kStopBytes = 16;
inline constexpr std::uint32_t kHelloBytes = 16;

struct DataBody {
  FlowKey flow;
  std::uint32_t hops = 0;       // receptions so far; final value = path length
  SimTime injected_at = 0.0;
  std::uint16_t payload_bytes = 512;
  // Route generation stamped by the custodian (source or repairing node):
  // the destination sequence number of the entry the packet was sent on.
  // Relays prefer the generation-matching entry so a packet rides exactly
  // one simple path per custody segment.
  std::uint32_t route_seq = 0;
};

struct RreqBody {
  NodeId origin = 0;  // flood originator (flow source, or repairing node)
  std::uint32_t origin_seq = 0;
  std::uint32_t bid = 0;  // broadcast id, unique per origin
  NodeId dst = 0;
  std::uint32_t dst_seq = 0;  // last known; 0 = unknown
  std::uint32_t hop_count = 0;  // hops traversed so far
  // Per-flow extensions (SQ-AODV and MDR).
  std::optional<FlowKey> flow;
  std::optional<double> session_duration_s;  // SQ-AODV only
  // Min predicted lifetime over intermediates traversed so far; the origin
  // seeds it with the cap sentinel.
  double bottleneck_s = kLifetimeCapS;
};

struct RrepBody {
  NodeId origin = 0;  // node the reply travels to
  NodeId dst = 0;
  std::uint32_t dst_seq = 0;
  std::uint32_t hop_count = 0;  // hops from the replier so far
  double lifetime_s = 0.0;      // route validity period
  SimTime timestamp = 0.0;
  std::optional<FlowKey> flow;
  // Route-change-request reuse: rcr set, drained carried in place of dst_seq.
  bool rcr = false;
  NodeId drained = 0;
};

struct RerrBody {
  struct Unreachable {
    NodeId dst = 0;
    std::uint32_t dst_seq = 0;
    std::optional<FlowKey> flow;  // set for per-flow protocols
  };
  std::vector<Unreachable> items;  // always >= 1
};

// Application-level stop signal; accounted but never transmitted.
struct StopBody {
  FlowKey flow;
};

struct HelloBody {};

struct Packet {
  std::uint64_t uid = 0;
  std::variant<DataBody, RreqBody, RrepBody, RerrBody, StopBody, HelloBody> body;
};

// DATA / RREQ / RREP / RERR / RCR / STOP / HELLO
const char* trace_kind(const Packet& p);

bool is_routing_frame(const Packet& p);

std::uint32_t wire_size(const Packet& p, Proto proto);

// Best-effort flow triple for trace lines; control frames that belong to no
// flow render as origin:dst:0.
FlowKey trace_flow(const Packet& p);

}  // namespace adhocsim
