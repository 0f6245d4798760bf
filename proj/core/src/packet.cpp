#include "adhocsim/packet.hpp"

namespace adhocsim {

const char* to_string(Proto p) {
  switch (p) {
    case Proto::kAodv: return "aodv";
    case Proto::kSqAodv: return "sqaodv";
    case Proto::kMdr: return "mdr";
  }
  return "?";
}

const char* trace_kind(const Packet& p) {
  struct V {
    const char* operator()(const DataBody&) const { return "DATA"; }
    const char* operator()(const RreqBody&) const { return "RREQ"; }
    const char* operator()(const RrepBody& r) const { return r.rcr ? "RCR" : "RREP"; }
    const char* operator()(const RerrBody&) const { return "RERR"; }
    const char* operator()(const StopBody&) const { return "STOP"; }
    const char* operator()(const HelloBody&) const { return "HELLO"; }
  };
  return std::visit(V{}, p.body);
}

bool is_routing_frame(const Packet& p) {
  struct V {
    bool operator()(const DataBody&) const { return false; }
    bool operator()(const RreqBody&) const { return true; }
    bool operator()(const RrepBody&) const { return true; }
    bool operator()(const RerrBody&) const { return true; }
    bool operator()(const StopBody&) const { return false; }
    bool operator()(const HelloBody&) const { return true; }
  };
  return std::visit(V{}, p.body);
}

std::uint32_t wire_size(const Packet& p, Proto proto) {
  struct V {
    Proto proto;
    std::uint32_t operator()(const DataBody& d) const {
      return kDataHeaderBytes + d.payload_bytes;
    }
    std::uint32_t operator()(const RreqBody&) const {
      switch (proto) {
        case Proto::kAodv: return kRreqBytesAodv;
        case Proto::kSqAodv: return kRreqBytesSq;
        case Proto::kMdr: return kRreqBytesMdr;
      }
      return kRreqBytesAodv;
    }
    std::uint32_t operator()(const RrepBody& r) const {
      return r.rcr ? kRcrBytes : kRrepBytes;
    }
    std::uint32_t operator()(const RerrBody&) const { return kRerrBytes; }
    std::uint32_t operator()(const StopBody&) const { return kStopBytes; }
    std::uint32_t operator()(const HelloBody&) const { return kHelloBytes; }
  };
  return std::visit(V{proto}, p.body);
}

FlowKey trace_flow(const Packet& p) {
  struct V {
    FlowKey operator()(const DataBody& d) const { return d.flow; }
    FlowKey operator()(const RreqBody& r) const {
      return r.flow ? *r.flow : FlowKey{r.origin, r.dst, 0};
    }
    FlowKey operator()(const RrepBody& r) const {
      return r.flow ? *r.flow : FlowKey{r.origin, r.dst, 0};
    }
    FlowKey operator()(const RerrBody& r) const {
      if (!r.items.empty() && r.items.front().flow) return *r.items.front().flow;
      return FlowKey{0, r.items.empty() ? 0 : r.items.front().dst, 0};
    }
    FlowKey operator()(const StopBody& s) const { return s.flow; }
    FlowKey operator()(const HelloBody&) const { return FlowKey{}; }
  };
  return std::visit(V{}, p.body);
}

}  // namespace adhocsim
