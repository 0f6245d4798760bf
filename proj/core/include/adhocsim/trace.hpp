#pragma once

#include <cstdio>
#include <string>
#include <string_view>

#include "adhocsim/metrics.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

enum class TraceEvent { kSend, kRecv, kDrop, kFwd, kDie, kSessEnd };
const char* to_string(TraceEvent e);

// Tab-separated trace lines, 8 columns:
//   time  EVENT  node  kind  uid  flow  size  aux
// time has 9 decimals, energies 6; unused columns hold "-".
// A run with the same config and seed produces byte-identical traces.
class TraceWriter {
 public:
  TraceWriter() = default;  // disabled sink
  explicit TraceWriter(const std::string& path);
  ~TraceWriter();

  // Turns a disabled sink into a live one.
  void open(const std::string& path);

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  bool enabled() const { return f_ != nullptr; }

  void pkt(SimTime t, TraceEvent ev, NodeId node, const Packet& p,
           std::uint32_t size_bytes, std::string_view aux = "-");
  void die(SimTime t, NodeId node, double residual_j);
  void sess_end(SimTime t, NodeId node, const FlowKey& flow, EndReason why);

  void close();

 private:
  void write_line(SimTime t, const char* ev, NodeId node, const char* kind,
                  const char* uid, const char* flow, const char* size,
                  const char* aux);

  std::FILE* f_ = nullptr;
};

struct TraceError {
  std::size_t line;
  std::string message;
};

// Grammar and lifecycle validation of a trace file: column shapes, token
// sets, non-decreasing time, every packet uid starting with SEND, and no
// SEND/FWD by a node after its DIE line.  Returns all violations.
std::vector<TraceError> validate_trace_file(const std::string& path,
                                            std::size_t* lines_out = nullptr);

}  // namespace adhocsim
