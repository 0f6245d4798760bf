#include "adhocsim/trace.hpp"

#include <cinttypes>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "adhocsim/contract.hpp"

namespace adhocsim {

const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::kSend: return "SEND";
    case TraceEvent::kRecv: return "RECV";
    case TraceEvent::kDrop: return "DROP";
    case TraceEvent::kFwd: return "FWD";
    case TraceEvent::kDie: return "DIE";
    case TraceEvent::kSessEnd: return "SESS_END";
  }
  return "?";
}

TraceWriter::TraceWriter(const std::string& path) { open(path); }

TraceWriter::~TraceWriter() { close(); }

void TraceWriter::open(const std::string& path) {
  contract_check(f_ == nullptr, "trace: already open");
  f_ = std::fopen(path.c_str(), "w");
  if (f_ == nullptr) contract_fail("trace: cannot open " + path);
}

void TraceWriter::close() {
  if (f_ != nullptr) {
    std::fclose(f_);
    f_ = nullptr;
  }
}

void TraceWriter::write_line(SimTime t, const char* ev, NodeId node,
                             const char* kind, const char* uid,
                             const char* flow, const char* size,
                             const char* aux) {
  std::fprintf(f_, "%.9f\t%s\t%u\t%s\t%s\t%s\t%s\t%s\n", t, ev, node, kind,
               uid, flow, size, aux);
}

void TraceWriter::pkt(SimTime t, TraceEvent ev, NodeId node, const Packet& p,
                      std::uint32_t size_bytes, std::string_view aux) {
  if (!enabled()) return;
  char uid[24];
  std::snprintf(uid, sizeof uid, "%" PRIu64, p.uid);
  char size[16];
  std::snprintf(size, sizeof size, "%u", size_bytes);
  std::string flow = to_string(trace_flow(p));
  std::string aux_s(aux);
  write_line(t, to_string(ev), node, trace_kind(p), uid, flow.c_str(), size,
             aux_s.c_str());
}

void TraceWriter::die(SimTime t, NodeId node, double residual_j) {
  if (!enabled()) return;
  char aux[32];
  std::snprintf(aux, sizeof aux, "%.6f", residual_j);
  write_line(t, "DIE", node, "-", "-", "-", "-", aux);
}

void TraceWriter::sess_end(SimTime t, NodeId node, const FlowKey& flow,
                           EndReason why) {
  if (!enabled()) return;
  std::string f = to_string(flow);
  write_line(t, "SESS_END", node, "-", "-", f.c_str(), "-", to_string(why));
}

namespace {

bool is_number(const std::string& s, bool allow_dot) {
  if (s.empty()) return false;
  bool seen_dot = false;
  for (char c : s) {
    if (c == '.' && allow_dot && !seen_dot) {
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool is_flow_triple(const std::string& s) {
  // src:dst:flow_id, each a decimal integer
  std::size_t a = s.find(':');
  if (a == std::string::npos) return false;
  std::size_t b = s.find(':', a + 1);
  if (b == std::string::npos) return false;
  if (s.find(':', b + 1) != std::string::npos) return false;
  return is_number(s.substr(0, a), false) &&
         is_number(s.substr(a + 1, b - a - 1), false) &&
         is_number(s.substr(b + 1), false);
}

const std::set<std::string>& event_tokens() {
  static const std::set<std::string> k = {"SEND", "RECV", "DROP",
                                          "FWD",  "DIE",  "SESS_END"};
  return k;
}

const std::set<std::string>& kind_tokens() {
  static const std::set<std::string> k = {"DATA", "RREQ", "RREP", "RERR",
                                          "RCR",  "STOP", "HELLO", "-"};
  return k;
}

}  // namespace

std::vector<TraceError> validate_trace_file(const std::string& path,
                                            std::size_t* lines_out) {
  std::vector<TraceError> errors;
  std::ifstream in(path);
  if (!in) {
    errors.push_back({0, "cannot open " + path});
    if (lines_out != nullptr) *lines_out = 0;
    return errors;
  }

  std::size_t lineno = 0;
  double prev_time = 0.0;
  bool have_prev = false;
  std::unordered_set<std::uint64_t> sent;  // uids with a SEND on record
  std::unordered_set<std::uint32_t> dead;  // nodes past their DIE line
  std::string line;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      errors.push_back({lineno, "empty line"});
      continue;
    }

    std::vector<std::string> col;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        col.push_back(line.substr(start));
        break;
      }
      col.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (col.size() != 8) {
      errors.push_back({lineno, "expected 8 tab-separated columns, got " +
                                    std::to_string(col.size())});
      continue;
    }

    const std::string& time_s = col[0];
    const std::string& ev = col[1];
    const std::string& node_s = col[2];
    const std::string& kind = col[3];
    const std::string& uid_s = col[4];
    const std::string& flow_s = col[5];
    const std::string& size_s = col[6];

    if (!is_number(time_s, true)) {
      errors.push_back({lineno, "bad time: " + time_s});
      continue;
    }
    double t = std::strtod(time_s.c_str(), nullptr);
    if (have_prev && t < prev_time) {
      errors.push_back({lineno, "time decreases"});
    }
    prev_time = t;
    have_prev = true;

    if (event_tokens().count(ev) == 0) {
      errors.push_back({lineno, "unknown event: " + ev});
      continue;
    }
    if (!is_number(node_s, false)) {
      errors.push_back({lineno, "bad node id: " + node_s});
      continue;
    }
    std::uint32_t node =
        static_cast<std::uint32_t>(std::strtoul(node_s.c_str(), nullptr, 10));

    if (kind_tokens().count(kind) == 0) {
      errors.push_back({lineno, "unknown kind: " + kind});
    }

    if (ev == "DIE") {
      if (kind != "-" || uid_s != "-" || flow_s != "-" || size_s != "-") {
        errors.push_back({lineno, "DIE line must blank kind/uid/flow/size"});
      }
      if (dead.count(node) != 0) {
        errors.push_back({lineno, "second DIE for node " + node_s});
      }
      dead.insert(node);
      continue;
    }

    if (ev == "SESS_END") {
      if (!is_flow_triple(flow_s)) {
        errors.push_back({lineno, "bad flow triple: " + flow_s});
      }
      continue;
    }

    // Packet events: SEND / RECV / DROP / FWD.
    if (kind == "-") {
      errors.push_back({lineno, "packet event needs a kind"});
    }
    if (!is_number(uid_s, false)) {
      errors.push_back({lineno, "bad uid: " + uid_s});
      continue;
    }
    std::uint64_t uid = std::strtoull(uid_s.c_str(), nullptr, 10);
    if (!is_flow_triple(flow_s)) {
      errors.push_back({lineno, "bad flow triple: " + flow_s});
    }
    if (!is_number(size_s, false)) {
      errors.push_back({lineno, "bad size: " + size_s});
    }

    if (ev == "SEND" || ev == "FWD") {
      if (dead.count(node) != 0) {
        errors.push_back(
            {lineno, "node " + node_s + " transmits after its DIE line"});
      }
    }
    if (ev == "SEND") {
      sent.insert(uid);
    } else if (ev == "RECV" || ev == "FWD") {
      // A DROP may stand alone (e.g. full queue at origination), but nothing
      // is received or relayed that was never sent.
      if (sent.count(uid) == 0) {
        errors.push_back({lineno, ev + " for uid " + uid_s +
                                      " without a prior SEND"});
      }
    }
  }

  if (lines_out != nullptr) *lines_out = lineno;
  return errors;
}

}  // namespace adhocsim
