#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "adhocsim/packet.hpp"
#include "adhocsim/trace.hpp"
#include "adhocsim/types.hpp"

using namespace adhocsim;

namespace {

std::string temp_path(const char* tag) {
  static int counter = 0;
  std::ostringstream os;
  os << "trace_test_" << tag << "_" << counter++ << ".tmp";
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

Packet data_packet(std::uint64_t uid, FlowKey flow) {
  DataBody d;
  d.flow = flow;
  return Packet{uid, d};
}

}  // namespace

TEST_CASE("trace lines are tab separated with frozen formatting") {
  std::string path = temp_path("fmt");
  {
    TraceWriter w(path);
    REQUIRE(w.enabled());
    w.pkt(0.0, TraceEvent::kSend, 0, data_packet(1, {0, 3, 1}), 532);
    w.pkt(0.004256, TraceEvent::kRecv, 1, data_packet(1, {0, 3, 1}), 532, "1");
    w.die(5.5, 2, 0.25);
    w.sess_end(6.0, 0, {0, 3, 1}, EndReason::kStopTraffic);
    w.close();
  }
  std::string got = slurp(path);
  std::string want =
      "0.000000000\tSEND\t0\tDATA\t1\t0:3:1\t532\t-\n"
      "0.004256000\tRECV\t1\tDATA\t1\t0:3:1\t532\t1\n"
      "5.500000000\tDIE\t2\t-\t-\t-\t-\t0.250000\n"
      "6.000000000\tSESS_END\t0\t-\t-\t0:3:1\t-\tstop_traffic\n";
  CHECK(got == want);
  std::remove(path.c_str());
}

TEST_CASE("disabled writer swallows everything") {
  TraceWriter w;
  CHECK_FALSE(w.enabled());
  w.pkt(0.0, TraceEvent::kSend, 0, data_packet(1, {0, 1, 1}), 532);
  w.die(1.0, 0, 0.0);  // must not crash
}

TEST_CASE("validator accepts a well-formed lifecycle") {
  std::string path = temp_path("ok");
  write_file(path,
             "0.000000000\tSEND\t0\tDATA\t1\t0:2:1\t532\t-\n"
             "0.004256000\tRECV\t1\tDATA\t1\t0:2:1\t532\t1\n"
             "0.004256000\tFWD\t1\tDATA\t1\t0:2:1\t532\t-\n"
             "0.008512000\tRECV\t2\tDATA\t1\t0:2:1\t532\t2\n"
             "1.000000000\tDIE\t1\t-\t-\t-\t-\t0.000000\n");
  std::size_t lines = 0;
  auto errs = validate_trace_file(path, &lines);
  CHECK(errs.empty());
  CHECK(lines == 5);
  std::remove(path.c_str());
}

TEST_CASE("validator rejects malformed column counts") {
  std::string path = temp_path("cols");
  write_file(path, "0.000000000\tSEND\t0\tDATA\t1\t0:2:1\t532\n");
  auto errs = validate_trace_file(path);
  REQUIRE_FALSE(errs.empty());
  CHECK(errs[0].line == 1);
  std::remove(path.c_str());
}

TEST_CASE("validator rejects unknown event and kind tokens") {
  std::string path = temp_path("tok");
  write_file(path,
             "0.000000000\tZAP\t0\tDATA\t1\t0:2:1\t532\t-\n"
             "0.100000000\tSEND\t0\tBLOB\t2\t0:2:1\t532\t-\n");
  auto errs = validate_trace_file(path);
  CHECK(errs.size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("validator rejects decreasing timestamps") {
  std::string path = temp_path("time");
  write_file(path,
             "1.000000000\tSEND\t0\tDATA\t1\t0:2:1\t532\t-\n"
             "0.500000000\tRECV\t1\tDATA\t1\t0:2:1\t532\t1\n");
  auto errs = validate_trace_file(path);
  REQUIRE_FALSE(errs.empty());
  CHECK(errs[0].line == 2);
  std::remove(path.c_str());
}

TEST_CASE("validator requires a packet lifecycle to open with SEND") {
  std::string path = temp_path("life");
  write_file(path, "0.000000000\tRECV\t1\tDATA\t7\t0:2:1\t532\t1\n");
  auto errs = validate_trace_file(path);
  REQUIRE_FALSE(errs.empty());
  std::remove(path.c_str());
}

TEST_CASE("validator flags transmissions by dead nodes") {
  std::string path = temp_path("dead");
  write_file(path,
             "0.000000000\tDIE\t0\t-\t-\t-\t-\t0.000000\n"
             "1.000000000\tSEND\t0\tDATA\t1\t0:2:1\t532\t-\n");
  auto errs = validate_trace_file(path);
  REQUIRE_FALSE(errs.empty());
  CHECK(errs[0].line == 2);
  std::remove(path.c_str());
}

TEST_CASE("validator reports missing files") {
  auto errs = validate_trace_file("definitely_not_here.trace");
  REQUIRE_FALSE(errs.empty());
  CHECK(errs[0].line == 0);
}
