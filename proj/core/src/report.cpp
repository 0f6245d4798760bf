#include "adhocsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string_view>

#include "adhocsim/contract.hpp"

namespace adhocsim {
namespace {

// Shortest round-trip rendering, so from_text(to_text(r)) reproduces the
// exact doubles.
std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_f64(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool looks_like_flow(std::string_view s) {
  std::uint64_t n = 0;
  std::size_t a = s.find(':');
  if (a == std::string_view::npos) return false;
  std::size_t b = s.find(':', a + 1);
  if (b == std::string_view::npos) return false;
  return parse_u64(s.substr(0, a), n) && parse_u64(s.substr(a + 1, b - a - 1), n) &&
         parse_u64(s.substr(b + 1), n);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

void append_opt(std::string& out, const char* key, const std::optional<double>& v) {
  if (v) {
    out += key;
    out += '=';
    out += fmt(*v);
    out += '\n';
  }
}

}  // namespace

std::string RunReport::to_text() const {
  std::string out;
  out += "scenario=" + scenario + '\n';
  out += "protocol=" + protocol + '\n';
  out += "seed=" + std::to_string(seed) + '\n';
  out += "end_time=" + fmt9(end_time_s) + '\n';
  out += "events=" + std::to_string(events) + '\n';
  out += "injected=" + std::to_string(injected) + '\n';
  out += "delivered=" + std::to_string(delivered) + '\n';
  out += "dropped=" + std::to_string(dropped) + '\n';
  out += "in_flight=" + std::to_string(in_flight) + '\n';
  out += "suppressed=" + std::to_string(suppressed) + '\n';
  out += "routing_tx=" + std::to_string(routing_tx) + '\n';
  out += "deaths=" + std::to_string(deaths) + '\n';
  out += "path_violations=" + std::to_string(path_violations) + '\n';
  append_opt(out, "pdr", pdr);
  append_opt(out, "pdr_strict", pdr_strict);
  append_opt(out, "coh", coh);
  append_opt(out, "pd", avg_delay_s);
  append_opt(out, "hops", avg_hops);
  out += "[drops]\n";
  for (std::size_t i = 0; i < kDropCauseCount; ++i) {
    out += to_string(static_cast<DropCause>(i));
    out += '=';
    out += std::to_string(drops_by_cause[i]);
    out += '\n';
  }
  out += "[net_curve]\n";
  for (const auto& [t, alive] : net_curve)
    out += std::to_string(t) + '=' + std::to_string(alive) + '\n';
  out += "[cet]\n";
  for (const auto& [flow, t] : cet) out += flow + '=' + fmt9(t) + '\n';
  out += "[flows]\n";
  for (const FlowRow& r : flows) {
    out += r.flow;
    out += ',' + std::to_string(r.injected);
    out += ',' + std::to_string(r.delivered);
    out += ',' + std::to_string(r.dropped);
    out += ',' + std::to_string(r.in_flight);
    out += ',' + std::to_string(r.suppressed);
    out += ',';
    out += r.avg_delay_s ? fmt(*r.avg_delay_s) : "-";
    out += ',';
    out += r.avg_hops ? fmt(*r.avg_hops) : "-";
    out += '\n';
  }
  return out;
}

std::optional<RunReport> RunReport::from_text(std::string_view text,
                                              std::string* error) {
  auto fail = [&](std::size_t line_no, const std::string& msg) {
    if (error) *error = "line " + std::to_string(line_no) + ": " + msg;
    return std::nullopt;
  };

  RunReport r;
  enum Section { kScalars, kDrops, kNet, kCet, kFlows } section = kScalars;
  std::set<std::string_view> seen_keys;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('\n', pos);
    std::string_view line = next == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, next - pos);
    pos = next == std::string_view::npos ? text.size() + 1 : next + 1;
    ++line_no;
    if (line.empty()) continue;

    if (line == "[drops]") { section = kDrops; continue; }
    if (line == "[net_curve]") { section = kNet; continue; }
    if (line == "[cet]") { section = kCet; continue; }
    if (line == "[flows]") { section = kFlows; continue; }

    if (section == kFlows) {
      auto cols = split(line, ',');
      if (cols.size() != 8) return fail(line_no, "flow row needs 8 columns");
      FlowRow row;
      if (!looks_like_flow(cols[0])) return fail(line_no, "bad flow key");
      row.flow = std::string(cols[0]);
      if (!parse_u64(cols[1], row.injected) || !parse_u64(cols[2], row.delivered) ||
          !parse_u64(cols[3], row.dropped) || !parse_u64(cols[4], row.in_flight) ||
          !parse_u64(cols[5], row.suppressed))
        return fail(line_no, "bad flow counter");
      double v = 0.0;
      if (cols[6] != "-") {
        if (!parse_f64(cols[6], v)) return fail(line_no, "bad flow delay");
        row.avg_delay_s = v;
      }
      if (cols[7] != "-") {
        if (!parse_f64(cols[7], v)) return fail(line_no, "bad flow hops");
        row.avg_hops = v;
      }
      r.flows.push_back(std::move(row));
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) return fail(line_no, "expected key=value");
    std::string_view key = line.substr(0, eq);
    std::string_view val = line.substr(eq + 1);

    switch (section) {
      case kDrops: {
        bool matched = false;
        for (std::size_t i = 0; i < kDropCauseCount; ++i) {
          if (key == to_string(static_cast<DropCause>(i))) {
            if (!parse_u64(val, r.drops_by_cause[i]))
              return fail(line_no, "bad drop count");
            matched = true;
            break;
          }
        }
        if (!matched) return fail(line_no, "unknown drop cause");
        break;
      }
      case kNet: {
        std::uint64_t t = 0, alive = 0;
        if (!parse_u64(key, t) || !parse_u64(val, alive))
          return fail(line_no, "bad net_curve point");
        r.net_curve.emplace_back(t, alive);
        break;
      }
      case kCet: {
        double t = 0.0;
        if (!looks_like_flow(key)) return fail(line_no, "bad cet flow key");
        if (!parse_f64(val, t)) return fail(line_no, "bad cet time");
        r.cet.emplace_back(std::string(key), t);
        break;
      }
      case kScalars: {
        if (!seen_keys.insert(key).second)
          return fail(line_no, "duplicate key");
        double dv = 0.0;
        if (key == "scenario") r.scenario = std::string(val);
        else if (key == "protocol") r.protocol = std::string(val);
        else if (key == "seed") { if (!parse_u64(val, r.seed)) return fail(line_no, "bad seed"); }
        else if (key == "end_time") { if (!parse_f64(val, r.end_time_s)) return fail(line_no, "bad end_time"); }
        else if (key == "events") { if (!parse_u64(val, r.events)) return fail(line_no, "bad events"); }
        else if (key == "injected") { if (!parse_u64(val, r.injected)) return fail(line_no, "bad injected"); }
        else if (key == "delivered") { if (!parse_u64(val, r.delivered)) return fail(line_no, "bad delivered"); }
        else if (key == "dropped") { if (!parse_u64(val, r.dropped)) return fail(line_no, "bad dropped"); }
        else if (key == "in_flight") { if (!parse_u64(val, r.in_flight)) return fail(line_no, "bad in_flight"); }
        else if (key == "suppressed") { if (!parse_u64(val, r.suppressed)) return fail(line_no, "bad suppressed"); }
        else if (key == "routing_tx") { if (!parse_u64(val, r.routing_tx)) return fail(line_no, "bad routing_tx"); }
        else if (key == "deaths") { if (!parse_u64(val, r.deaths)) return fail(line_no, "bad deaths"); }
        else if (key == "path_violations") { if (!parse_u64(val, r.path_violations)) return fail(line_no, "bad path_violations"); }
        else if (key == "pdr") { if (!parse_f64(val, dv)) return fail(line_no, "bad pdr"); r.pdr = dv; }
        else if (key == "pdr_strict") { if (!parse_f64(val, dv)) return fail(line_no, "bad pdr_strict"); r.pdr_strict = dv; }
        else if (key == "coh") { if (!parse_f64(val, dv)) return fail(line_no, "bad coh"); r.coh = dv; }
        else if (key == "pd") { if (!parse_f64(val, dv)) return fail(line_no, "bad pd"); r.avg_delay_s = dv; }
        else if (key == "hops") { if (!parse_f64(val, dv)) return fail(line_no, "bad hops"); r.avg_hops = dv; }
        else return fail(line_no, "unknown key '" + std::string(key) + "'");
        break;
      }
      default:
        return fail(line_no, "unexpected line");
    }
  }

  for (const char* required :
       {"scenario", "protocol", "seed", "end_time", "events", "injected",
        "delivered", "dropped", "in_flight", "suppressed", "routing_tx",
        "deaths", "path_violations"}) {
    if (!seen_keys.count(required))
      return fail(line_no, std::string("missing key '") + required + "'");
  }
  return r;
}

RunReport build_report(const std::string& scenario_name,
                       const std::string& protocol, std::uint64_t seed,
                       double end_time_s, std::uint64_t events,
                       const MetricsLedger& m, bool strict_pdr) {
  RunReport r;
  r.scenario = scenario_name;
  r.protocol = protocol;
  r.seed = seed;
  r.end_time_s = end_time_s;
  r.events = events;
  r.injected = m.total_injected();
  r.delivered = m.total_delivered();
  r.dropped = m.total_dropped();
  r.in_flight = m.total_in_flight();
  r.suppressed = m.total_suppressed();
  r.routing_tx = m.routing_tx_count();
  r.deaths = m.deaths();
  r.path_violations = m.path_violations();
  r.pdr = m.pdr(false);
  if (strict_pdr) r.pdr_strict = m.pdr(true);
  r.coh = m.control_overhead();
  r.avg_delay_s = m.avg_delay();
  r.avg_hops = m.avg_hops();

  for (std::size_t i = 0; i < kDropCauseCount; ++i)
    r.drops_by_cause[i] = m.dropped_by_cause(static_cast<DropCause>(i));

  // One point per integer second where the alive count changes, preceded by
  // the pre-change level unless it was the last value already emitted.
  std::set<std::uint64_t> change_secs;
  for (const auto& [t, n] : m.death_log())
    change_secs.insert(static_cast<std::uint64_t>(std::ceil(t)));
  std::optional<std::uint64_t> last;
  for (std::uint64_t s : change_secs) {
    std::uint64_t now_alive = m.alive_at(static_cast<SimTime>(s));
    if (s > 0) {
      std::uint64_t prev_alive = m.alive_at(static_cast<SimTime>(s - 1));
      if (!last || *last != prev_alive) r.net_curve.emplace_back(s - 1, prev_alive);
    }
    r.net_curve.emplace_back(s, now_alive);
    last = now_alive;
  }

  for (const auto& [flow, t] : m.cet_list())
    r.cet.emplace_back(to_string(flow), t);

  for (const auto& [flow, fs] : m.flows()) {
    RunReport::FlowRow row;
    row.flow = to_string(flow);
    row.injected = fs.injected;
    row.delivered = fs.delivered;
    row.dropped = fs.dropped_total();
    row.in_flight = fs.in_flight;
    row.suppressed = fs.suppressed;
    if (fs.delivered > 0) {
      row.avg_delay_s = fs.delay_sum / static_cast<double>(fs.delivered);
      row.avg_hops =
          static_cast<double>(fs.hop_sum) / static_cast<double>(fs.delivered);
    }
    r.flows.push_back(std::move(row));
  }
  return r;
}

namespace {

BatchReport::Stat make_stat(const std::vector<double>& xs) {
  BatchReport::Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

void stat_line(std::string& out, const char* name, const BatchReport::Stat& s) {
  out += name;
  out += ',' + std::to_string(s.n);
  out += ',' + fmt(s.mean);
  out += ',' + fmt(s.stddev);
  out += '\n';
}

}  // namespace

std::string BatchReport::to_text() const {
  std::string out;
  out += "scenario=" + scenario + '\n';
  out += "protocol=" + protocol + '\n';
  out += "runs=" + std::to_string(seeds.size()) + '\n';
  out += "seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  out += '\n';
  out += "[stats]\n";
  out += "metric,n,mean,stddev\n";
  stat_line(out, "pdr", pdr);
  stat_line(out, "pdr_strict", pdr_strict);
  stat_line(out, "coh", coh);
  stat_line(out, "pd", avg_delay_s);
  stat_line(out, "hops", avg_hops);
  stat_line(out, "deaths", deaths);
  stat_line(out, "delivered", delivered);
  stat_line(out, "injected", injected);
  return out;
}

BatchReport aggregate_reports(const std::vector<RunReport>& runs) {
  contract_check(!runs.empty(), "aggregate_reports: no runs");
  BatchReport b;
  b.scenario = runs.front().scenario;
  b.protocol = runs.front().protocol;
  std::vector<double> pdr, pdr_strict, coh, pd, hops, deaths, delivered, injected;
  std::set<std::uint64_t> seen_seeds;
  for (const RunReport& r : runs) {
    contract_check(r.scenario == b.scenario && r.protocol == b.protocol,
                   "aggregate_reports: mixed scenario or protocol");
    contract_check(seen_seeds.insert(r.seed).second,
                   "aggregate_reports: duplicate seed");
    b.seeds.push_back(r.seed);
    if (r.pdr) pdr.push_back(*r.pdr);
    if (r.pdr_strict) pdr_strict.push_back(*r.pdr_strict);
    if (r.coh) coh.push_back(*r.coh);
    if (r.avg_delay_s) pd.push_back(*r.avg_delay_s);
    if (r.avg_hops) hops.push_back(*r.avg_hops);
    deaths.push_back(static_cast<double>(r.deaths));
    delivered.push_back(static_cast<double>(r.delivered));
    injected.push_back(static_cast<double>(r.injected));
  }
  b.pdr = make_stat(pdr);
  b.pdr_strict = make_stat(pdr_strict);
  b.coh = make_stat(coh);
  b.avg_delay_s = make_stat(pd);
  b.avg_hops = make_stat(hops);
  b.deaths = make_stat(deaths);
  b.delivered = make_stat(delivered);
  b.injected = make_stat(injected);
  return b;
}

}  // namespace adhocsim
