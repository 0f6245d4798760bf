#include "adhocsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <string_view>

#include "adhocsim/contract.hpp"
#include "adhocsim/rng.hpp"

namespace adhocsim {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_f64(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true") { out = true; return true; }
  if (s == "false") { out = false; return true; }
  return false;
}

bool parse_f64_list(std::string_view s, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(',', pos);
    std::string_view item = trim(next == std::string_view::npos
                                     ? s.substr(pos)
                                     : s.substr(pos, next - pos));
    double v = 0.0;
    if (!parse_f64(item, v)) return false;
    out.push_back(v);
    pos = next == std::string_view::npos ? s.size() + 1 : next + 1;
  }
  return true;
}

std::optional<Proto> parse_proto(std::string_view s) {
  if (s == "aodv") return Proto::kAodv;
  if (s == "sqaodv") return Proto::kSqAodv;
  if (s == "mdr") return Proto::kMdr;
  return std::nullopt;
}

// Parser working state: which required fields each section has supplied.
struct Seen {
  bool name = false, mode = false, duration = false;
  bool count = false, placement = false, energy = false;
};

}  // namespace

std::optional<Scenario> parse_scenario(std::string_view text,
                                       std::vector<ParseError>& errors) {
  Scenario s;
  Seen seen;
  enum Section { kNone, kSim, kNodes, kMedium, kProtocol, kSession } section = kNone;
  SessionSpec* cur = nullptr;
  // Per-session required-field tracking, parallel to s.sessions.
  struct SessSeen {
    std::size_t line = 0;
    bool src = false, dst = false, flow_id = false, kind = false;
    bool pps = false, rate = false, start = false;
  };
  std::vector<SessSeen> sess_seen;

  auto err = [&](std::size_t line, std::string msg) {
    errors.push_back({line, std::move(msg)});
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('\n', pos);
    std::string_view raw = next == std::string_view::npos
                               ? text.substr(pos)
                               : text.substr(pos, next - pos);
    pos = next == std::string_view::npos ? text.size() + 1 : next + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line == "[sim]") section = kSim;
      else if (line == "[nodes]") section = kNodes;
      else if (line == "[medium]") section = kMedium;
      else if (line == "[protocol]") section = kProtocol;
      else if (line == "[session]") {
        section = kSession;
        s.sessions.emplace_back();
        cur = &s.sessions.back();
        sess_seen.push_back({line_no});
      } else {
        err(line_no, "unknown section " + std::string(line));
        section = kNone;
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      err(line_no, "expected key = value");
      continue;
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view val = trim(line.substr(eq + 1));
    if (key.empty()) {
      err(line_no, "empty key");
      continue;
    }

    auto bad = [&](const char* what) {
      err(line_no, "bad value for " + std::string(key) + " (" + what + ")");
    };
    auto want_f64 = [&](double& out) { if (!parse_f64(val, out)) bad("number"); };
    auto want_u64 = [&](std::uint64_t& out) { if (!parse_u64(val, out)) bad("integer"); };
    auto want_u32 = [&](std::uint32_t& out) {
      std::uint64_t v = 0;
      if (!parse_u64(val, v) || v > 0xffffffffull) bad("integer");
      else out = static_cast<std::uint32_t>(v);
    };
    auto want_bool = [&](bool& out) { if (!parse_bool(val, out)) bad("true|false"); };

    switch (section) {
      case kNone:
        err(line_no, "key outside any section");
        break;

      case kSim:
        if (key == "name") { s.name = std::string(val); seen.name = !val.empty();
          if (val.empty()) bad("non-empty name"); }
        else if (key == "protocol") {
          auto p = parse_proto(val);
          if (!p) bad("aodv|sqaodv|mdr"); else s.protocol = *p;
        }
        else if (key == "seed") want_u64(s.seed);
        else if (key == "mode") {
          if (val == "horizon") { s.mode = Scenario::kHorizon; seen.mode = true; }
          else if (val == "completion") { s.mode = Scenario::kCompletion; seen.mode = true; }
          else bad("horizon|completion");
        }
        else if (key == "duration") { want_f64(s.duration_s); seen.duration = true; }
        else if (key == "time_limit") want_f64(s.time_limit_s);
        else if (key == "strict_pdr") want_bool(s.strict_pdr);
        else err(line_no, "unknown [sim] key " + std::string(key));
        break;

      case kNodes:
        if (key == "count") {
          std::uint64_t v = 0;
          if (!parse_u64(val, v) || v == 0) bad("positive integer");
          else { s.nodes = static_cast<std::size_t>(v); seen.count = true; }
        }
        else if (key == "placement") {
          if (val == "grid") { s.placement.kind = PlacementSpec::kGrid; seen.placement = true; }
          else if (val == "explicit") { s.placement.kind = PlacementSpec::kExplicit; seen.placement = true; }
          else bad("grid|explicit");
        }
        else if (key == "rows") { std::uint64_t v = 0; if (!parse_u64(val, v)) bad("integer"); else s.placement.rows = v; }
        else if (key == "cols") { std::uint64_t v = 0; if (!parse_u64(val, v)) bad("integer"); else s.placement.cols = v; }
        else if (key == "spacing") want_f64(s.placement.spacing_m);
        else if (key == "x") { if (!parse_f64_list(val, s.placement.xs)) bad("number list"); }
        else if (key == "y") { if (!parse_f64_list(val, s.placement.ys)) bad("number list"); }
        else if (key == "energy") {
          if (val == "uniform") { s.energy.kind = EnergySpec::kUniform; seen.energy = true; }
          else if (val == "list") { s.energy.kind = EnergySpec::kList; seen.energy = true; }
          else bad("uniform|list");
        }
        else if (key == "energy_lo") want_f64(s.energy.lo_j);
        else if (key == "energy_hi") want_f64(s.energy.hi_j);
        else if (key == "energy_values") { if (!parse_f64_list(val, s.energy.values)) bad("number list"); }
        else err(line_no, "unknown [nodes] key " + std::string(key));
        break;

      case kMedium:
        if (key == "comm_range") want_f64(s.comm_range_m);
        else if (key == "data_rate") want_f64(s.medium.data_rate_bps);
        else if (key == "queue_capacity") {
          std::uint64_t v = 0;
          if (!parse_u64(val, v) || v == 0) bad("positive integer");
          else s.medium.queue_capacity = static_cast<std::size_t>(v);
        }
        else if (key == "tx_power") want_f64(s.medium.tx_power_w);
        else if (key == "rx_power") want_f64(s.medium.rx_power_w);
        else err(line_no, "unknown [medium] key " + std::string(key));
        break;

      case kProtocol:
        if (key == "rreq_retries") want_u32(s.pcfg.rreq_retries);
        else if (key == "retry_interval") want_f64(s.pcfg.retry_interval_s);
        else if (key == "reverse_route_life") want_f64(s.pcfg.reverse_route_life_s);
        else if (key == "active_route_timeout") want_f64(s.pcfg.active_route_timeout_s);
        else if (key == "relay_jitter_max") want_f64(s.pcfg.relay_jitter_max_s);
        else if (key == "local_repair") want_bool(s.pcfg.local_repair);
        else if (key == "local_repair_max_hops_from_dst") want_u32(s.pcfg.local_repair_max_hops_from_dst);
        else if (key == "aedr_alpha") { double v = 0; want_f64(v); s.aedr_alpha = v; }
        else if (key == "aedr_window") { double v = 0; want_f64(v); s.aedr_window_s = v; }
        else if (key == "threshold1") want_f64(s.pcfg.threshold1_s);
        else if (key == "threshold2") want_f64(s.pcfg.threshold2_s);
        else if (key == "rcr_check_interval") want_f64(s.pcfg.rcr_check_interval_s);
        else if (key == "mbb_max_attempts") want_u32(s.pcfg.mbb_max_attempts);
        else if (key == "collect_window") want_f64(s.pcfg.collect_window_s);
        else if (key == "collect_max_candidates") want_u32(s.pcfg.collect_max_candidates);
        else if (key == "refresh_interval") want_f64(s.pcfg.refresh_interval_s);
        else if (key == "shadow_life") want_f64(s.pcfg.shadow_life_s);
        else if (key == "hello_enabled") want_bool(s.pcfg.hello_enabled);
        else if (key == "hello_interval") want_f64(s.pcfg.hello_interval_s);
        else err(line_no, "unknown [protocol] key " + std::string(key));
        break;

      case kSession: {
        SessSeen& ss = sess_seen.back();
        if (key == "src") { std::uint64_t v = 0; if (!parse_u64(val, v)) bad("integer"); else { cur->flow.src = static_cast<NodeId>(v); ss.src = true; } }
        else if (key == "dst") { std::uint64_t v = 0; if (!parse_u64(val, v)) bad("integer"); else { cur->flow.dst = static_cast<NodeId>(v); ss.dst = true; } }
        else if (key == "flow_id") { want_u32(cur->flow.flow_id); ss.flow_id = true; }
        else if (key == "kind") {
          if (val == "cbr") { cur->kind = SessionSpec::kCbr; ss.kind = true; }
          else if (val == "poisson") { cur->kind = SessionSpec::kPoisson; ss.kind = true; }
          else bad("cbr|poisson");
        }
        else if (key == "pps") { want_f64(cur->cbr_pps); ss.pps = true; }
        else if (key == "rate") { want_f64(cur->rate_bps); ss.rate = true; }
        else if (key == "packets") want_u64(cur->packets);
        else if (key == "start") { want_f64(cur->start_s); ss.start = true; cur->start_uniform = false; }
        else if (key == "start_uniform") {
          std::vector<double> v;
          if (!parse_f64_list(val, v) || v.size() != 2) bad("lo,hi");
          else {
            cur->start_uniform = true;
            cur->start_lo = v[0];
            cur->start_hi = v[1];
            ss.start = true;
          }
        }
        else err(line_no, "unknown [session] key " + std::string(key));
        break;
      }
    }
  }

  // Cross-field validation.  Everything scenario-critical must be explicit.
  if (!seen.name) err(0, "[sim] name is required");
  if (!seen.mode) err(0, "[sim] mode is required");
  if (s.mode == Scenario::kHorizon) {
    if (!seen.duration || s.duration_s <= 0.0)
      err(0, "[sim] horizon mode requires duration > 0");
  }
  if (s.time_limit_s < 0.0) err(0, "[sim] time_limit must be >= 0");

  if (!seen.count) err(0, "[nodes] count is required");
  if (!seen.placement) err(0, "[nodes] placement is required");
  else if (s.placement.kind == PlacementSpec::kGrid) {
    if (s.placement.rows < 2 || s.placement.cols < 2)
      err(0, "[nodes] grid placement requires rows, cols >= 2");
    if (seen.count && s.placement.rows * s.placement.cols != s.nodes)
      err(0, "[nodes] rows * cols must equal count");
    if (s.placement.spacing_m <= 0.0) err(0, "[nodes] spacing must be > 0");
  } else {
    if (s.placement.xs.size() != s.nodes || s.placement.ys.size() != s.nodes)
      err(0, "[nodes] explicit placement needs count x and y values");
  }
  if (!seen.energy) err(0, "[nodes] energy is required");
  else if (s.energy.kind == EnergySpec::kUniform) {
    if (!(s.energy.lo_j > 0.0) || s.energy.hi_j < s.energy.lo_j)
      err(0, "[nodes] energy uniform requires 0 < energy_lo <= energy_hi");
  } else {
    if (s.energy.values.size() != s.nodes)
      err(0, "[nodes] energy list needs count values");
    for (double v : s.energy.values)
      if (!(v > 0.0)) { err(0, "[nodes] energy values must be > 0"); break; }
  }

  if (s.comm_range_m <= 0.0) err(0, "[medium] comm_range must be > 0");
  if (s.medium.data_rate_bps <= 0.0) err(0, "[medium] data_rate must be > 0");
  if (s.medium.tx_power_w <= 0.0 || s.medium.rx_power_w <= 0.0)
    err(0, "[medium] tx_power and rx_power must be > 0");

  if (s.pcfg.retry_interval_s <= 0.0) err(0, "[protocol] retry_interval must be > 0");
  if (s.pcfg.active_route_timeout_s <= 0.0)
    err(0, "[protocol] active_route_timeout must be > 0");
  if (s.pcfg.relay_jitter_max_s < 0.0)
    err(0, "[protocol] relay_jitter_max must be >= 0");
  if (s.aedr_alpha && !(*s.aedr_alpha > 0.0 && *s.aedr_alpha <= 1.0))
    err(0, "[protocol] aedr_alpha must be in (0, 1]");
  if (s.aedr_window_s && !(*s.aedr_window_s > 0.0))
    err(0, "[protocol] aedr_window must be > 0");

  std::set<FlowKey> flow_keys;
  for (std::size_t i = 0; i < s.sessions.size(); ++i) {
    const SessionSpec& sess = s.sessions[i];
    const SessSeen& ss = sess_seen[i];
    auto serr = [&](const std::string& msg) { err(ss.line, "[session] " + msg); };
    if (!ss.src || !ss.dst || !ss.flow_id) serr("src, dst and flow_id are required");
    if (!ss.kind) serr("kind is required");
    if (ss.src && ss.dst && seen.count) {
      if (sess.flow.src >= s.nodes || sess.flow.dst >= s.nodes)
        serr("src and dst must be < count");
      if (sess.flow.src == sess.flow.dst) serr("src and dst must differ");
    }
    if (ss.flow_id && !flow_keys.insert(sess.flow).second)
      serr("duplicate flow " + to_string(sess.flow));
    if (ss.kind && sess.kind == SessionSpec::kCbr && !(sess.cbr_pps > 0.0))
      serr("cbr needs pps > 0");
    if (ss.kind && sess.kind == SessionSpec::kPoisson && !(sess.rate_bps > 0.0))
      serr("poisson needs rate > 0");
    if (!ss.start) serr("start or start_uniform is required");
    if (sess.start_uniform) {
      if (!(sess.start_lo >= 0.0) || sess.start_hi < sess.start_lo)
        serr("start_uniform needs 0 <= lo <= hi");
    } else if (sess.start_s < 0.0) {
      serr("start must be >= 0");
    }
    if (s.mode == Scenario::kCompletion && sess.packets == 0)
      serr("completion mode requires packets > 0 for every session");
  }

  if (!errors.empty()) return std::nullopt;
  return s;
}

std::optional<Scenario> load_scenario_file(const std::string& path,
                                           std::vector<ParseError>& errors) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) {
    errors.push_back({0, "cannot open " + path});
    return std::nullopt;
  }
  std::string text;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
  std::fclose(f);
  return parse_scenario(text, errors);
}

std::string print_scenario(const Scenario& s) {
  std::string out;
  auto kv = [&](const char* key, const std::string& val) {
    out += key;
    out += " = ";
    out += val;
    out += '\n';
  };
  auto kvd = [&](const char* key, double v) { kv(key, fmt(v)); };
  auto kvu = [&](const char* key, std::uint64_t v) { kv(key, std::to_string(v)); };
  auto kvb = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };
  auto kvlist = [&](const char* key, const std::vector<double>& vs) {
    std::string joined;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (i) joined += ',';
      joined += fmt(vs[i]);
    }
    kv(key, joined);
  };

  out += "[sim]\n";
  kv("name", s.name);
  if (s.protocol) kv("protocol", to_string(*s.protocol));
  kvu("seed", s.seed);
  kv("mode", s.mode == Scenario::kHorizon ? "horizon" : "completion");
  kvd("duration", s.duration_s);
  kvd("time_limit", s.time_limit_s);
  kvb("strict_pdr", s.strict_pdr);

  out += "\n[nodes]\n";
  kvu("count", s.nodes);
  if (s.placement.kind == PlacementSpec::kGrid) {
    kv("placement", "grid");
    kvu("rows", s.placement.rows);
    kvu("cols", s.placement.cols);
    kvd("spacing", s.placement.spacing_m);
  } else {
    kv("placement", "explicit");
    kvlist("x", s.placement.xs);
    kvlist("y", s.placement.ys);
  }
  if (s.energy.kind == EnergySpec::kUniform) {
    kv("energy", "uniform");
    kvd("energy_lo", s.energy.lo_j);
    kvd("energy_hi", s.energy.hi_j);
  } else {
    kv("energy", "list");
    kvlist("energy_values", s.energy.values);
  }

  out += "\n[medium]\n";
  kvd("comm_range", s.comm_range_m);
  kvd("data_rate", s.medium.data_rate_bps);
  kvu("queue_capacity", s.medium.queue_capacity);
  kvd("tx_power", s.medium.tx_power_w);
  kvd("rx_power", s.medium.rx_power_w);

  out += "\n[protocol]\n";
  kvu("rreq_retries", s.pcfg.rreq_retries);
  kvd("retry_interval", s.pcfg.retry_interval_s);
  kvd("reverse_route_life", s.pcfg.reverse_route_life_s);
  kvd("active_route_timeout", s.pcfg.active_route_timeout_s);
  kvd("relay_jitter_max", s.pcfg.relay_jitter_max_s);
  kvb("local_repair", s.pcfg.local_repair);
  kvu("local_repair_max_hops_from_dst", s.pcfg.local_repair_max_hops_from_dst);
  if (s.aedr_alpha) kvd("aedr_alpha", *s.aedr_alpha);
  if (s.aedr_window_s) kvd("aedr_window", *s.aedr_window_s);
  kvd("threshold1", s.pcfg.threshold1_s);
  kvd("threshold2", s.pcfg.threshold2_s);
  kvd("rcr_check_interval", s.pcfg.rcr_check_interval_s);
  kvu("mbb_max_attempts", s.pcfg.mbb_max_attempts);
  kvd("collect_window", s.pcfg.collect_window_s);
  kvu("collect_max_candidates", s.pcfg.collect_max_candidates);
  kvd("refresh_interval", s.pcfg.refresh_interval_s);
  kvd("shadow_life", s.pcfg.shadow_life_s);
  kvb("hello_enabled", s.pcfg.hello_enabled);
  kvd("hello_interval", s.pcfg.hello_interval_s);

  for (const SessionSpec& sess : s.sessions) {
    out += "\n[session]\n";
    kvu("src", sess.flow.src);
    kvu("dst", sess.flow.dst);
    kvu("flow_id", sess.flow.flow_id);
    kv("kind", sess.kind == SessionSpec::kCbr ? "cbr" : "poisson");
    if (sess.kind == SessionSpec::kCbr) kvd("pps", sess.cbr_pps);
    else kvd("rate", sess.rate_bps);
    kvu("packets", sess.packets);
    if (sess.start_uniform)
      kv("start_uniform", fmt(sess.start_lo) + "," + fmt(sess.start_hi));
    else
      kvd("start", sess.start_s);
  }
  return out;
}

bool operator==(const Scenario& a, const Scenario& b) {
  return a.name == b.name && a.protocol == b.protocol && a.seed == b.seed &&
         a.mode == b.mode && a.duration_s == b.duration_s &&
         a.time_limit_s == b.time_limit_s && a.strict_pdr == b.strict_pdr &&
         a.nodes == b.nodes && a.placement == b.placement &&
         a.energy == b.energy && a.comm_range_m == b.comm_range_m &&
         a.medium == b.medium && a.pcfg == b.pcfg &&
         a.aedr_alpha == b.aedr_alpha && a.aedr_window_s == b.aedr_window_s &&
         a.sessions == b.sessions;
}

Materialized materialize(const Scenario& s, std::uint64_t seed,
                         std::optional<Proto> protocol_override) {
  Materialized m;
  m.seed = seed;
  contract_check(protocol_override.has_value() || s.protocol.has_value(),
                 "materialize: no protocol selected");
  m.protocol = protocol_override ? *protocol_override : *s.protocol;

  if (s.placement.kind == PlacementSpec::kGrid) {
    m.positions = make_grid(s.placement.rows, s.placement.cols, s.placement.spacing_m);
  } else {
    contract_check(s.placement.xs.size() == s.nodes &&
                       s.placement.ys.size() == s.nodes,
                   "materialize: explicit placement size mismatch");
    m.positions.resize(s.nodes);
    for (std::size_t i = 0; i < s.nodes; ++i)
      m.positions[i] = {s.placement.xs[i], s.placement.ys[i]};
  }
  contract_check(m.positions.size() == s.nodes,
                 "materialize: placement does not yield count nodes");

  if (s.energy.kind == EnergySpec::kList) {
    contract_check(s.energy.values.size() == s.nodes,
                   "materialize: energy list size mismatch");
    m.energies_j = s.energy.values;
  } else {
    m.energies_j.resize(s.nodes);
    for (std::size_t i = 0; i < s.nodes; ++i) {
      // Draw #1 of the node stream by construction.
      RngStream rng = RngStream::for_node(seed, static_cast<NodeId>(i));
      m.energies_j[i] = rng.uniform(s.energy.lo_j, s.energy.hi_j);
    }
  }

  m.session_starts_s.reserve(s.sessions.size());
  for (const SessionSpec& sess : s.sessions) {
    if (sess.start_uniform) {
      RngStream rng(seed, "start/" + to_string(sess.flow));
      m.session_starts_s.push_back(rng.uniform(sess.start_lo, sess.start_hi));
    } else {
      m.session_starts_s.push_back(sess.start_s);
    }
  }

  if (s.aedr_alpha) {
    m.aedr_alpha = *s.aedr_alpha;
  } else {
    switch (m.protocol) {
      case Proto::kAodv: m.aedr_alpha = 0.0; break;
      case Proto::kSqAodv: m.aedr_alpha = 0.5; break;
      case Proto::kMdr: m.aedr_alpha = 0.3; break;
    }
  }
  if (s.aedr_window_s) {
    m.aedr_window_s = *s.aedr_window_s;
  } else {
    switch (m.protocol) {
      case Proto::kAodv: m.aedr_window_s = 0.0; break;
      case Proto::kSqAodv: m.aedr_window_s = 1.0; break;
      case Proto::kMdr: m.aedr_window_s = 6.0; break;
    }
  }
  return m;
}

}  // namespace adhocsim
