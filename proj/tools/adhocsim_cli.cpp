#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "adhocsim/contract.hpp"
#include "adhocsim/report.hpp"
#include "adhocsim/scenario.hpp"
#include "adhocsim/simulation.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/trace.hpp"

namespace {

using namespace adhocsim;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kContractError = 2;

void print_parse_errors(const std::string& path,
                        const std::vector<ParseError>& errors) {
  for (const ParseError& e : errors) {
    if (e.line == 0)
      std::fprintf(stderr, "%s: %s\n", path.c_str(), e.message.c_str());
    else
      std::fprintf(stderr, "%s:%zu: %s\n", path.c_str(), e.line, e.message.c_str());
  }
}

bool write_file(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) {
    std::fprintf(stderr, "cannot write %s\n", path.c_str());
    return false;
  }
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
  return true;
}

// "--seeds A..B" (inclusive range) or "--seeds a,b,c"; duplicates rejected.
bool parse_seeds(const std::string& spec, std::vector<std::uint64_t>& out) {
  auto dots = spec.find("..");
  if (dots != std::string::npos) {
    try {
      std::uint64_t a = std::stoull(spec.substr(0, dots));
      std::uint64_t b = std::stoull(spec.substr(dots + 2));
      if (b < a) return false;
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
      return true;
    } catch (...) {
      return false;
    }
  }
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t next = spec.find(',', pos);
    std::string item = next == std::string::npos ? spec.substr(pos)
                                                 : spec.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      std::uint64_t s = std::stoull(item, &used);
      if (used != item.size()) return false;
      if (std::find(out.begin(), out.end(), s) != out.end()) {
        std::fprintf(stderr, "duplicate seed %llu\n",
                     static_cast<unsigned long long>(s));
        return false;
      }
      out.push_back(s);
    } catch (...) {
      return false;
    }
    pos = next == std::string::npos ? spec.size() + 1 : next + 1;
  }
  return !out.empty();
}

std::optional<Proto> parse_protocol_arg(const std::string& name) {
  if (name == "aodv") return Proto::kAodv;
  if (name == "sqaodv") return Proto::kSqAodv;
  if (name == "mdr") return Proto::kMdr;
  return std::nullopt;
}

struct CommonArgs {
  std::string config;
  std::string protocol;
};

// Loads the scenario and resolves the protocol choice; nullopt means a
// config error was already reported.
std::optional<std::pair<Scenario, std::optional<Proto>>> load_common(
    const CommonArgs& args) {
  std::vector<ParseError> errors;
  auto sc = load_scenario_file(args.config, errors);
  if (!sc) {
    print_parse_errors(args.config, errors);
    return std::nullopt;
  }
  std::optional<Proto> override;
  if (!args.protocol.empty()) {
    override = parse_protocol_arg(args.protocol);
    if (!override) {
      std::fprintf(stderr, "unknown protocol '%s' (aodv|sqaodv|mdr)\n",
                   args.protocol.c_str());
      return std::nullopt;
    }
  }
  if (!override && !sc->protocol) {
    std::fprintf(stderr, "%s: no protocol in config and no --protocol given\n",
                 args.config.c_str());
    return std::nullopt;
  }
  return std::make_pair(std::move(*sc), override);
}

int cmd_run(const CommonArgs& common, std::optional<std::uint64_t> seed,
            const std::string& trace_path, const std::string& report_path) {
  auto loaded = load_common(common);
  if (!loaded) return kConfigError;
  SimOptions opts;
  opts.protocol_override = loaded->second;
  opts.seed_override = seed;
  opts.trace_path = trace_path;
  Simulation sim(loaded->first, opts);
  RunReport rep = sim.run();
  std::string text = rep.to_text();
  if (report_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else if (!write_file(report_path, text)) {
    return kConfigError;
  }
  return kOk;
}

std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", *v);
  return buf;
}

int cmd_batch(const CommonArgs& common, const std::string& seeds_spec,
              const std::string& out_dir) {
  auto loaded = load_common(common);
  if (!loaded) return kConfigError;
  std::vector<std::uint64_t> seeds;
  if (!parse_seeds(seeds_spec, seeds)) {
    std::fprintf(stderr, "bad --seeds '%s' (want A..B or a,b,c)\n",
                 seeds_spec.c_str());
    return kConfigError;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create %s: %s\n", out_dir.c_str(),
                 ec.message().c_str());
    return kConfigError;
  }

  const Scenario& sc = loaded->first;
  std::vector<RunReport> reports(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  std::size_t workers =
      std::min<std::size_t>(seeds.size(),
                            std::max(1u, std::thread::hardware_concurrency()));
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < seeds.size();
         i = next.fetch_add(1)) {
      try {
        SimOptions opts;
        opts.protocol_override = loaded->second;
        opts.seed_override = seeds[i];
        Simulation sim(sc, opts);
        reports[i] = sim.run();
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool any_failed = false;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!failures[i].empty()) {
      any_failed = true;
      std::fprintf(stderr, "seed %llu: FAILED: %s\n",
                   static_cast<unsigned long long>(seeds[i]),
                   failures[i].c_str());
    }
  }
  if (any_failed) return kContractError;

  std::string proto_name = reports.front().protocol;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::string path = out_dir + "/" + proto_name + "_seed" +
                       std::to_string(seeds[i]) + ".report";
    if (!write_file(path, reports[i].to_text())) return kConfigError;
  }

  BatchReport batch = aggregate_reports(reports);
  std::string summary = batch.to_text();
  summary += "[runs]\n";
  summary += "seed,pdr,pdr_strict,coh,pd,hops,deaths,delivered,injected\n";
  for (const RunReport& r : reports) {
    summary += std::to_string(r.seed);
    summary += ',' + opt_cell(r.pdr);
    summary += ',' + opt_cell(r.pdr_strict);
    summary += ',' + opt_cell(r.coh);
    summary += ',' + opt_cell(r.avg_delay_s);
    summary += ',' + opt_cell(r.avg_hops);
    summary += ',' + std::to_string(r.deaths);
    summary += ',' + std::to_string(r.delivered);
    summary += ',' + std::to_string(r.injected);
    summary += '\n';
  }
  if (!write_file(out_dir + "/summary.txt", summary)) return kConfigError;
  std::printf("%s", summary.c_str());
  return kOk;
}

int cmd_gen_grid(std::uint64_t n, const std::string& area,
                 const std::string& out_path) {
  auto x = area.find('x');
  double w = 0.0, h = 0.0;
  try {
    std::size_t used = 0;
    if (x == std::string::npos) throw std::invalid_argument("no x");
    w = std::stod(area.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("junk");
    std::string rest = area.substr(x + 1);
    h = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("junk");
  } catch (...) {
    std::fprintf(stderr, "bad --area '%s' (want WxH, e.g. 540x540)\n",
                 area.c_str());
    return kConfigError;
  }
  if (w <= 0.0 || h <= 0.0) {
    std::fprintf(stderr, "area dimensions must be > 0\n");
    return kConfigError;
  }
  std::uint64_t k = 0;
  while ((k + 1) * (k + 1) <= n) ++k;
  if (k * k != n || k < 2) {
    std::fprintf(stderr,
                 "--n must be a perfect square >= 4 (got %llu)\n",
                 static_cast<unsigned long long>(n));
    return kConfigError;
  }
  std::vector<Position> nodes = make_square_grid(n, w, h);
  std::string out = "[nodes]\n";
  out += "count = " + std::to_string(n) + "\n";
  out += "placement = explicit\n";
  out += "x = ";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ',';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", nodes[i].x);
    out += buf;
  }
  out += "\ny = ";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ',';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", nodes[i].y);
    out += buf;
  }
  out += '\n';
  if (!write_file(out_path, out)) return kConfigError;
  return kOk;
}

int cmd_validate_trace(const std::string& path) {
  std::size_t lines = 0;
  std::vector<TraceError> errors = validate_trace_file(path, &lines);
  if (errors.empty()) {
    std::printf("OK: %zu lines\n", lines);
    return kOk;
  }
  for (const TraceError& e : errors)
    std::fprintf(stderr, "%s:%zu: %s\n", path.c_str(), e.line, e.message.c_str());
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic ad-hoc network routing simulator"};
  app.require_subcommand(1);

  CommonArgs run_common;
  std::uint64_t run_seed = 0;
  std::string run_trace, run_report;
  CLI::App* run = app.add_subcommand("run", "single simulation run");
  run->add_option("--config", run_common.config, "scenario config file")
      ->required();
  run->add_option("--protocol", run_common.protocol, "aodv|sqaodv|mdr");
  CLI::Option* seed_opt = run->add_option("--seed", run_seed, "run seed");
  run->add_option("--trace", run_trace, "write trace to this path");
  run->add_option("--report", run_report, "write report here (default stdout)");

  CommonArgs batch_common;
  std::string batch_seeds, batch_out;
  CLI::App* batch = app.add_subcommand("batch", "multi-seed batch run");
  batch->add_option("--config", batch_common.config, "scenario config file")
      ->required();
  batch->add_option("--protocol", batch_common.protocol, "aodv|sqaodv|mdr");
  batch->add_option("--seeds", batch_seeds, "inclusive range A..B or list a,b,c")
      ->required();
  batch->add_option("--out", batch_out, "output directory")->required();

  std::uint64_t grid_n = 0;
  std::string grid_area, grid_out;
  CLI::App* grid = app.add_subcommand("gen-grid", "emit a k x k node placement");
  grid->add_option("--n", grid_n, "node count (perfect square)")->required();
  grid->add_option("--area", grid_area, "WxH in meters, e.g. 540x540")
      ->required();
  grid->add_option("--out", grid_out, "output path")->required();

  std::string trace_path;
  CLI::App* validate = app.add_subcommand("validate-trace", "check a trace file");
  validate->add_option("path", trace_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (app.got_subcommand(run)) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = run_seed;
      return cmd_run(run_common, seed, run_trace, run_report);
    }
    if (app.got_subcommand(batch))
      return cmd_batch(batch_common, batch_seeds, batch_out);
    if (app.got_subcommand(grid))
      return cmd_gen_grid(grid_n, grid_area, grid_out);
    if (app.got_subcommand(validate)) return cmd_validate_trace(trace_path);
  } catch (const adhocsim::ContractViolation& e) {
    std::fprintf(stderr, "contract violation: %s\n", e.what());
    return kContractError;
  }
  return kConfigError;
}
