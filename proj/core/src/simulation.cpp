#include "adhocsim/simulation.hpp"

#include <cmath>
#include <variant>

#include "adhocsim/aodv.hpp"
#include "adhocsim/contract.hpp"
#include "adhocsim/mdr.hpp"
#include "adhocsim/sqaodv.hpp"

namespace adhocsim {

Simulation::Simulation(const Scenario& scenario, const SimOptions& opts)
    : scenario_(scenario), opts_(opts) {
  std::uint64_t seed =
      opts_.seed_override ? *opts_.seed_override : scenario_.seed;
  mat_ = materialize(scenario_, seed, opts_.protocol_override);

  topo_ = std::make_unique<Topology>(mat_.positions, scenario_.comm_range_m);
  batteries_.reserve(scenario_.nodes);
  for (double e : mat_.energies_j) batteries_.emplace_back(e);
  metrics_ = std::make_unique<MetricsLedger>(scenario_.nodes, opts_.audit_paths);
  if (!opts_.trace_path.empty()) trace_.open(opts_.trace_path);
  medium_ = std::make_unique<Medium>(queue_, *topo_, batteries_, scenario_.medium,
                                     mat_.protocol, *metrics_, trace_);
  medium_->set_client(this);

  // Draw #1 of every node stream is reserved for the initial-energy draw, so
  // protocol draws sit at the same indices whether energies were drawn or
  // listed.  When drawn, the burn must reproduce the materialized value.
  node_rngs_.reserve(scenario_.nodes);
  for (std::size_t i = 0; i < scenario_.nodes; ++i) {
    node_rngs_.push_back(std::make_unique<RngStream>(
        RngStream::for_node(seed, static_cast<NodeId>(i))));
    if (scenario_.energy.kind == EnergySpec::kUniform) {
      double burn =
          node_rngs_.back()->uniform(scenario_.energy.lo_j, scenario_.energy.hi_j);
      contract_check(burn == mat_.energies_j[i],
                     "simulation: energy draw mismatch with materialization");
    } else {
      node_rngs_.back()->next_u64();
    }
  }

  traffic_ = std::make_unique<TrafficManager>(queue_, *metrics_, trace_, seed,
                                              [this] { return next_uid_++; });

  ProtocolConfig cfg = scenario_.pcfg;
  cfg.aedr_alpha = mat_.aedr_alpha;
  cfg.aedr_window_s = mat_.aedr_window_s;
  protocols_.reserve(scenario_.nodes);
  std::vector<RoutingProtocol*> raw;
  for (std::size_t i = 0; i < scenario_.nodes; ++i) {
    ProtocolEnv env;
    env.queue = &queue_;
    env.medium = medium_.get();
    env.metrics = metrics_.get();
    env.trace = &trace_;
    env.rng = node_rngs_[i].get();
    env.battery = &batteries_[i];
    env.self = static_cast<NodeId>(i);
    env.cfg = cfg;
    env.observer = opts_.observer;
    env.next_uid = [this] { return next_uid_++; };
    env.end_session = [this](const FlowKey& f, EndReason why) {
      traffic_->end_session(f, why);
    };
    env.session_active = [this](const FlowKey& f) {
      return traffic_->session_active(f);
    };
    env.remaining_duration = [this](const FlowKey& f) {
      return traffic_->remaining_duration(f);
    };
    switch (mat_.protocol) {
      case Proto::kAodv:
        protocols_.push_back(std::make_unique<AodvProtocol>(std::move(env)));
        break;
      case Proto::kSqAodv:
        protocols_.push_back(std::make_unique<SqAodvProtocol>(std::move(env)));
        break;
      case Proto::kMdr:
        protocols_.push_back(std::make_unique<MdrProtocol>(std::move(env)));
        break;
    }
    raw.push_back(protocols_.back().get());
  }
  traffic_->set_protocols(std::move(raw));

  for (std::size_t i = 0; i < scenario_.sessions.size(); ++i) {
    const SessionSpec& sess = scenario_.sessions[i];
    SessionPlan plan;
    plan.flow = sess.flow;
    plan.packet_count = sess.packets;
    plan.start_s = mat_.session_starts_s[i];
    if (sess.kind == SessionSpec::kCbr) {
      plan.kind = SessionPlan::kCbr;
      plan.cbr_pps = sess.cbr_pps;
    } else {
      plan.kind = SessionPlan::kPoisson;
      plan.poisson_mean_s =
          8.0 * static_cast<double>(plan.payload_bytes) / sess.rate_bps;
    }
    traffic_->add_session(plan);
  }
}

Simulation::~Simulation() = default;

RunReport Simulation::run() {
  contract_check(!ran_, "simulation: run() called twice");
  ran_ = true;

  // Sample ticks are armed before protocol timers so a drain check at a
  // coincident instant sees the estimate refreshed at that instant.
  if (mat_.aedr_window_s > 0.0) {
    for (std::size_t i = 0; i < scenario_.nodes; ++i)
      queue_.schedule(mat_.aedr_window_s,
                      [this, n = static_cast<NodeId>(i)] { sample_tick(n); });
  }
  for (auto& p : protocols_) p->start();
  traffic_->start();

  if (scenario_.mode == Scenario::kHorizon) {
    events_ = queue_.run_until(scenario_.duration_s);
  } else {
    double limit = scenario_.time_limit_s;
    while (queue_.has_pending() && !quiescent()) {
      if (limit > 0.0 && queue_.next_time() > limit) {
        queue_.advance_to(limit);
        break;
      }
      queue_.step();
      ++events_;
    }
  }
  end_time_ = queue_.now();

  medium_->census_in_flight(*metrics_);
  for (const auto& p : protocols_) p->census(*metrics_);
  for (const auto& [flow, fs] : metrics_->flows()) {
    contract_check(fs.injected == fs.delivered + fs.dropped_total() + fs.in_flight,
                   "simulation: packet conservation violated");
  }

  trace_.close();
  return build_report(scenario_.name, to_string(mat_.protocol), mat_.seed,
                      end_time_, events_, *metrics_, scenario_.strict_pdr);
}

double Simulation::energy_ledger_error() const {
  double worst = 0.0;
  for (const Battery& b : batteries_) {
    double err = std::abs((b.initial() - b.residual()) - b.debited()) / b.initial();
    worst = std::max(worst, err);
  }
  return worst;
}

void Simulation::deliver(NodeId at, const Frame& f) {
  if (std::holds_alternative<DataBody>(f.pkt.body)) metrics_->visit(f.pkt.uid, at);
  protocols_[at]->receive(f);
}

void Simulation::link_failed(const Frame& f) {
  protocols_[f.sender]->link_failed(f);
}

void Simulation::node_died(NodeId n) {
  protocols_[n]->on_death();
  traffic_->source_died(n);
}

void Simulation::sample_tick(NodeId n) {
  if (!batteries_[n].alive()) return;
  batteries_[n].sample(queue_.now(), mat_.aedr_alpha);
  queue_.schedule(queue_.now() + mat_.aedr_window_s, [this, n] { sample_tick(n); });
}

bool Simulation::quiescent() const {
  if (traffic_->unfinished() != 0) return false;
  if (medium_->busy_frames() != 0) return false;
  for (const auto& p : protocols_) {
    if (p->busy() != 0) return false;
  }
  return true;
}

}  // namespace adhocsim
