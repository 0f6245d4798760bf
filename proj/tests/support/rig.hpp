#pragma once

// Library-level harness: a hand-wired network (queue, topology, batteries,
// medium, one protocol instance per node) without Scenario/Simulation on
// top.  Tests use it when they need direct control over battery state
// (frozen AEDRs), candidate observation, or packet-by-packet stepping.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <variant>
#include <vector>

#include "adhocsim/aodv.hpp"
#include "adhocsim/battery.hpp"
#include "adhocsim/event_queue.hpp"
#include "adhocsim/mdr.hpp"
#include "adhocsim/medium.hpp"
#include "adhocsim/metrics.hpp"
#include "adhocsim/observer.hpp"
#include "adhocsim/packet.hpp"
#include "adhocsim/protocol.hpp"
#include "adhocsim/rng.hpp"
#include "adhocsim/sqaodv.hpp"
#include "adhocsim/topology.hpp"
#include "adhocsim/trace.hpp"
#include "adhocsim/types.hpp"

namespace rigtest {

struct NodeInit {
  adhocsim::Position pos;
  double energy_j = 100.0;
  double aedr_w = 0.0;  // frozen initial estimate (no sampling in the rig)
};

class MiniNet : public adhocsim::MediumClient {
 public:
  MiniNet(const std::vector<NodeInit>& nodes, double comm_range,
          adhocsim::Proto proto, adhocsim::ProtocolConfig cfg = {},
          std::uint64_t seed = 1,
          adhocsim::DiscoveryObserver* observer = nullptr,
          bool audit_paths = false,
          adhocsim::MediumParams medium_params = {})
      : metrics(nodes.size(), audit_paths) {
    using namespace adhocsim;
    std::vector<Position> pos;
    for (const auto& n : nodes) pos.push_back(n.pos);
    topo = std::make_unique<Topology>(std::move(pos), comm_range);
    for (const auto& n : nodes) batteries.emplace_back(n.energy_j, n.aedr_w);
    medium = std::make_unique<Medium>(queue, *topo, batteries, medium_params,
                                      proto, metrics, trace);
    medium->set_client(this);
    for (NodeId i = 0; i < nodes.size(); ++i) {
      rngs.push_back(std::make_unique<RngStream>(RngStream::for_node(seed, i)));
      ProtocolEnv env;
      env.queue = &queue;
      env.medium = medium.get();
      env.metrics = &metrics;
      env.trace = &trace;
      env.rng = rngs.back().get();
      env.battery = &batteries[i];
      env.self = i;
      env.cfg = cfg;
      env.observer = observer;
      env.next_uid = [this] { return next_uid_++; };
      env.end_session = [this](const FlowKey& f, EndReason why) {
        ended.emplace_back(f, why);
      };
      env.session_active = [this](const FlowKey& f) {
        return active_flows.count(f) != 0;
      };
      env.remaining_duration = [this](const FlowKey& f) {
        auto it = durations.find(f);
        return it == durations.end() ? std::nullopt
                                     : std::optional<double>(it->second);
      };
      switch (proto) {
        case Proto::kAodv:
          protocols.push_back(std::make_unique<AodvProtocol>(std::move(env)));
          break;
        case Proto::kSqAodv:
          protocols.push_back(std::make_unique<SqAodvProtocol>(std::move(env)));
          break;
        case Proto::kMdr:
          protocols.push_back(std::make_unique<MdrProtocol>(std::move(env)));
          break;
      }
    }
    for (auto& p : protocols) p->start();
  }

  // Mirrors the production flow: account the injection, then hand the data
  // packet to the source's protocol instance.
  std::uint64_t inject_data(const adhocsim::FlowKey& flow) {
    std::uint64_t uid = next_uid_++;
    adhocsim::DataBody d;
    d.flow = flow;
    d.injected_at = queue.now();
    metrics.injected(flow);
    protocols[flow.src]->inject(adhocsim::Packet{uid, d});
    return uid;
  }

  void begin_flow(const adhocsim::FlowKey& flow,
                  std::optional<double> duration = std::nullopt) {
    active_flows.insert(flow);
    if (duration) durations[flow] = *duration;
    protocols[flow.src]->flow_starting(flow, duration);
  }

  // MediumClient
  void deliver(adhocsim::NodeId at, const adhocsim::Frame& f) override {
    if (metrics.audit_paths()) {
      if (std::holds_alternative<adhocsim::DataBody>(f.pkt.body))
        metrics.visit(f.pkt.uid, at);
    }
    protocols[at]->receive(f);
  }
  void link_failed(const adhocsim::Frame& f) override {
    protocols[f.sender]->link_failed(f);
  }
  void node_died(adhocsim::NodeId n) override { protocols[n]->on_death(); }

  adhocsim::FlowProtocolBase* flow_proto(adhocsim::NodeId n) {
    return dynamic_cast<adhocsim::FlowProtocolBase*>(protocols[n].get());
  }
  adhocsim::AodvProtocol* aodv(adhocsim::NodeId n) {
    return dynamic_cast<adhocsim::AodvProtocol*>(protocols[n].get());
  }

  // Follows per-hop forward routes from flow.src to flow.dst; empty result
  // means the chain is broken before reaching the destination.
  std::vector<adhocsim::NodeId> walk_forward_route(
      const adhocsim::FlowKey& flow) {
    std::vector<adhocsim::NodeId> path{flow.src};
    adhocsim::NodeId cur = flow.src;
    while (cur != flow.dst) {
      const adhocsim::RouteEntry* e = nullptr;
      if (auto* fp = flow_proto(cur))
        e = fp->forward_route(flow);
      else if (auto* a = aodv(cur))
        e = a->route(flow.dst);
      if (e == nullptr || path.size() > protocols.size()) return {};
      cur = e->next_hop;
      path.push_back(cur);
    }
    return path;
  }

  adhocsim::EventQueue queue;
  std::unique_ptr<adhocsim::Topology> topo;
  std::vector<adhocsim::Battery> batteries;
  adhocsim::MetricsLedger metrics;
  adhocsim::TraceWriter trace;  // disabled sink
  std::unique_ptr<adhocsim::Medium> medium;
  std::vector<std::unique_ptr<adhocsim::RngStream>> rngs;
  std::vector<std::unique_ptr<adhocsim::RoutingProtocol>> protocols;
  std::set<adhocsim::FlowKey> active_flows;
  std::map<adhocsim::FlowKey, double> durations;
  std::vector<std::pair<adhocsim::FlowKey, adhocsim::EndReason>> ended;

 private:
  std::uint64_t next_uid_ = 1;
};

}  // namespace rigtest
