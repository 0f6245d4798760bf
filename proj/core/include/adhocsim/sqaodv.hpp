#pragma once

#include <cstdint>
#include <map>
#include <set>

#include "adhocsim/flow_protocol.hpp"

namespace adhocsim {

// SQ-AODV: energy-based admission at intermediate nodes, bottleneck-lifetime
// route selection at the destination, and make-before-break maintenance via
// route-change requests (RCR) broadcast by nodes about to drain.
class SqAodvProtocol : public FlowProtocolBase {
 public:
  explicit SqAodvProtocol(ProtocolEnv env) : FlowProtocolBase(std::move(env)) {}

  void start() override;
  void on_death() override;

  // Admission rule, exposed for unit tests: admit iff residual strictly
  // exceeds duration * aedr when the duration is known, else iff residual
  // strictly exceeds threshold1.
  static bool admissible(double residual_j, double aedr_w,
                         std::optional<double> duration_s, double threshold1_s);

 protected:
  bool admit(const RreqBody& rreq) override;
  std::optional<double> rreq_duration(const FlowKey& flow) const override;
  void handle_rcr(const Frame& f, const RrepBody& rcr) override;
  void delivered_here(const FlowKey& flow) override;

 private:
  void rcr_tick();
  bool participates() const;
  void broadcast_rcr();
  void act_on_drain(const FlowKey& flow, NodeId drained, std::uint64_t uid);
  void relay_rcr_toward_source(const FlowKey& flow, NodeId drained,
                               std::uint64_t uid);

  bool rcr_sent_this_episode_ = false;
  // Flows delivered at this node; with a fresh reverse route these make the
  // node an active destination for drain-warning purposes.
  std::set<FlowKey> delivered_flows_;
  std::map<FlowKey, std::set<NodeId>> rcr_relayed_for_;
};

}  // namespace adhocsim
