#pragma once

#include <cstdint>
#include <map>

#include "adhocsim/flow_protocol.hpp"

namespace adhocsim {

// MDR: max-min-lifetime route selection with no admission control and no
// drain warnings; instead each source refreshes every flow's route with a
// fresh flood on a fixed period anchored at first establishment, regardless
// of route health.
class MdrProtocol : public FlowProtocolBase {
 public:
  explicit MdrProtocol(ProtocolEnv env) : FlowProtocolBase(std::move(env)) {}

  void flow_finished(const FlowKey& flow, EndReason why) override;

 protected:
  bool admit(const RreqBody&) override { return true; }
  std::optional<double> rreq_duration(const FlowKey&) const override {
    return std::nullopt;
  }
  void route_established(const FlowKey& flow, bool first) override;

 private:
  void refresh_tick(const FlowKey& flow, std::uint64_t epoch);

  struct Refresh {
    SimTime anchor = 0.0;
    std::uint64_t ticks = 0;
    // Bumped when the flow ends so a stale timer closure cannot act.
    std::uint64_t epoch = 0;
    bool active = false;
  };
  std::map<FlowKey, Refresh> refresh_;
};

}  // namespace adhocsim
