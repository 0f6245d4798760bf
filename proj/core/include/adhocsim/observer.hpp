#pragma once

#include <cstdint>
#include <optional>

#include "adhocsim/types.hpp"

namespace adhocsim {

// Test and instrumentation hook into discovery internals.  Every callback
// has an empty default so production runs pay one virtual call per event
// and nothing else.
struct DiscoveryObserver {
  virtual ~DiscoveryObserver() = default;

  // origin started (or restarted) a discovery attempt for flow/dst.
  virtual void discovery_started(NodeId /*origin*/, NodeId /*dst*/,
                                 std::uint32_t /*bid*/,
                                 std::optional<FlowKey> /*flow*/) {}
  // A relay applied the admission rule.  admitted=false means silent drop.
  virtual void admission_checked(NodeId /*relay*/, std::uint32_t /*bid*/,
                                 bool /*admitted*/, double /*residual_j*/,
                                 double /*needed_j*/) {}
  // A relay rebroadcast the request; prev is where its copy arrived from.
  virtual void request_relayed(NodeId /*relay*/, NodeId /*origin*/,
                               std::uint32_t /*bid*/, NodeId /*prev*/,
                               double /*bottleneck_s*/) {}
  // The destination retained a candidate reverse path.
  virtual void candidate_retained(NodeId /*dst*/, NodeId /*origin*/,
                                  std::uint32_t /*bid*/, NodeId /*prev*/,
                                  double /*bottleneck_s*/,
                                  std::uint32_t /*hop_count*/) {}
  // The destination replied, naming the chosen previous hop.
  virtual void reply_sent(NodeId /*dst*/, NodeId /*origin*/, std::uint32_t /*bid*/,
                          NodeId /*chosen_prev*/, double /*bottleneck_s*/) {}
  // A newer discovery superseded a collector before it replied.
  virtual void collector_cancelled(NodeId /*dst*/, NodeId /*origin*/,
                                   std::uint32_t /*old_bid*/) {}
  // Discovery for flow/dst concluded.  success=false means retries exhausted.
  virtual void discovery_ended(NodeId /*origin*/, NodeId /*dst*/, bool /*success*/) {}
};

}  // namespace adhocsim
