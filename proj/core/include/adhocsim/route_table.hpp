#pragma once

#include <cstdint>
#include <optional>
#include <set>

#include "adhocsim/types.hpp"

namespace adhocsim {

enum class RouteState { kUp, kDown };

struct RouteEntry {
  NodeId next_hop = 0;
  std::uint32_t hop_count = 0;
  std::uint32_t dst_seq = 0;       // 0 = unknown
  RouteState state = RouteState::kDown;
  SimTime expires_at = 0.0;
  std::set<NodeId> precursors;
};

// Replaced entry retained briefly so packets stamped with the old route
// generation can finish their segment on it instead of bouncing between
// generations (make-before-break installs, refreshes, repairs).
struct ShadowEntry {
  RouteEntry entry;
  SimTime expires_at = 0.0;
};

// True when cand should replace inc.  Freshness first (higher destination
// sequence), then hop count; an Up candidate with seq >= also evicts a Down
// incumbent regardless of hops.  Ties keep the incumbent.
inline bool better_route(const RouteEntry& cand, const RouteEntry& inc) {
  if (cand.dst_seq != inc.dst_seq) return cand.dst_seq > inc.dst_seq;
  if (inc.state == RouteState::kDown && cand.state == RouteState::kUp) return true;
  if (inc.state == RouteState::kUp && cand.state == RouteState::kDown) return false;
  return cand.hop_count < inc.hop_count;
}

}  // namespace adhocsim
