#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace adhocsim {

// Simulated time in seconds since run start.
using SimTime = double;

// Node index, unique per scenario.
using NodeId = std::uint32_t;

// Identifies one traffic session end to end.
struct FlowKey {
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t flow_id = 0;

  auto operator<=>(const FlowKey&) const = default;
};

// Canonical "src:dst:flow_id" rendering used in traces and reports.
std::string to_string(const FlowKey& f);

}  // namespace adhocsim
