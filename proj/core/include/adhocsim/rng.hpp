#pragma once

#include <cstdint>
#include <string_view>

#include "adhocsim/types.hpp"

namespace adhocsim {

// Deterministic random stream (xoshiro256++ seeded via splitmix64 over the
// run seed and a stream label).  The same (seed, label, draw index) yields
// the same value on every platform; standard-library distributions are
// deliberately avoided because their draw sequences are implementation
// defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  // One stream per node; draw #1 is reserved for the node's initial-energy
  // draw so traffic and protocol draws never perturb topology realization.
  static RngStream for_node(std::uint64_t seed, NodeId node);
  // One stream per traffic session.
  static RngStream for_session(std::uint64_t seed, const FlowKey& flow);

  std::uint64_t next_u64();

  // Uniform double in [lo, hi); uniform(x, x) == x.
  double uniform(double lo, double hi);

  // Inverse-CDF exponential: -mean * ln(1 - u).  mean must be > 0.
  double exponential(double mean);

 private:
  double next_double();  // [0, 1), 53-bit resolution

  std::uint64_t s_[4];
};

}  // namespace adhocsim
