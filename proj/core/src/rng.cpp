#include "adhocsim/rng.hpp"

#include <cmath>

#include "adhocsim/contract.hpp"

namespace adhocsim {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= fnv1a(label);
  s_[0] = splitmix64(x);
  s_[1] = splitmix64(x) ^ a;
  s_[2] = splitmix64(x);
  s_[3] = splitmix64(x);
  // xoshiro state must not be all zero; unreachable for splitmix output in
  // practice but cheap to guarantee.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream RngStream::for_node(std::uint64_t seed, NodeId node) {
  return RngStream(seed, "node/" + std::to_string(node));
}

RngStream RngStream::for_session(std::uint64_t seed, const FlowKey& flow) {
  return RngStream(seed, "session/" + to_string(flow));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  contract_check(lo <= hi, "uniform: lo > hi");
  double u = next_double();  // always consumed, keeps streams aligned
  double v = lo + (hi - lo) * u;
  if (v >= hi && lo < hi) v = std::nextafter(hi, lo);
  return v;
}

double RngStream::exponential(double mean) {
  contract_check(mean > 0.0, "exponential: mean must be positive");
  return -mean * std::log1p(-next_double());
}

}  // namespace adhocsim
