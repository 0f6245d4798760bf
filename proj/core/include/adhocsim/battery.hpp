#pragma once

#include "adhocsim/contract.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

// Smoothed drain estimates never divide by less than this.
inline constexpr double kAedrFloorW = 1e-9;
// Predicted lifetimes are capped here (effectively "infinite").
inline constexpr double kLifetimeCapS = 1e9;

// Per-node energy source with EWMA drain-rate estimation.
//
// The average energy decay rate (AEDR) is 0 until the first sample and is
// updated only at sampling instants: aedr = alpha * edr + (1 - alpha) * aedr.
class Battery {
 public:
  explicit Battery(double initial_j, double initial_aedr_w = 0.0);

  double initial() const { return initial_j_; }
  double residual() const { return residual_j_; }
  double debited() const { return debited_j_; }
  bool alive() const { return alive_; }
  double aedr() const { return aedr_w_; }

  // Consumes energy; the final debit is applied and the residual clamps at
  // 0, at which point the battery reports dead.  Returns the amount actually
  // applied.  Debiting a dead battery is a contract violation.
  double debit(double joules);

  // Energy decay rate over the window since the previous sample; advances
  // the sampling anchor.  now must be strictly later than the last sample.
  double sample_edr(SimTime now);

  void update_aedr(double edr, double alpha);

  // Convenience: sample_edr + update_aedr in one step.
  void sample(SimTime now, double alpha) { update_aedr(sample_edr(now), alpha); }

  // Predicted remaining lifetime in seconds, capped at kLifetimeCapS.
  double lifetime() const;

  // Admission threshold: energy for x_secs of current smoothed drain.
  double threshold(double secs) const { return secs * aedr_w_; }

 private:
  double initial_j_;
  double residual_j_;
  double debited_j_ = 0.0;
  double aedr_w_;
  SimTime last_sample_t_ = 0.0;
  double last_sample_residual_j_;
  bool alive_ = true;
};

}  // namespace adhocsim
