#include "adhocsim/battery.hpp"

#include <algorithm>

namespace adhocsim {

Battery::Battery(double initial_j, double initial_aedr_w)
    : initial_j_(initial_j),
      residual_j_(initial_j),
      aedr_w_(initial_aedr_w),
      last_sample_residual_j_(initial_j) {
  contract_check(initial_j > 0.0, "battery: initial energy must be positive");
  contract_check(initial_aedr_w >= 0.0, "battery: initial aedr must be >= 0");
}

double Battery::debit(double joules) {
  contract_check(joules >= 0.0, "battery: negative debit");
  contract_check(alive_, "battery: debit after death");
  double applied = joules;
  if (joules >= residual_j_) {
    // Final debit is applied, the residual clamps at zero and the node dies.
    applied = residual_j_;
    residual_j_ = 0.0;
    alive_ = false;
  } else {
    residual_j_ -= joules;
  }
  debited_j_ += applied;
  return applied;
}

double Battery::sample_edr(SimTime now) {
  contract_check(now > last_sample_t_, "battery: zero-length sampling window");
  double edr = (last_sample_residual_j_ - residual_j_) / (now - last_sample_t_);
  last_sample_t_ = now;
  last_sample_residual_j_ = residual_j_;
  return edr;
}

void Battery::update_aedr(double edr, double alpha) {
  contract_check(edr >= 0.0, "battery: negative edr");
  contract_check(alpha > 0.0 && alpha <= 1.0, "battery: alpha outside (0,1]");
  aedr_w_ = alpha * edr + (1.0 - alpha) * aedr_w_;
}

double Battery::lifetime() const {
  return std::min(residual_j_ / std::max(aedr_w_, kAedrFloorW), kLifetimeCapS);
}

}  // namespace adhocsim
