#pragma once

#include <array>
#include <cmath>
#include <string>

#include "gaitforge/ad/array.hpp"

namespace gf::env {

// Reward components, fixed order. Three groups: motion tracking, task
// completion, smoothing.
enum RewardComponent {
  kMotorPos = 0,
  kBaseHeight,
  kFootHeight,
  kBasePos,
  kBaseVel,
  kOrientation,
  kAngRate,
  kFootImpact,
  kTorque,
  kMotorVel,
  kJointAccel,
  kActionChange,
  kNumRewardComponents
};

inline const char* reward_component_name(int i) {
  static const char* names[kNumRewardComponents] = {
      "motor_pos",  "base_height", "foot_height", "base_pos",
      "base_vel",   "orientation", "ang_rate",    "foot_impact",
      "torque",     "motor_vel",   "joint_accel", "action_change"};
  return names[i];
}

using WeightVector = std::array<double, kNumRewardComponents>;

// Nominal weight column; stage/skill deltas are applied on top.
inline WeightVector nominal_weights() {
  return {15.0, 5.0, 10.0, 7.5, 15.0, 10.0, 3.0, 10.0, 3.0, 0.0, 3.0, 3.0};
}

// Per-component error scales (the alpha of exp(-alpha * ||u - v||)).
struct RewardAlphas {
  double motor_pos = 2.0;       // 1/rad
  double base_height = 10.0;    // 1/m
  double foot_height = 10.0;    // 1/m
  double base_pos = 1.0;        // 1/m
  double base_vel = 1.0;        // s/m
  double orientation = 20.0;    // on 1 - cos(pitch)
  double ang_rate = 0.5;        // s/rad
  double foot_impact = 0.002;   // 1/N
  double torque = 0.01;         // 1/(N m)
  double motor_vel = 0.1;       // s/rad
  double joint_accel = 0.002;   // s^2/rad
  double action_change = 2.0;

  double of(int i) const {
    const double a[kNumRewardComponents] = {motor_pos,  base_height, foot_height, base_pos,
                                            base_vel,   orientation, ang_rate,    foot_impact,
                                            torque,     motor_vel,   joint_accel, action_change};
    return a[i];
  }
};

// A zero weight disables the component; negative effective weights are a
// configuration error. The total is weight-normalized so r_t stays in (0, 1].
class RewardFunction {
 public:
  RewardFunction() : RewardFunction(nominal_weights(), RewardAlphas{}) {}
  RewardFunction(const WeightVector& w, const RewardAlphas& alphas) : w_(w), alphas_(alphas) {
    norm_ = 0.0;
    for (int i = 0; i < kNumRewardComponents; ++i) {
      gf::ad::check(w_[i] >= 0.0, std::string("reward weight '") + reward_component_name(i) +
                                      "' is negative after stage adjustments");
      norm_ += w_[i];
    }
    gf::ad::check(norm_ > 0.0, "reward weights sum to zero");
  }

  const WeightVector& weights() const { return w_; }
  const RewardAlphas& alphas() const { return alphas_; }

  // errors[i] is ||u - v||_2 of component i
  double total(const std::array<double, kNumRewardComponents>& errors,
               std::array<double, kNumRewardComponents>* components = nullptr) const {
    double r = 0.0;
    for (int i = 0; i < kNumRewardComponents; ++i) {
      const double ri = std::exp(-alphas_.of(i) * errors[i]);
      if (components) (*components)[i] = ri;
      r += w_[i] * ri;
    }
    return r / norm_;
  }

 private:
  WeightVector w_;
  RewardAlphas alphas_;
  double norm_ = 1.0;
};

}  // namespace gf::env
