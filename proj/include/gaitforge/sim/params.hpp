#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::sim {

// Link indexing for the planar 5-link biped.
enum Link { kTorso = 0, kLThigh = 1, kLShank = 2, kRThigh = 3, kRShank = 4 };
// Actuated joints (rows 3..6 of q).
enum Joint { kHipL = 0, kKneeL = 1, kHipR = 2, kKneeR = 3 };

// Every randomizable physical/controller parameter. Values here are the
// nominal robot; the randomizer returns perturbed copies.
struct DynamicsParams {
  // per-link [torso, Lthigh, Lshank, Rthigh, Rshank]
  std::array<double, 5> mass{10.0, 2.5, 1.5, 2.5, 1.5};
  std::array<double, 5> length{0.5, 0.4, 0.4, 0.4, 0.4};
  std::array<double, 5> com_along{0.25, 0.2, 0.2, 0.2, 0.2};  // from proximal joint
  std::array<double, 5> com_perp{0.0, 0.0, 0.0, 0.0, 0.0};    // lateral CoM shift
  // torso inertia sized for a trunk with arms rather than a bare rod
  std::array<double, 5> inertia{0.5, 2.5 * 0.16 / 12.0, 1.5 * 0.16 / 12.0,
                                2.5 * 0.16 / 12.0, 1.5 * 0.16 / 12.0};

  std::array<double, 4> joint_damping{1.0, 1.0, 1.0, 1.0};  // N m s / rad
  std::array<double, 2> knee_spring_k{30.0, 30.0};          // N m / rad
  double knee_spring_rest = -0.5;

  double friction = 1.0;
  double ground_k = 1e5;   // N / m
  double ground_c = 1e3;   // N s / m
  double v_eps = 0.01;     // m / s, tangential smoothing

  std::array<double, 4> kp{80.0, 80.0, 80.0, 80.0};
  std::array<double, 4> kd{2.0, 2.0, 2.0, 2.0};
  std::array<double, 4> tau_max{60.0, 60.0, 60.0, 60.0};

  int delay_steps = 0;  // action delay in whole policy steps

  // measurement biases (per-episode samples; see randomize)
  std::array<double, 4> motor_pos_bias{0, 0, 0, 0};
  std::array<double, 4> motor_vel_bias{0, 0, 0, 0};
  double pitch_bias = 0.0;
  std::array<double, 2> linvel_bias{0, 0};

  double gravity = 9.81;

  bool valid() const {
    for (double v : mass)
      if (!(v > 0)) return false;
    for (double v : length)
      if (!(v > 0)) return false;
    for (double v : inertia)
      if (!(v > 0)) return false;
    for (double v : knee_spring_k)
      if (!(v > 0)) return false;
    for (double v : kp)
      if (!(v > 0)) return false;
    for (double v : kd)
      if (!(v > 0)) return false;
    for (double v : joint_damping)
      if (!(v >= 0)) return false;
    return friction >= 0 && ground_k > 0 && delay_steps >= 0;
  }
};

// Motor position limits and normalization ranges (fixed geometry, not
// randomized). Standing pose sits at the center of each motor's range so a
// zero action holds a crouch.
struct MotorRange {
  std::array<double, 4> lo{-0.75, -1.60, -0.75, -1.60};
  std::array<double, 4> hi{1.25, 0.60, 1.25, 0.60};

  double mid(int j) const { return 0.5 * (lo[j] + hi[j]); }
  double half(int j) const { return 0.5 * (hi[j] - lo[j]); }
  double denorm(int j, double a) const { return mid(j) + a * half(j); }
  double norm(int j, double q) const { return (q - mid(j)) / half(j); }
  double clamp(int j, double q) const { return std::min(hi[j], std::max(lo[j], q)); }
};

// Standing joint configuration: hips 0.25, knees -0.5 puts each foot
// directly below the pelvis at height 2 * 0.4 * cos(0.25).
inline constexpr double kStandHip = 0.25;
inline constexpr double kStandKnee = -0.5;
inline const double kStandHeight = 2.0 * 0.4 * std::cos(0.25);  // ~0.7751

}  // namespace gf::sim
