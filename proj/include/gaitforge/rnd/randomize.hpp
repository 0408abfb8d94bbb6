#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gaitforge/ad/rng.hpp"
#include "gaitforge/ref/motions.hpp"
#include "gaitforge/sim/biped.hpp"
#include "gaitforge/sim/params.hpp"
#include "gaitforge/sim/terrain.hpp"

namespace gf::rnd {

struct Interval {
  double lo, hi;
  double sample(gf::Rng& rng) const { return rng.uniform(lo, hi); }
  double norm(double v) const { return (2.0 * v - lo - hi) / (hi - lo); }
};

// Per-parameter uniform intervals for per-episode dynamics sampling.
struct RandomizationConfig {
  bool dynamics = false;
  bool perturbation = false;
  bool terrain = false;

  Interval friction{0.3, 3.0};
  Interval joint_damping{0.3, 4.0};      // absolute, per joint
  Interval spring_scale{0.8, 1.2};       // x default, per knee
  Interval mass_scale{0.5, 1.5};         // x default, per link
  Interval inertia_scale{0.7, 1.3};      // x default, per link
  Interval root_com{-0.1, 0.1};          // m, along and lateral
  Interval link_com{-0.05, 0.05};        // m, along the link
  Interval pd_scale{0.7, 1.3};           // x default, per joint, Kp and Kd
  Interval motor_pos_noise{-0.002, 0.002};
  Interval motor_vel_noise{-0.01, 0.01};
  Interval pitch_noise{-0.002, 0.002};
  Interval linvel_noise{-0.04, 0.04};
  Interval delay_s{0.0, 0.025};

  // terrain parameter bounds
  double max_slope_deg = 10.0;
  double max_step_height = 0.1;
  double max_wave_amplitude = 0.05;

  bool valid() const {
    auto ok = [](const Interval& i) { return i.hi >= i.lo; };
    return ok(friction) && ok(joint_damping) && ok(spring_scale) && ok(mass_scale) &&
           ok(inertia_scale) && ok(root_com) && ok(link_com) && ok(pd_scale) &&
           spring_scale.lo > 0 && mass_scale.lo > 0 && inertia_scale.lo > 0 && pd_scale.lo > 0;
  }
};

// Fixed draw order so a (config, seed) pair always yields the same params.
inline gf::sim::DynamicsParams sample_dynamics(const RandomizationConfig& cfg,
                                               const gf::sim::DynamicsParams& nominal,
                                               gf::Rng& rng, double policy_dt = 0.03) {
  gf::ad::check(cfg.valid(), "randomization config invalid");
  gf::sim::DynamicsParams p = nominal;
  if (!cfg.dynamics) return p;
  p.friction = cfg.friction.sample(rng);
  for (int j = 0; j < 4; ++j) p.joint_damping[j] = cfg.joint_damping.sample(rng);
  for (int k = 0; k < 2; ++k) p.knee_spring_k[k] = nominal.knee_spring_k[k] * cfg.spring_scale.sample(rng);
  for (int l = 0; l < 5; ++l) p.mass[l] = nominal.mass[l] * cfg.mass_scale.sample(rng);
  for (int l = 0; l < 5; ++l) p.inertia[l] = nominal.inertia[l] * cfg.inertia_scale.sample(rng);
  p.com_along[0] = nominal.com_along[0] + cfg.root_com.sample(rng);
  p.com_perp[0] = nominal.com_perp[0] + cfg.root_com.sample(rng);
  for (int l = 1; l < 5; ++l) p.com_along[l] = nominal.com_along[l] + cfg.link_com.sample(rng);
  for (int j = 0; j < 4; ++j) p.kp[j] = nominal.kp[j] * cfg.pd_scale.sample(rng);
  for (int j = 0; j < 4; ++j) p.kd[j] = nominal.kd[j] * cfg.pd_scale.sample(rng);
  for (int j = 0; j < 4; ++j) p.motor_pos_bias[j] = cfg.motor_pos_noise.sample(rng);
  for (int j = 0; j < 4; ++j) p.motor_vel_bias[j] = cfg.motor_vel_noise.sample(rng);
  p.pitch_bias = cfg.pitch_noise.sample(rng);
  p.linvel_bias[0] = cfg.linvel_noise.sample(rng);
  p.linvel_bias[1] = cfg.linvel_noise.sample(rng);
  // zero-order-hold delay quantized to whole policy steps
  p.delay_steps = static_cast<int>(std::lround(cfg.delay_s.sample(rng) / policy_dt));
  gf::ad::check(p.valid(), "sampled dynamics invalid");
  // sampled params must keep the sim well posed
  gf::sim::PlanarBiped probe(p);
  gf::sim::Vec7 q = gf::sim::Vec7::Zero();
  q[1] = gf::sim::kStandHeight;
  q[3] = q[5] = gf::sim::kStandHip;
  q[4] = q[6] = gf::sim::kStandKnee;
  Eigen::LLT<gf::sim::Mat7> llt(probe.mass_matrix(q));
  gf::ad::check(llt.info() == Eigen::Success, "sampled dynamics: mass matrix not PD");
  return p;
}

// Normalized (interval-mapped to [-1,1]) vector of the sampled parameters;
// the critic and the expert's extrinsics encoder consume this.
inline std::vector<float> params_vector(const RandomizationConfig& cfg,
                                        const gf::sim::DynamicsParams& p,
                                        const gf::sim::DynamicsParams& nominal) {
  std::vector<float> v;
  v.reserve(43);
  auto push = [&v](const Interval& i, double x) { v.push_back(static_cast<float>(i.norm(x))); };
  push(cfg.friction, p.friction);
  for (int j = 0; j < 4; ++j) push(cfg.joint_damping, p.joint_damping[j]);
  for (int k = 0; k < 2; ++k) push(cfg.spring_scale, p.knee_spring_k[k] / nominal.knee_spring_k[k]);
  for (int l = 0; l < 5; ++l) push(cfg.mass_scale, p.mass[l] / nominal.mass[l]);
  for (int l = 0; l < 5; ++l) push(cfg.inertia_scale, p.inertia[l] / nominal.inertia[l]);
  push(cfg.root_com, p.com_along[0] - nominal.com_along[0]);
  push(cfg.root_com, p.com_perp[0] - nominal.com_perp[0]);
  for (int l = 1; l < 5; ++l) push(cfg.link_com, p.com_along[l] - nominal.com_along[l]);
  for (int j = 0; j < 4; ++j) push(cfg.pd_scale, p.kp[j] / nominal.kp[j]);
  for (int j = 0; j < 4; ++j) push(cfg.pd_scale, p.kd[j] / nominal.kd[j]);
  for (int j = 0; j < 4; ++j) push(cfg.motor_pos_noise, p.motor_pos_bias[j]);
  for (int j = 0; j < 4; ++j) push(cfg.motor_vel_noise, p.motor_vel_bias[j]);
  push(cfg.pitch_noise, p.pitch_bias);
  push(cfg.linvel_noise, p.linvel_bias[0]);
  push(cfg.linvel_noise, p.linvel_bias[1]);
  v.push_back(static_cast<float>(p.delay_steps == 0 ? -1.0 : 1.0));
  return v;
}

inline constexpr int kParamsVectorDim = 43;

inline gf::sim::Terrain sample_terrain(const RandomizationConfig& cfg, gf::Rng& rng) {
  gf::ad::check(cfg.terrain, "terrain sampling requested while disabled");
  gf::sim::Terrain t;
  const int family = rng.uniform_int(0, 3);
  t.origin = rng.uniform(0.5, 1.5);
  switch (family) {
    case 0: {
      t.kind = gf::sim::Terrain::Kind::kWave;
      t.amplitude = rng.uniform(0.01, cfg.max_wave_amplitude);
      t.wavelength = rng.uniform(1.0, 3.0);
      t.phase = rng.uniform(0.0, 2.0 * M_PI);
      break;
    }
    case 1: {
      t.kind = gf::sim::Terrain::Kind::kSlope;
      const double deg = rng.uniform(-cfg.max_slope_deg, cfg.max_slope_deg);
      t.slope = std::tan(deg * M_PI / 180.0);
      break;
    }
    case 2: {
      t.kind = gf::sim::Terrain::Kind::kStairs;
      t.step_height = rng.uniform(0.02, cfg.max_step_height);
      t.step_run = rng.uniform(0.25, 0.45);
      break;
    }
    default: {
      t.kind = gf::sim::Terrain::Kind::kSteps;
      t.cell_size = rng.uniform(0.3, 0.6);
      t.cells.resize(64);
      for (auto& c : t.cells) c = rng.uniform(-cfg.max_step_height, cfg.max_step_height);
      break;
    }
  }
  return t;
}

// Piecewise-constant pelvis wrench: active windows alternate with quiet
// gaps, both with durations from the skill's elapsed-time interval.
struct PerturbationSchedule {
  bool enabled = false;
  Interval force{-20.0, 20.0};     // N, x and z
  Interval torque{-5.0, 5.0};      // N m, pitch
  Interval elapsed{0.1, 3.0};      // s; walking default, running uses [0.1, 1.0]

  static PerturbationSchedule for_skill(gf::ref::Skill skill, bool on) {
    PerturbationSchedule s;
    // jumping and standing never train with perturbation
    s.enabled = on && (skill == gf::ref::Skill::kWalk || skill == gf::ref::Skill::kRun);
    if (skill == gf::ref::Skill::kRun) s.elapsed = Interval{0.1, 1.0};
    return s;
  }
};

class PerturbationProcess {
 public:
  PerturbationProcess() = default;
  PerturbationProcess(const PerturbationSchedule& sched, gf::Rng rng)
      : sched_(sched), rng_(rng) {}

  Eigen::Vector3d at(double t) {
    if (!sched_.enabled) return Eigen::Vector3d::Zero();
    while (t >= window_end_) advance();
    return active_ ? wrench_ : Eigen::Vector3d::Zero();
  }

 private:
  void advance() {
    window_start_ = window_end_;
    window_end_ = window_start_ + sched_.elapsed.sample(rng_);
    active_ = !active_;
    if (active_) {
      wrench_ = Eigen::Vector3d(sched_.force.sample(rng_), sched_.force.sample(rng_),
                                sched_.torque.sample(rng_));
    }
  }

  PerturbationSchedule sched_;
  gf::Rng rng_;
  Eigen::Vector3d wrench_ = Eigen::Vector3d::Zero();
  double window_start_ = 0.0;
  double window_end_ = 0.0;
  bool active_ = true;  // first advance() flips to a quiet gap
};

}  // namespace gf::rnd
