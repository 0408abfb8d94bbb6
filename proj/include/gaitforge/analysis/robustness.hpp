#pragma once

#include <string>
#include <vector>

#include "gaitforge/analysis/latent.hpp"

namespace gf::an {

// Fig.-9-style protocol: survival under a constant pelvis force or a CoM
// offset while performing the fixed task. Survival = no fall within the
// window (tracking tolerances disabled for the sweep).
struct RobustnessCase {
  std::string policy_name;
  std::string disturbance;  // "force" or "com"
  double magnitude = 0.0;
  int seed = 0;
  bool survived = false;
  double time_survived = 0.0;
};

inline bool survives(gf::nets::PolicyModel& policy, gf::env::EnvConfig cfg,
                     const gf::ref::ReferenceMotion* ref, const Eigen::Vector3d& wrench,
                     double com_offset, uint64_t seed, double duration_s = 15.0,
                     double* time_survived = nullptr) {
  cfg.e_e_enabled = false;
  cfg.e_t = 1e9;
  cfg.randomize_command = false;
  cfg.rnd = gf::rnd::RandomizationConfig{};
  gf::sim::DynamicsParams p;
  if (com_offset != 0.0)
    for (auto& c : p.com_along) c += com_offset;
  gf::env::LocomotionEnv env(cfg, ref);
  env.set_dynamics_override(p);
  auto bundle = env.reset(seed, 0);
  const int total = static_cast<int>(duration_s / cfg.policy_dt);
  for (int t = 0; t < total; ++t) {
    if (t * cfg.policy_dt >= 0.5) env.set_external_wrench(wrench);
    auto inputs = gf::rl::batch_from_bundles(policy, {bundle});
    const auto mean = policy.rollout_tape().forward(inputs).at("mean");
    std::array<double, 4> a;
    for (int j = 0; j < 4; ++j) a[j] = std::clamp<double>(mean.data[j], -1.0, 1.0);
    auto res = env.step(a);
    bundle = std::move(res.obs);
    if (res.done) {
      if (time_survived) *time_survived = t * cfg.policy_dt;
      return false;
    }
  }
  if (time_survived) *time_survived = duration_s;
  return true;
}

struct NamedPolicy {
  std::string name;
  gf::nets::PolicyModel* policy;
};

// Grid of survive/fall outcomes under constant-force and CoM-offset sweeps.
inline std::vector<RobustnessCase> robustness_suite(
    const std::vector<NamedPolicy>& policies, const gf::env::EnvConfig& cfg,
    const gf::ref::ReferenceMotion* ref, const std::vector<double>& force_levels,
    const std::vector<double>& com_offsets, int seeds, double duration_s = 15.0) {
  std::vector<RobustnessCase> grid;
  for (const auto& np : policies) {
    for (double f : force_levels)
      for (int s = 0; s < seeds; ++s) {
        RobustnessCase c;
        c.policy_name = np.name;
        c.disturbance = "force";
        c.magnitude = f;
        c.seed = s;
        c.survived = survives(*np.policy, cfg, ref, Eigen::Vector3d(f, 0, 0), 0.0,
                              gf::Rng::derive(900, s), duration_s, &c.time_survived);
        grid.push_back(c);
      }
    for (double d : com_offsets)
      for (int s = 0; s < seeds; ++s) {
        RobustnessCase c;
        c.policy_name = np.name;
        c.disturbance = "com";
        c.magnitude = d;
        c.seed = s;
        c.survived = survives(*np.policy, cfg, ref, Eigen::Vector3d::Zero(), d,
                              gf::Rng::derive(901, s), duration_s, &c.time_survived);
        grid.push_back(c);
      }
  }
  return grid;
}

}  // namespace gf::an
