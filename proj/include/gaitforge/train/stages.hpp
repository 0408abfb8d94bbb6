#pragma once

#include <string>
#include <vector>

#include "gaitforge/env/env.hpp"
#include "gaitforge/rl/ppo.hpp"

namespace gf::train {

using gf::env::EnvConfig;
using gf::ref::Skill;

// One curriculum stage: fully resolved environment settings plus a budget.
struct StageConfig {
  std::string id;
  EnvConfig env;
  int iterations = 0;
  bool reset_optimizer = false;

  void validate() const {
    gf::ad::check(iterations > 0, "stage " + id + ": non-positive budget");
    gf::env::RewardFunction probe(env.weights, env.alphas);  // throws on bad weights
    (void)probe;
  }
};

struct SkillPlan {
  Skill skill;
  std::vector<StageConfig> stages;

  const StageConfig* find(const std::string& id) const {
    for (const auto& s : stages)
      if (s.id == id) return &s;
    return nullptr;
  }
};

enum class Preset { kDesk, kPaper };

inline const char* preset_name(Preset p) { return p == Preset::kDesk ? "desk" : "paper"; }
inline Preset preset_from_name(const std::string& s) {
  if (s == "desk") return Preset::kDesk;
  if (s == "paper") return Preset::kPaper;
  throw std::runtime_error("unknown preset '" + s + "'");
}

// Stage/skill weight deltas applied to the nominal column.
inline gf::env::WeightVector stage_weights(Skill skill, int stage /*1 or 2 (=stages 2,3)*/) {
  using namespace gf::env;
  WeightVector w = nominal_weights();
  if (skill == Skill::kWalk || skill == Skill::kStand) {
    w[kFootHeight] += -7.0;
    w[kBasePos] += -1.5;
    if (stage == 1) {
      w[kOrientation] += -2.5;
      w[kFootImpact] += -7.0;
    } else {
      w[kOrientation] += +2.5;
    }
  } else if (skill == Skill::kRun) {
    if (stage == 1) {
      w[kOrientation] += -5.0;
      w[kActionChange] += +2.0;
    } else {
      w[kAngRate] += +4.5;
      w[kMotorVel] += +3.0;
      w[kActionChange] += +2.0;
    }
  } else if (skill == Skill::kJump) {
    if (stage == 1) {
      w[kBasePos] += +5.5;
      w[kBaseVel] += -15.0;
      w[kOrientation] += +2.5;
      w[kFootImpact] += -5.0;
      w[kActionChange] += -3.0;
    } else {
      w[kMotorPos] += -7.5;
      w[kBaseHeight] += -2.0;
      w[kBasePos] += +7.5;
      w[kBaseVel] += -2.5;
      w[kAngRate] += +7.0;
      w[kJointAccel] += -3.0;
      w[kActionChange] += +7.0;
    }
  }
  return w;
}

// Paper iteration budgets (Table column order: single task, task
// randomization, combining standing, dynamics randomization, perturbation).
inline std::vector<int> paper_iterations(Skill skill) {
  switch (skill) {
    case Skill::kWalk: return {6000, 8000, 2000, 8000, 5000};
    case Skill::kRun: return {6000, 18000, 5000, 15000, 5000};
    case Skill::kJump: return {6000, 12000, 20000};
    case Skill::kStand: return {6000, 8000};
  }
  return {};
}

struct PlanOptions {
  Preset preset = Preset::kDesk;
  bool include_perturbation_stage = true;
  bool include_terrain_stage = false;  // running extension
  int desk_divisor = 20;
};

// The multi-stage curriculum: single-task -> task randomization (plus the
// standing sub-stage for periodic skills) -> dynamics randomization
// (-> optional perturbation / terrain stages).
inline SkillPlan build_plan(Skill skill, const PlanOptions& opt = {}) {
  SkillPlan plan;
  plan.skill = skill;
  const std::vector<int> paper = paper_iterations(skill);
  auto budget = [&](int stage_idx) {
    const int it = paper.at(stage_idx);
    return opt.preset == Preset::kPaper ? it : std::max(1, it / opt.desk_divisor);
  };

  EnvConfig base;
  base.skill = skill;
  base.episode_len = 2500;
  switch (skill) {
    case Skill::kWalk:
      base.fixed_command = {0.6, 0.72};
      break;
    case Skill::kRun:
      base.fixed_command = {2.1, 0.0};
      break;
    case Skill::kJump:
      base.fixed_command = {0.0, 0.0};
      base.episode_len = 2500;
      break;
    case Skill::kStand:
      base.fixed_command = {0.0, 0.72};
      break;
  }

  // Stage 1: one fixed task, tight tolerances
  StageConfig s1;
  s1.id = "S1";
  s1.env = base;
  s1.env.randomize_command = false;
  s1.env.weights = stage_weights(skill, 1);
  s1.env.e_e = 0.15;
  s1.env.e_e_enabled = true;
  s1.env.e_t = 1.0;
  if (skill == Skill::kJump) s1.env.episode_len = 750;
  s1.iterations = budget(0);
  plan.stages.push_back(s1);

  // Stage 2: task randomization, relaxed foot tolerance
  StageConfig s2;
  s2.id = "S2";
  s2.env = base;
  s2.env.randomize_command = skill != Skill::kStand;
  s2.env.weights = stage_weights(skill, 2);
  s2.env.e_e = 0.30;
  s2.env.e_e_enabled = true;
  s2.env.e_t = 0.6;
  s2.iterations = budget(1);
  plan.stages.push_back(s2);

  // Standing sub-stage for periodic skills only
  if (skill == Skill::kWalk || skill == Skill::kRun) {
    StageConfig s2b = s2;
    s2b.id = "S2b";
    s2b.env.stand_substage = true;
    s2b.iterations = budget(2);
    plan.stages.push_back(s2b);
  }

  // Stage 3: dynamics randomization, foot tolerance removed
  StageConfig s3;
  s3.id = "S3";
  s3.env = s2.env;
  s3.env.e_e_enabled = false;
  s3.env.e_t = 0.4;
  s3.env.rnd.dynamics = true;
  s3.env.stand_windows = skill == Skill::kWalk || skill == Skill::kRun;
  s3.id = "S3";
  s3.iterations = budget(skill == Skill::kJump ? 2 : 3);
  plan.stages.push_back(s3);

  if (opt.include_perturbation_stage && (skill == Skill::kWalk || skill == Skill::kRun)) {
    StageConfig s3p = s3;
    s3p.id = "S3p";
    s3p.env.rnd.perturbation = true;
    s3p.iterations = budget(4);
    plan.stages.push_back(s3p);
  }

  if (opt.include_terrain_stage && skill == Skill::kRun) {
    StageConfig s3t = plan.stages.back();
    s3t.id = "S3t";
    s3t.env.rnd.terrain = true;
    s3t.iterations = budget(4);
    plan.stages.push_back(s3t);
  }

  for (const auto& s : plan.stages) s.validate();
  return plan;
}

}  // namespace gf::train
