#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "gaitforge/rl/ppo.hpp"
#include "gaitforge/train/stages.hpp"

namespace gf::io {

using nlohmann::json;

// A run is fully described by (config snapshot, code version, seed); the
// snapshot below round-trips through JSON with unknown keys rejected.
struct RunConfig {
  std::string skill = "walk";
  std::string preset = "desk";
  std::string variant = "dual";
  uint64_t seed = 1;
  int workers = 0;  // 0: GF_WORKERS or hardware
  std::string out = "runs/run";
  gf::rl::PpoConfig ppo;
  gf::train::PlanOptions plan_opt;
  std::map<std::string, int> stage_iterations;  // per-stage overrides
  gf::env::EnvConfig env;                       // tuning fields only (stages own the rest)

  gf::train::SkillPlan build_plan_with_overrides() const {
    gf::train::PlanOptions po = plan_opt;
    po.preset = gf::train::preset_from_name(preset);
    auto plan = gf::train::build_plan(gf::ref::skill_from_name(skill), po);
    for (auto& stage : plan.stages) {
      apply_env_tuning(stage.env);
      auto it = stage_iterations.find(stage.id);
      if (it != stage_iterations.end()) stage.iterations = it->second;
    }
    return plan;
  }

  // Tuning knobs that carry across stages (weights/tolerances stay staged).
  void apply_env_tuning(gf::env::EnvConfig& e) const {
    e.alphas = env.alphas;
    e.long_history = env.long_history;
    e.noise_motor_pos = env.noise_motor_pos;
    e.noise_motor_vel = env.noise_motor_vel;
    e.noise_pitch = env.noise_pitch;
    e.noise_linvel = env.noise_linvel;
    e.switch_lo = env.switch_lo;
    e.switch_hi = env.switch_hi;
    e.stand_prob = env.stand_prob;
    e.ranges = env.ranges;
  }
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known,
                           const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    gf::ad::check(known.count(it.key()) > 0, "config: unknown key '" + scope + it.key() + "'");
}

inline void get_if(const json& j, const char* k, double& v) {
  if (j.contains(k)) v = j.at(k).get<double>();
}
inline void get_if(const json& j, const char* k, int& v) {
  if (j.contains(k)) v = j.at(k).get<int>();
}
inline void get_if(const json& j, const char* k, bool& v) {
  if (j.contains(k)) v = j.at(k).get<bool>();
}
inline void get_if(const json& j, const char* k, uint64_t& v) {
  if (j.contains(k)) v = j.at(k).get<uint64_t>();
}
inline void get_if(const json& j, const char* k, std::string& v) {
  if (j.contains(k)) v = j.at(k).get<std::string>();
}

}  // namespace detail

// Table values for the paper preset: iteration batch 65536, optimization
// batch 8192, step size 1e-4 for actor and critic.
inline gf::rl::PpoConfig paper_ppo() {
  gf::rl::PpoConfig p;
  p.step_size = 1e-4;
  p.critic_step_size = 0.0;
  p.iteration_batch = 65536;
  p.minibatch = 8192;
  p.n_envs = 64;
  return p;
}

inline void from_json_strict(const json& j, gf::rl::PpoConfig& p) {
  detail::reject_unknown(j, {"clip", "step_size", "critic_step_size", "iteration_batch",
                             "minibatch", "epochs", "gamma", "lambda", "max_grad_norm", "n_envs"},
                         "ppo.");
  detail::get_if(j, "clip", p.clip);
  detail::get_if(j, "step_size", p.step_size);
  detail::get_if(j, "critic_step_size", p.critic_step_size);
  detail::get_if(j, "iteration_batch", p.iteration_batch);
  detail::get_if(j, "minibatch", p.minibatch);
  detail::get_if(j, "epochs", p.epochs);
  detail::get_if(j, "gamma", p.gamma);
  detail::get_if(j, "lambda", p.lambda);
  detail::get_if(j, "max_grad_norm", p.max_grad_norm);
  detail::get_if(j, "n_envs", p.n_envs);
}

inline void from_json_strict(const json& j, gf::env::RewardAlphas& a) {
  detail::reject_unknown(j, {"motor_pos", "base_height", "foot_height", "base_pos", "base_vel",
                             "orientation", "ang_rate", "foot_impact", "torque", "motor_vel",
                             "joint_accel", "action_change"},
                         "env.alphas.");
  detail::get_if(j, "motor_pos", a.motor_pos);
  detail::get_if(j, "base_height", a.base_height);
  detail::get_if(j, "foot_height", a.foot_height);
  detail::get_if(j, "base_pos", a.base_pos);
  detail::get_if(j, "base_vel", a.base_vel);
  detail::get_if(j, "orientation", a.orientation);
  detail::get_if(j, "ang_rate", a.ang_rate);
  detail::get_if(j, "foot_impact", a.foot_impact);
  detail::get_if(j, "torque", a.torque);
  detail::get_if(j, "motor_vel", a.motor_vel);
  detail::get_if(j, "joint_accel", a.joint_accel);
  detail::get_if(j, "action_change", a.action_change);
}

inline void from_json_strict(const json& j, gf::env::CommandRanges& r) {
  detail::reject_unknown(j, {"walk_speed_lo", "walk_speed_hi", "walk_height_lo", "walk_height_hi",
                             "run_speed_lo", "run_speed_hi", "jump_x_lo", "jump_x_hi",
                             "jump_elev_lo", "jump_elev_hi"},
                         "env.ranges.");
  detail::get_if(j, "walk_speed_lo", r.walk_speed_lo);
  detail::get_if(j, "walk_speed_hi", r.walk_speed_hi);
  detail::get_if(j, "walk_height_lo", r.walk_height_lo);
  detail::get_if(j, "walk_height_hi", r.walk_height_hi);
  detail::get_if(j, "run_speed_lo", r.run_speed_lo);
  detail::get_if(j, "run_speed_hi", r.run_speed_hi);
  detail::get_if(j, "jump_x_lo", r.jump_x_lo);
  detail::get_if(j, "jump_x_hi", r.jump_x_hi);
  detail::get_if(j, "jump_elev_lo", r.jump_elev_lo);
  detail::get_if(j, "jump_elev_hi", r.jump_elev_hi);
}

inline void from_json_strict(const json& j, gf::env::EnvConfig& e) {
  detail::reject_unknown(j, {"long_history", "noise_motor_pos", "noise_motor_vel", "noise_pitch",
                             "noise_linvel", "switch_lo", "switch_hi", "stand_prob", "alphas",
                             "ranges"},
                         "env.");
  detail::get_if(j, "long_history", e.long_history);
  detail::get_if(j, "noise_motor_pos", e.noise_motor_pos);
  detail::get_if(j, "noise_motor_vel", e.noise_motor_vel);
  detail::get_if(j, "noise_pitch", e.noise_pitch);
  detail::get_if(j, "noise_linvel", e.noise_linvel);
  detail::get_if(j, "switch_lo", e.switch_lo);
  detail::get_if(j, "switch_hi", e.switch_hi);
  detail::get_if(j, "stand_prob", e.stand_prob);
  if (j.contains("alphas")) from_json_strict(j.at("alphas"), e.alphas);
  if (j.contains("ranges")) from_json_strict(j.at("ranges"), e.ranges);
}

inline void from_json_strict(const json& j, RunConfig& c) {
  detail::reject_unknown(j, {"skill", "preset", "variant", "seed", "workers", "out", "ppo",
                             "plan", "env"},
                         "");
  detail::get_if(j, "skill", c.skill);
  detail::get_if(j, "preset", c.preset);
  detail::get_if(j, "variant", c.variant);
  detail::get_if(j, "seed", c.seed);
  detail::get_if(j, "workers", c.workers);
  detail::get_if(j, "out", c.out);
  if (j.contains("ppo")) from_json_strict(j.at("ppo"), c.ppo);
  if (j.contains("plan")) {
    const json& p = j.at("plan");
    detail::reject_unknown(p, {"include_perturbation_stage", "include_terrain_stage",
                               "desk_divisor", "stage_iterations"},
                           "plan.");
    detail::get_if(p, "include_perturbation_stage", c.plan_opt.include_perturbation_stage);
    detail::get_if(p, "include_terrain_stage", c.plan_opt.include_terrain_stage);
    detail::get_if(p, "desk_divisor", c.plan_opt.desk_divisor);
    if (p.contains("stage_iterations"))
      for (auto it = p.at("stage_iterations").begin(); it != p.at("stage_iterations").end(); ++it)
        c.stage_iterations[it.key()] = it.value().get<int>();
  }
  if (j.contains("env")) from_json_strict(j.at("env"), c.env);
  // validation
  gf::ref::skill_from_name(c.skill);
  gf::train::preset_from_name(c.preset);
  gf::nets::variant_from_name(c.variant);
  gf::ad::check(c.ppo.valid(), "config: invalid ppo block");
}

inline json to_json(const RunConfig& c) {
  json j;
  j["skill"] = c.skill;
  j["preset"] = c.preset;
  j["variant"] = c.variant;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["out"] = c.out;
  j["ppo"] = {{"clip", c.ppo.clip},
              {"step_size", c.ppo.step_size},
              {"critic_step_size", c.ppo.critic_step_size},
              {"iteration_batch", c.ppo.iteration_batch},
              {"minibatch", c.ppo.minibatch},
              {"epochs", c.ppo.epochs},
              {"gamma", c.ppo.gamma},
              {"lambda", c.ppo.lambda},
              {"max_grad_norm", c.ppo.max_grad_norm},
              {"n_envs", c.ppo.n_envs}};
  j["plan"] = {{"include_perturbation_stage", c.plan_opt.include_perturbation_stage},
               {"include_terrain_stage", c.plan_opt.include_terrain_stage},
               {"desk_divisor", c.plan_opt.desk_divisor},
               {"stage_iterations", c.stage_iterations}};
  j["env"] = {{"long_history", c.env.long_history},
              {"noise_motor_pos", c.env.noise_motor_pos},
              {"noise_motor_vel", c.env.noise_motor_vel},
              {"noise_pitch", c.env.noise_pitch},
              {"noise_linvel", c.env.noise_linvel},
              {"switch_lo", c.env.switch_lo},
              {"switch_hi", c.env.switch_hi},
              {"stand_prob", c.env.stand_prob},
              {"alphas",
               {{"motor_pos", c.env.alphas.motor_pos},
                {"base_height", c.env.alphas.base_height},
                {"foot_height", c.env.alphas.foot_height},
                {"base_pos", c.env.alphas.base_pos},
                {"base_vel", c.env.alphas.base_vel},
                {"orientation", c.env.alphas.orientation},
                {"ang_rate", c.env.alphas.ang_rate},
                {"foot_impact", c.env.alphas.foot_impact},
                {"torque", c.env.alphas.torque},
                {"motor_vel", c.env.alphas.motor_vel},
                {"joint_accel", c.env.alphas.joint_accel},
                {"action_change", c.env.alphas.action_change}}},
              {"ranges",
               {{"walk_speed_lo", c.env.ranges.walk_speed_lo},
                {"walk_speed_hi", c.env.ranges.walk_speed_hi},
                {"walk_height_lo", c.env.ranges.walk_height_lo},
                {"walk_height_hi", c.env.ranges.walk_height_hi},
                {"run_speed_lo", c.env.ranges.run_speed_lo},
                {"run_speed_hi", c.env.ranges.run_speed_hi},
                {"jump_x_lo", c.env.ranges.jump_x_lo},
                {"jump_x_hi", c.env.ranges.jump_x_hi},
                {"jump_elev_lo", c.env.ranges.jump_elev_lo},
                {"jump_elev_hi", c.env.ranges.jump_elev_hi}}}};
  return j;
}

// --set dotted.path=value overrides applied at the JSON level
inline void apply_override(json& j, const std::string& dotted, const std::string& value) {
  json* cur = &j;
  size_t pos = 0;
  std::string path = dotted;
  while (true) {
    const size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (...) {
        parsed = value;  // plain string
      }
      (*cur)[key] = parsed;
      return;
    }
    cur = &(*cur)[key];
    pos = dot + 1;
  }
}

inline uint64_t content_hash(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

#ifndef GF_GIT_SHA
#define GF_GIT_SHA "unknown"
#endif

// Run directory: config snapshot + code version + config content hash.
inline void write_run_manifest(const std::string& dir, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  const std::string snapshot = to_json(cfg).dump(2);
  std::ofstream(dir + "/config.json") << snapshot << "\n";
  std::ofstream(dir + "/MANIFEST") << "code_version: " << GF_GIT_SHA << "\n"
                                   << "config_hash: " << hash_hex(content_hash(snapshot)) << "\n"
                                   << "seed: " << cfg.seed << "\n";
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  gf::ad::check(f.good(), "config: cannot open " + path);
  json j = json::parse(f);
  RunConfig c;
  from_json_strict(j, c);
  return c;
}

}  // namespace gf::io
