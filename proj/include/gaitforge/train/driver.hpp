#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "gaitforge/ad/checkpoint.hpp"
#include "gaitforge/rl/ppo.hpp"
#include "gaitforge/rl/rollout.hpp"
#include "gaitforge/train/stages.hpp"

namespace gf::train {

struct IterationRow {
  std::string stage;
  int iteration = 0;
  double mean_return = 0.0;
  double mean_episode_len = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double wall_s = 0.0;
};

struct TrainerOptions {
  gf::rl::PpoConfig ppo;
  gf::nets::Variant variant = gf::nets::Variant::kDual;
  uint64_t seed = 1;
  std::string out_dir;
  bool reset_optimizer_between_stages = false;
  bool quiet = true;
  // early-stop hook: return true to end the current stage
  std::function<bool(const IterationRow&)> stop_when;
  // fresh metrics row observer (benchmarks aggregate through this)
  std::function<void(const IterationRow&)> on_iteration;
};

// Runs a SkillPlan end to end: per-stage collector, shared policy/critic,
// per-stage metrics CSV and checkpoint; resumable from any stage boundary.
class Trainer {
 public:
  Trainer(const SkillPlan& plan, const TrainerOptions& opt)
      : plan_(plan), opt_(opt), ref_() {
    gf::ad::check(!plan.stages.empty(), "empty plan");
    arch_ = gf::nets::arch_for_env(plan.stages[0].env, opt.variant);
    policy_ = std::make_unique<gf::nets::PolicyModel>(arch_, opt.seed, opt.ppo.step_size,
                                                      opt.ppo.max_grad_norm, opt.ppo.clip);
    critic_ = std::make_unique<gf::nets::CriticModel>(gf::env::privileged_dim(plan.stages[0].env),
                                                      opt.seed, opt.ppo.critic_lr(),
                                                      opt.ppo.max_grad_norm);
    if (!opt_.out_dir.empty()) std::filesystem::create_directories(opt_.out_dir);
  }

  gf::nets::PolicyModel& policy() { return *policy_; }
  gf::nets::CriticModel& critic() { return *critic_; }
  const gf::nets::ArchSpec& arch() const { return arch_; }
  const std::vector<IterationRow>& history() const { return history_; }

  // Loads a stage-boundary checkpoint and continues from the next stage.
  void resume_from(const std::string& ckpt_path, const std::string& completed_stage) {
    const auto tensors = gf::ad::load_checkpoint(ckpt_path);
    policy_->import_tensors(tensors, true);
    critic_->import_tensors(tensors, true);
    for (size_t i = 0; i < plan_.stages.size(); ++i)
      if (plan_.stages[i].id == completed_stage) start_stage_ = static_cast<int>(i) + 1;
  }

  std::string run() {
    std::string last_ckpt;
    for (size_t si = static_cast<size_t>(start_stage_); si < plan_.stages.size(); ++si) {
      const StageConfig& stage = plan_.stages[si];
      run_stage(stage, static_cast<int>(si));
      last_ckpt = save_stage_checkpoint(stage.id);
    }
    return last_ckpt;
  }

  void run_stage(const StageConfig& stage, int ordinal) {
    gf::ad::check(stage.env.command_dim() == arch_.cmd_dim &&
                      stage.env.preview_dim() == arch_.preview_dim,
                  "stage env incompatible with the policy architecture");
    // residual wiring must reach the env
    EnvConfig env_cfg = stage.env;
    env_cfg.residual_action = arch_.variant == gf::nets::Variant::kResidual;
    if (stage.reset_optimizer || (ordinal > start_stage_ && opt_.reset_optimizer_between_stages)) {
      policy_->optimizer().reset();
      critic_->optimizer().reset();
    }
    const uint64_t stage_seed = gf::Rng::derive(opt_.seed, 0x57A6E, ordinal);
    gf::rl::Collector col(env_cfg, &ref_, opt_.ppo.n_envs, stage_seed);
    std::ofstream csv;
    std::ofstream episodes;
    if (!opt_.out_dir.empty()) {
      csv.open(opt_.out_dir + "/metrics_" + std::to_string(ordinal) + "_" + stage.id + ".csv");
      csv << "iteration,mean_return,mean_episode_len,policy_loss,value_loss,clip_fraction,"
             "approx_kl,wall_s\n";
      episodes.open(opt_.out_dir + "/episodes_" + std::to_string(ordinal) + "_" + stage.id +
                    ".csv");
      episodes << "env,episode,length,return";
      for (int i = 0; i < gf::rnd::kParamsVectorDim; ++i) episodes << ",p" << i;
      episodes << "\n";
    }
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < stage.iterations; ++it) {
      auto batch = col.collect(*policy_, *critic_, opt_.ppo.steps_per_env());
      const auto m = gf::rl::ppo_update(*policy_, *critic_, batch, opt_.ppo,
                                        gf::Rng::derive(stage_seed, 0x17E2, it));
      if (episodes.is_open()) {
        for (const auto& ep : col.drain_episode_log()) {
          episodes << ep.env << "," << ep.episode << "," << ep.length << "," << ep.ret;
          for (float v : ep.params_vec) episodes << "," << v;
          episodes << "\n";
        }
      }
      IterationRow row;
      row.stage = stage.id;
      row.iteration = it;
      row.mean_return = col.stats().mean_return();
      row.mean_episode_len = col.stats().mean_length();
      row.policy_loss = m.policy_loss;
      row.value_loss = m.value_loss;
      row.clip_fraction = m.clip_fraction;
      row.approx_kl = m.approx_kl;
      row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      history_.push_back(row);
      if (csv.is_open()) {
        csv << row.iteration << "," << row.mean_return << "," << row.mean_episode_len << ","
            << row.policy_loss << "," << row.value_loss << "," << row.clip_fraction << ","
            << row.approx_kl << "," << row.wall_s << "\n";
        csv.flush();
      }
      if (!opt_.quiet && it % 10 == 0)
        std::cerr << stage.id << " it " << it << " ep_len " << row.mean_episode_len
                  << " ret " << row.mean_return << "\n";
      if (!std::isfinite(row.mean_return))
        throw std::runtime_error("stage " + stage.id + " diverged (non-finite return)");
      if (opt_.on_iteration) opt_.on_iteration(row);
      if (opt_.stop_when && opt_.stop_when(row)) break;
    }
  }

  std::string save_stage_checkpoint(const std::string& stage_id) {
    if (opt_.out_dir.empty()) return {};
    std::map<std::string, gf::ad::Array<float>> tensors;
    policy_->export_tensors(tensors);
    critic_->export_tensors(tensors);
    const std::string path = opt_.out_dir + "/ckpt_" + stage_id + ".gfckpt";
    gf::ad::save_checkpoint(path, tensors);
    return path;
  }

 private:
  SkillPlan plan_;
  TrainerOptions opt_;
  gf::ref::ReferenceMotion ref_;
  gf::nets::ArchSpec arch_;
  std::unique_ptr<gf::nets::PolicyModel> policy_;
  std::unique_ptr<gf::nets::CriticModel> critic_;
  std::vector<IterationRow> history_;
  int start_stage_ = 0;
};

}  // namespace gf::train
