#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "gaitforge/ad/rng.hpp"
#include "gaitforge/env/filter.hpp"
#include "gaitforge/env/history.hpp"
#include "gaitforge/env/reward.hpp"
#include "gaitforge/ref/motions.hpp"
#include "gaitforge/rnd/randomize.hpp"
#include "gaitforge/sim/biped.hpp"

namespace gf::env {

using gf::ref::Skill;

inline constexpr int kObsDim = 11;   // motor pos (4), motor vel (4), pitch, vx, vz
inline constexpr int kActDim = 4;
inline constexpr int kLongHistory = 66;
inline constexpr int kShortHistory = 4;

struct CommandRanges {
  double walk_speed_lo = -1.5, walk_speed_hi = 1.5;
  double walk_height_lo = 0.58, walk_height_hi = 0.76;
  double run_speed_lo = 1.4, run_speed_hi = 3.5;   // planar-scaled
  double jump_x_lo = -0.5, jump_x_hi = 1.5;
  double jump_elev_lo = -0.5, jump_elev_hi = 0.5;
};

// Fixed affine observation normalization (no running statistics).
struct ObsScales {
  double motor_vel = 10.0;
  double pitch = 0.5;
  double linvel = 2.0;
  double base_z_mid = 0.775, base_z_half = 0.3;
  double pitch_rate = 5.0;
  double foot_clear = 0.3;
};

// Everything one curriculum stage needs from the environment.
struct EnvConfig {
  Skill skill = Skill::kWalk;
  int episode_len = 2500;
  double policy_dt = 0.03;
  int substeps = 60;
  int long_history = kLongHistory;  // history-length study variants

  bool randomize_command = false;           // stage 2+
  std::array<double, 2> fixed_command{0.6, 0.72};
  double switch_lo = 1.0, switch_hi = 15.0; // command hold times, seconds
  CommandRanges ranges;

  WeightVector weights = nominal_weights();
  RewardAlphas alphas;
  // standing windows use bumped smoothing weights (Appendix-style)
  double stand_motor_vel_bump = 3.0;
  double stand_action_change_bump = 3.0;

  double e_e = 0.15;
  bool e_e_enabled = true;
  double e_t = 1.0;
  double fall_z = 0.45;

  gf::rnd::RandomizationConfig rnd;

  // standing sub-stage: command standing after a random walking timespan
  bool stand_substage = false;              // S2b: stand until episode end
  bool stand_windows = false;               // S3+: finite standing windows
  double stand_after_lo = 2.0, stand_after_hi = 20.0;
  double stand_window_lo = 2.0, stand_window_hi = 5.0;
  double stand_prob = 0.25;                 // chance a switch commands standing
  double stand_height = 0.72;

  bool residual_action = false;             // residual baseline wiring

  // reset noise
  double reset_joint_noise = 0.03;
  double reset_vel_noise = 0.05;
  double reset_z_extra = 0.01;

  // white measurement noise (fixed scale; biases come from randomization)
  double noise_motor_pos = 0.001;
  double noise_motor_vel = 0.005;
  double noise_pitch = 0.001;
  double noise_linvel = 0.02;

  ObsScales scales;

  int command_dim() const {
    switch (skill) {
      case Skill::kWalk: return 2;
      case Skill::kRun: return 1;
      case Skill::kJump: return 2;
      case Skill::kStand: return 0;
    }
    return 0;
  }
  int preview_dim() const {
    return (skill == Skill::kRun || skill == Skill::kJump) ? 13 : 12;
  }
};

enum class Termination { kNone = 0, kFall, kFootTol, kTaskTol, kTimeout };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kNone: return "none";
    case Termination::kFall: return "fall";
    case Termination::kFootTol: return "foot_tol";
    case Termination::kTaskTol: return "task_tol";
    case Termination::kTimeout: return "timeout";
  }
  return "?";
}

// Input blocks the policy variants assemble from.
struct ObsBundle {
  std::vector<float> command;     // normalized, skill-dependent width
  std::vector<float> preview;     // normalized motor previews (+ ref height)
  std::vector<float> obs_now;     // latest normalized observation
  std::vector<float> short_pairs; // newest-first (o, a) pairs
  std::vector<float> short_obs;   // newest-first observations only
  std::vector<float> long_cnn;    // [15 x 66] channel-major
  std::vector<float> long_obs_cnn;// [11 x 66]
  std::vector<float> params_vec;  // normalized dynamics parameters
  std::vector<float> privileged;  // critic input
  std::vector<float> ref_motors_norm;  // normalized current reference motors
};

struct StepInfo {
  double reward = 0.0;
  std::array<double, kNumRewardComponents> reward_components{};
  Termination termination = Termination::kNone;
  bool sim_blowup = false;
  std::array<double, 4> applied_tau{};
  std::array<double, 4> filtered_action{};
  std::array<double, 2> peak_fz{};
  std::array<bool, 2> in_contact{};
  bool standing_commanded = false;
  std::array<double, 2> command{};
  double task_target_x = 0.0;
};

// The POMDP: observation assembly with dual I/O history, action low-pass
// filtering plus zero-order-hold delay, Table-style weighted exp rewards,
// ordered early terminations, and per-interval command scheduling.
class LocomotionEnv {
 public:
  LocomotionEnv(const EnvConfig& cfg, const gf::ref::ReferenceMotion* ref)
      : cfg_(cfg), ref_(ref), nominal_(), biped_(nominal_),
        history_(kObsDim, kActDim, cfg.long_history, kShortHistory),
        filter_(4.0, 1.0 / cfg.policy_dt) {
    RewardFunction validate(cfg_.weights, cfg_.alphas);  // rejects bad weights
    (void)validate;
  }

  const EnvConfig& config() const { return cfg_; }
  const gf::sim::DynamicsParams& dynamics() const { return biped_.params(); }
  const gf::sim::Terrain& terrain() const { return terrain_; }
  const gf::sim::RobotState& state() const { return state_; }
  const gf::sim::MotorRange& motor_range() const { return motors_; }
  int steps() const { return t_; }
  double time() const { return t_ * cfg_.policy_dt; }
  long episode_index() const { return episode_ - 1; }
  bool done() const { return done_; }

  // Extra per-step wrench injected by analysis scenarios (not training).
  void set_external_wrench(const Eigen::Vector3d& w) { scenario_wrench_ = w; }
  // Scenario override: force the commanded task.
  void force_command(const std::array<double, 2>& c) {
    command_ = c;
    standing_ = false;
    task_x_ = state_.q[0];
    start_skill_segment();
  }
  void force_standing(bool on) {
    standing_ = on;
    task_x_ = state_.q[0];
  }
  // Shift the world frame along x (origin re-centering; observations must
  // be invariant to this by construction).
  void translate_x(double dx) {
    state_.q[0] += dx;
    task_x_ += dx;
    jump_origin_x_ += dx;
    terrain_.origin += dx;
  }
  void force_dynamics(const gf::sim::DynamicsParams& p) { biped_.set_params(p); }
  // Replaces sampled dynamics at every reset (delay line and params vector
  // follow the override).
  void set_dynamics_override(std::optional<gf::sim::DynamicsParams> p) {
    dyn_override_ = std::move(p);
  }

  ObsBundle reset(uint64_t master_seed, int env_index) {
    const uint64_t ep_key = gf::Rng::derive(master_seed, 0x9e11, env_index, episode_);
    ++episode_;
    gf::Rng rng_dyn(gf::Rng::derive(ep_key, 1));
    gf::Rng rng_terrain(gf::Rng::derive(ep_key, 2));
    cmd_rng_ = gf::Rng(gf::Rng::derive(ep_key, 3));
    gf::Rng& rng_cmd = cmd_rng_;
    gf::Rng rng_reset(gf::Rng::derive(ep_key, 4));
    obs_rng_ = gf::Rng(gf::Rng::derive(ep_key, 5));

    biped_.set_params(dyn_override_
                          ? *dyn_override_
                          : gf::rnd::sample_dynamics(cfg_.rnd, nominal_, rng_dyn, cfg_.policy_dt));
    params_vec_ = gf::rnd::params_vector(cfg_.rnd, biped_.params(), nominal_);

    terrain_ = gf::sim::Terrain{};
    if (cfg_.rnd.terrain) terrain_ = gf::rnd::sample_terrain(cfg_.rnd, rng_terrain);

    command_ = sample_command(rng_cmd);
    next_switch_ = cfg_.randomize_command
                       ? rng_cmd.uniform(cfg_.switch_lo, cfg_.switch_hi)
                       : std::numeric_limits<double>::infinity();
    standing_ = cfg_.skill == Skill::kStand;
    stand_at_ = cfg_.stand_substage ? rng_cmd.uniform(cfg_.stand_after_lo, cfg_.stand_after_hi)
                                    : std::numeric_limits<double>::infinity();
    stand_until_ = std::numeric_limits<double>::infinity();

    perturb_ = gf::rnd::PerturbationProcess(
        gf::rnd::PerturbationSchedule::for_skill(cfg_.skill, cfg_.rnd.perturbation),
        gf::Rng(gf::Rng::derive(ep_key, 6)));
    scenario_wrench_.setZero();

    // jump task: platform terrain when the target elevation is nonzero
    if (cfg_.skill == Skill::kJump && std::abs(command_[1]) > 1e-9) {
      terrain_ = gf::sim::Terrain{};
      terrain_.kind = gf::sim::Terrain::Kind::kStairs;
      terrain_.step_height = command_[1];
      terrain_.step_run = 1e6;  // single ledge
      terrain_.origin = std::max(0.15, command_[0] - 0.3);
    }

    // skill clock and initial posture from the reference
    t_ = 0;
    skill_clock_ = 0.0;
    if (cfg_.skill == Skill::kWalk || cfg_.skill == Skill::kRun)
      skill_clock_ = rng_reset.uniform(0.0, ref_->period(cfg_.skill));
    const gf::ref::RefFrame f = current_ref_frame();
    state_.q.setZero();
    state_.qd.setZero();
    state_.q[0] = 0.0;
    // lift so the lower reference foot sits on the ground (flight poses stay up)
    state_.q[1] = f.base_z - std::min(0.0, std::min(f.foot_z[0], f.foot_z[1])) +
                  rng_reset.uniform(0.0, cfg_.reset_z_extra);
    state_.q[2] = 0.0;
    for (int j = 0; j < 4; ++j)
      state_.q[3 + j] = f.motors[j] + rng_reset.uniform(-cfg_.reset_joint_noise, cfg_.reset_joint_noise);
    const double vx0 = commanded_velocity();
    state_.qd[0] = vx0 + rng_reset.uniform(-cfg_.reset_vel_noise, cfg_.reset_vel_noise);
    for (int j = 2; j < 7; ++j) state_.qd[j] += rng_reset.uniform(-cfg_.reset_vel_noise, cfg_.reset_vel_noise);

    jump_origin_x_ = state_.q[0];
    task_x_ = state_.q[0];
    prev_qd_ = state_.qd;
    prev_action_ = {0, 0, 0, 0};
    done_ = false;
    blowup_ = false;

    // prime the filter and the delay line at the pose-holding action
    std::array<double, 4> hold{};
    for (int j = 0; j < 4; ++j)
      hold[j] = cfg_.residual_action ? 0.0 : motors_.norm(j, motors_.clamp(j, f.motors[j]));
    filter_.prime(hold);
    // d queued entries delay the effective action by d policy steps
    delay_line_.assign(static_cast<size_t>(biped_.params().delay_steps), hold);

    history_.reset();
    history_.push(make_observation(), std::vector<float>(kActDim, 0.0f));
    return bundle();
  }

  struct StepResult {
    ObsBundle obs;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
  };

  StepResult step(const std::array<double, 4>& action_in) {
    gf::ad::check(!done_, "step() after episode end");
    for (double a : action_in)
      gf::ad::check(std::isfinite(a), "non-finite action rejected");
    std::array<double, 4> a = action_in;
    for (auto& v : a) v = std::min(1.0, std::max(-1.0, v));

    StepInfo info;
    const std::array<double, 4> filtered = filter_.step(a);
    delay_line_.push_back(filtered);
    const std::array<double, 4> effective = delay_line_.front();
    delay_line_.pop_front();
    info.filtered_action = effective;

    const gf::ref::RefFrame ref_now = current_ref_frame();
    std::array<double, 4> q_des;
    for (int j = 0; j < 4; ++j) {
      q_des[j] = cfg_.residual_action
                     ? motors_.clamp(j, ref_now.motors[j] + effective[j] * motors_.half(j))
                     : motors_.denorm(j, effective[j]);
    }

    const Eigen::Vector3d wrench = perturb_.at(time()) + scenario_wrench_;
    const auto rep = biped_.inner_loop_step(state_, q_des, terrain_, wrench, cfg_.substeps,
                                            cfg_.policy_dt / cfg_.substeps);
    ++t_;
    skill_clock_ += cfg_.policy_dt;
    task_x_ += commanded_velocity() * cfg_.policy_dt;

    StepResult out;
    if (rep.blowup || !state_.finite()) {
      blowup_ = true;
      done_ = true;
      info.sim_blowup = true;
      info.termination = Termination::kFall;
      info.reward = 0.0;
      out.obs = bundle();
      out.reward = 0.0;
      out.done = true;
      out.info = info;
      return out;
    }

    // reward against the post-step reference
    const gf::ref::RefFrame ref_new = current_ref_frame();
    info.reward = compute_reward(ref_new, rep, a, info.reward_components);
    info.applied_tau = rep.tau_last;
    info.peak_fz = rep.peak_fz;
    info.in_contact = {rep.contact[0].in_contact, rep.contact[1].in_contact};
    info.standing_commanded = standing_;
    info.command = command_;
    info.task_target_x = task_target_x();

    info.termination = check_termination(ref_new);
    done_ = info.termination != Termination::kNone;

    history_.push(make_observation(), {static_cast<float>(a[0]), static_cast<float>(a[1]),
                                       static_cast<float>(a[2]), static_cast<float>(a[3])});
    prev_qd_ = state_.qd;
    prev_action_ = a;

    maybe_switch_command();

    out.obs = bundle();
    out.reward = info.reward;
    out.done = done_;
    out.info = info;
    return out;
  }

  // First matching rule in the fixed order fall -> foot_tol -> task_tol ->
  // timeout; the jump task tolerance only applies after the reference lands.
  Termination check_termination(const gf::ref::RefFrame& ref) const {
    const auto feet = biped_.foot_positions(state_.q);
    // fall_z < 0 disables the fall family (diagnostics and sweeps only)
    if (cfg_.fall_z >= 0.0) {
      const double ground = terrain_.height(state_.q[0]);
      if (state_.q[1] - ground < cfg_.fall_z) return Termination::kFall;
      for (const auto& knee : biped_.knee_positions(state_.q))
        if (knee[1] < terrain_.height(knee[0])) return Termination::kFall;
    }
    if (cfg_.e_e_enabled) {
      for (int f = 0; f < 2; ++f) {
        const double want = ref.foot_z[f] + delta_z_foot(f, feet);
        if (std::abs(feet[f][1] - want) > cfg_.e_e) return Termination::kFootTol;
      }
    }
    const bool task_applies = cfg_.skill != Skill::kJump || skill_clock_ >= gf::ref::kJumpSpan;
    if (task_applies && std::abs(state_.q[0] - task_target_x()) > cfg_.e_t)
      return Termination::kTaskTol;
    if (t_ >= cfg_.episode_len) return Termination::kTimeout;
    return Termination::kNone;
  }

  bool timed_out() const { return done_ && t_ >= cfg_.episode_len && !blowup_; }

  // reference frame for the active skill/command at the current skill clock
  gf::ref::RefFrame current_ref_frame() const {
    if (standing_) return ref_->frame(Skill::kStand, {0.0, cfg_.stand_height}, 0.0);
    return ref_->frame(cfg_.skill, command_, skill_clock_);
  }

  std::array<double, 2> command() const { return command_; }
  bool standing_commanded() const { return standing_; }

 private:
  double commanded_velocity() const {
    if (standing_) return 0.0;
    switch (cfg_.skill) {
      case Skill::kWalk:
      case Skill::kRun:
        return command_[0];
      case Skill::kJump:
        return skill_clock_ < gf::ref::kJumpSpan ? command_[0] / gf::ref::kJumpSpan : 0.0;
      case Skill::kStand:
        return 0.0;
    }
    return 0.0;
  }

  double task_target_x() const {
    if (cfg_.skill == Skill::kJump) return jump_origin_x_ + command_[0];
    return task_x_;
  }

  // delta_z: terrain height under the foot (walk/run) or the commanded
  // elevation once the jump reference has landed
  double delta_z_foot(int f, const std::array<gf::sim::Vec2, 2>& feet) const {
    if (cfg_.skill == Skill::kJump)
      return skill_clock_ >= 0.6 * gf::ref::kJumpSpan ? command_[1] : 0.0;
    return terrain_.height(feet[f][0]);
  }
  double delta_z_base() const {
    if (cfg_.skill == Skill::kJump)
      return skill_clock_ >= 0.6 * gf::ref::kJumpSpan ? command_[1] : 0.0;
    return terrain_.height(state_.q[0]);
  }

  std::array<double, 2> sample_command(gf::Rng& rng) {
    if (!cfg_.randomize_command) return cfg_.fixed_command;
    const auto& r = cfg_.ranges;
    switch (cfg_.skill) {
      case Skill::kWalk:
        return {rng.uniform(r.walk_speed_lo, r.walk_speed_hi),
                rng.uniform(r.walk_height_lo, r.walk_height_hi)};
      case Skill::kRun:
        return {rng.uniform(r.run_speed_lo, r.run_speed_hi), 0.0};
      case Skill::kJump:
        return {rng.uniform(r.jump_x_lo, r.jump_x_hi),
                rng.uniform(r.jump_elev_lo, r.jump_elev_hi)};
      case Skill::kStand:
        return {0.0, cfg_.stand_height};
    }
    return {0, 0};
  }

  void maybe_switch_command() {
    const double now = time();
    if (cfg_.stand_substage && !standing_ && now >= stand_at_) {
      standing_ = true;  // stand until the end of the episode
      task_x_ = state_.q[0];
      return;
    }
    if (standing_ && cfg_.stand_windows && now >= stand_until_) {
      standing_ = false;
      task_x_ = state_.q[0];
      command_ = sample_command(cmd_rng_);
      start_skill_segment();
      next_switch_ = now + cmd_rng_.uniform(cfg_.switch_lo, cfg_.switch_hi);
      return;
    }
    if (now < next_switch_ || standing_) return;
    next_switch_ = now + cmd_rng_.uniform(cfg_.switch_lo, cfg_.switch_hi);
    if (cfg_.stand_windows && cmd_rng_.uniform() < cfg_.stand_prob) {
      standing_ = true;
      stand_until_ = now + cmd_rng_.uniform(cfg_.stand_window_lo, cfg_.stand_window_hi);
      task_x_ = state_.q[0];
      return;
    }
    command_ = sample_command(cmd_rng_);
    start_skill_segment();
  }

  void start_skill_segment() {
    if (cfg_.skill != Skill::kJump) return;
    skill_clock_ = 0.0;  // a new jump starts
    jump_origin_x_ = state_.q[0];
    if (std::abs(command_[1]) > 1e-9) {
      terrain_ = gf::sim::Terrain{};
      terrain_.kind = gf::sim::Terrain::Kind::kStairs;
      terrain_.step_height = command_[1];
      terrain_.step_run = 1e6;
      terrain_.origin = state_.q[0] + std::max(0.15, command_[0] - 0.3);
    }
  }

  double compute_reward(const gf::ref::RefFrame& ref, const gf::sim::InnerLoopReport& rep,
                        const std::array<double, 4>& action,
                        std::array<double, kNumRewardComponents>& components) const {
    WeightVector w = cfg_.weights;
    if (standing_) {
      w[kMotorVel] += cfg_.stand_motor_vel_bump;
      w[kActionChange] += cfg_.stand_action_change_bump;
    }
    RewardFunction rf(w, cfg_.alphas);

    const auto feet = biped_.foot_positions(state_.q);
    std::array<double, kNumRewardComponents> err{};
    double e2 = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = state_.q[3 + j] - ref.motors[j];
      e2 += d * d;
    }
    err[kMotorPos] = std::sqrt(e2);
    err[kBaseHeight] = std::abs(state_.q[1] - (ref.base_z + delta_z_base()));
    e2 = 0.0;
    for (int f = 0; f < 2; ++f) {
      const double d = feet[f][1] - (ref.foot_z[f] + delta_z_foot(f, feet));
      e2 += d * d;
    }
    err[kFootHeight] = std::sqrt(e2);
    err[kBasePos] = std::abs(state_.q[0] - task_target_x());
    err[kBaseVel] = std::abs(state_.qd[0] - commanded_velocity());
    err[kOrientation] = 1.0 - std::cos(state_.q[2]);
    err[kAngRate] = std::abs(state_.qd[2]);
    err[kFootImpact] = std::hypot(rep.peak_fz[0], rep.peak_fz[1]);
    e2 = 0.0;
    for (double t : rep.tau_rms) e2 += t * t;
    err[kTorque] = std::sqrt(e2);
    e2 = 0.0;
    for (int j = 0; j < 4; ++j) e2 += state_.qd[3 + j] * state_.qd[3 + j];
    err[kMotorVel] = std::sqrt(e2);
    e2 = 0.0;
    for (int i = 0; i < 7; ++i) {
      const double acc = (state_.qd[i] - prev_qd_[i]) / cfg_.policy_dt;
      e2 += acc * acc;
    }
    err[kJointAccel] = std::sqrt(e2);
    e2 = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = action[j] - prev_action_[j];
      e2 += d * d;
    }
    err[kActionChange] = std::sqrt(e2);
    return rf.total(err, &components);
  }

  std::vector<float> make_observation() {
    const auto& p = biped_.params();
    std::vector<float> o(kObsDim);
    for (int j = 0; j < 4; ++j) {
      const double noisy = state_.q[3 + j] + p.motor_pos_bias[j] +
                           cfg_.noise_motor_pos * obs_rng_.normal();
      o[j] = static_cast<float>(motors_.norm(j, noisy));
    }
    for (int j = 0; j < 4; ++j) {
      const double noisy = state_.qd[3 + j] + p.motor_vel_bias[j] +
                           cfg_.noise_motor_vel * obs_rng_.normal();
      o[4 + j] = static_cast<float>(noisy / cfg_.scales.motor_vel);
    }
    o[8] = static_cast<float>((state_.q[2] + p.pitch_bias + cfg_.noise_pitch * obs_rng_.normal()) /
                              cfg_.scales.pitch);
    o[9] = static_cast<float>((state_.qd[0] + p.linvel_bias[0] +
                               cfg_.noise_linvel * obs_rng_.normal()) / cfg_.scales.linvel);
    o[10] = static_cast<float>((state_.qd[1] + p.linvel_bias[1] +
                                cfg_.noise_linvel * obs_rng_.normal()) / cfg_.scales.linvel);
    return o;
  }

  std::vector<float> command_block() const {
    const auto& r = cfg_.ranges;
    auto norm = [](double v, double lo, double hi) {
      return static_cast<float>((2.0 * v - lo - hi) / (hi - lo));
    };
    switch (cfg_.skill) {
      case Skill::kWalk: {
        const double v = standing_ ? 0.0 : command_[0];
        const double h = standing_ ? cfg_.stand_height : command_[1];
        return {norm(v, r.walk_speed_lo, r.walk_speed_hi),
                norm(h, r.walk_height_lo, r.walk_height_hi)};
      }
      case Skill::kRun:
        return {norm(standing_ ? r.run_speed_lo : command_[0], r.run_speed_lo, r.run_speed_hi)};
      case Skill::kJump:
        return {norm(command_[0], r.jump_x_lo, r.jump_x_hi),
                norm(command_[1], r.jump_elev_lo, r.jump_elev_hi)};
      case Skill::kStand:
        return {};
    }
    return {};
  }

  ObsBundle bundle() {
    ObsBundle b;
    b.command = command_block();
    const Skill s = standing_ ? Skill::kStand : cfg_.skill;
    const std::array<double, 2> c = standing_ ? std::array<double, 2>{0.0, cfg_.stand_height}
                                              : command_;
    const double clock = standing_ ? 0.0 : skill_clock_;
    std::vector<double> pv = ref_->preview(s, c, clock, cfg_.policy_dt);
    // a standing window inside run/jump still feeds the full preview width
    if (cfg_.preview_dim() == 13 && pv.size() == 12) pv.push_back(cfg_.stand_height);
    b.preview.resize(cfg_.preview_dim());
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 4; ++j)
        b.preview[k * 4 + j] =
            static_cast<float>(motors_.norm(j, motors_.clamp(j, pv[k * 4 + j])));
    if (cfg_.preview_dim() == 13)
      b.preview[12] = static_cast<float>((pv[12] - cfg_.scales.base_z_mid) / cfg_.scales.base_z_half);

    b.obs_now.assign(history_.obs_at(0), history_.obs_at(0) + kObsDim);
    b.short_pairs = history_.short_pairs();
    b.short_obs = history_.short_obs_only();
    b.long_cnn = history_.cnn_image(true);
    b.long_obs_cnn = history_.cnn_image(false);
    b.params_vec = params_vec_;

    const gf::ref::RefFrame rf = current_ref_frame();
    for (int j = 0; j < 4; ++j)
      b.ref_motors_norm.push_back(static_cast<float>(motors_.norm(j, motors_.clamp(j, rf.motors[j]))));

    // privileged critic block: command + preview + true state + params
    const auto feet = biped_.foot_positions(state_.q);
    b.privileged = b.command;
    b.privileged.insert(b.privileged.end(), b.preview.begin(), b.preview.end());
    for (int j = 0; j < 4; ++j)
      b.privileged.push_back(static_cast<float>(motors_.norm(j, state_.q[3 + j])));
    for (int j = 0; j < 4; ++j)
      b.privileged.push_back(static_cast<float>(state_.qd[3 + j] / cfg_.scales.motor_vel));
    b.privileged.push_back(static_cast<float>(state_.q[2] / cfg_.scales.pitch));
    b.privileged.push_back(static_cast<float>(state_.qd[0] / cfg_.scales.linvel));
    b.privileged.push_back(static_cast<float>(state_.qd[1] / cfg_.scales.linvel));
    b.privileged.push_back(
        static_cast<float>((state_.q[1] - cfg_.scales.base_z_mid) / cfg_.scales.base_z_half));
    b.privileged.push_back(static_cast<float>(state_.qd[2] / cfg_.scales.pitch_rate));
    // task position error: the actor never sees absolute x, the critic must
    // (task-tolerance terminations are unpredictable without it)
    b.privileged.push_back(static_cast<float>(
        std::clamp(state_.q[0] - task_target_x(), -2.0, 2.0)));
    for (int f = 0; f < 2; ++f)
      b.privileged.push_back(
          static_cast<float>((feet[f][1] - terrain_.height(feet[f][0])) / cfg_.scales.foot_clear));
    const auto contact = biped_.contact_forces(state_.q, state_.qd, terrain_);
    for (int f = 0; f < 2; ++f) b.privileged.push_back(contact[f].in_contact ? 1.0f : 0.0f);
    b.privileged.insert(b.privileged.end(), params_vec_.begin(), params_vec_.end());
    return b;
  }

  EnvConfig cfg_;
  const gf::ref::ReferenceMotion* ref_;
  gf::sim::DynamicsParams nominal_;
  gf::sim::PlanarBiped biped_;
  gf::sim::MotorRange motors_;
  gf::sim::Terrain terrain_;
  gf::sim::RobotState state_;
  IOHistory history_;
  ActionFilter<4> filter_;
  std::deque<std::array<double, 4>> delay_line_;
  gf::rnd::PerturbationProcess perturb_;
  gf::Rng obs_rng_;
  gf::Rng cmd_rng_;
  std::optional<gf::sim::DynamicsParams> dyn_override_;
  Eigen::Vector3d scenario_wrench_ = Eigen::Vector3d::Zero();

  std::vector<float> params_vec_;
  std::array<double, 2> command_{0, 0};
  double next_switch_ = std::numeric_limits<double>::infinity();
  double stand_at_ = std::numeric_limits<double>::infinity();
  double stand_until_ = std::numeric_limits<double>::infinity();
  bool standing_ = false;
  double skill_clock_ = 0.0;
  double task_x_ = 0.0;
  double jump_origin_x_ = 0.0;
  gf::sim::Vec7 prev_qd_ = gf::sim::Vec7::Zero();
  std::array<double, 4> prev_action_{};
  long episode_ = 0;
  int t_ = 0;
  bool done_ = false;
  bool blowup_ = false;
};

inline int privileged_dim(const EnvConfig& cfg) {
  return cfg.command_dim() + cfg.preview_dim() + 11 + 1 + 1 + 1 + 2 + 2 +
         gf::rnd::kParamsVectorDim;
}

}  // namespace gf::env
