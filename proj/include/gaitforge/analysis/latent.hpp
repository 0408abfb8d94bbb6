#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaitforge/rl/rollout.hpp"

namespace gf::an {

using gf::ad::Array;

// Scripted evaluation scenario: ordered (t, command | wrench | stand)
// events, plus an optional named dynamics delta applied at reset.
struct ScenarioEvent {
  double t = 0.0;
  std::optional<std::array<double, 2>> command;
  std::optional<Eigen::Vector3d> push;  // pelvis wrench (fx, fz, pitch torque)
  std::optional<bool> stand;
};

struct Scenario {
  double duration = 15.0;
  std::vector<ScenarioEvent> events;
  std::string delta;  // dynamics-shift menu entry, empty = nominal
};

// The 8.2-style single-parameter shift menu.
inline std::vector<std::string> delta_menu() {
  return {"com_plus8cm", "mass_plus30", "damping_x8", "pd_plus40",
          "friction_05", "delay_0025",  "noise_x2"};
}

inline void apply_delta(const std::string& name, gf::sim::DynamicsParams& p,
                        gf::env::EnvConfig& cfg) {
  if (name.empty() || name == "nominal") return;
  if (name == "com_plus8cm") {
    for (auto& c : p.com_along) c += 0.08;
  } else if (name == "mass_plus30") {
    for (auto& m : p.mass) m *= 1.3;
  } else if (name == "damping_x8") {
    for (auto& d : p.joint_damping) d *= 8.0;
  } else if (name == "pd_plus40") {
    for (auto& k : p.kp) k *= 1.4;
    for (auto& k : p.kd) k *= 1.4;
  } else if (name == "friction_05") {
    p.friction = 0.5;
  } else if (name == "delay_0025") {
    p.delay_steps = 1;  // 0.025 s rounded to one policy step
  } else if (name == "noise_x2") {
    // twice the training upper bounds: biases at 2x the Table range edge,
    // white noise doubled
    for (auto& b : p.motor_pos_bias) b = 0.004;
    for (auto& b : p.motor_vel_bias) b = 0.02;
    p.pitch_bias = 0.004;
    p.linvel_bias = {0.08, 0.08};
    cfg.noise_motor_pos *= 2.0;
    cfg.noise_motor_vel *= 2.0;
    cfg.noise_pitch *= 2.0;
    cfg.noise_linvel *= 2.0;
  } else {
    throw std::runtime_error("unknown dynamics delta '" + name + "'");
  }
}

// Time series of encoder outputs aligned with contacts, commands, and
// perturbation windows; the first long_history steps are warm-up.
struct LatentTrace {
  int latent_dim = 0;
  int warmup = 0;
  std::vector<double> t;
  std::vector<float> latent;   // T x D
  std::vector<double> fz_l, fz_r;
  std::vector<double> speed_err;   // |vx - commanded|
  std::vector<double> motion_err;  // ||q_m - q_m^ref||
  std::vector<uint8_t> pushing;
  std::vector<uint8_t> standing;
  bool fell = false;

  long steps() const { return static_cast<long>(t.size()); }
};

// Deterministic mean-policy rollout of a scenario, recording the latent
// embedding each step. Encoder-free variants are rejected.
inline LatentTrace record_latent(gf::nets::PolicyModel& policy, gf::env::EnvConfig cfg,
                                 const gf::ref::ReferenceMotion* ref, const Scenario& scenario,
                                 uint64_t seed) {
  gf::ad::check(policy.spec().has_encoder(),
                "latent recording rejected: checkpoint lacks a long-history encoder");
  cfg.e_e_enabled = false;
  cfg.e_t = 1e9;
  cfg.randomize_command = false;
  cfg.rnd = gf::rnd::RandomizationConfig{};  // nominal unless the delta says otherwise
  gf::sim::DynamicsParams p;  // nominal
  apply_delta(scenario.delta, p, cfg);
  gf::env::LocomotionEnv env(cfg, ref);
  env.set_dynamics_override(p);
  auto bundle = env.reset(seed, 0);

  LatentTrace trace;
  trace.latent_dim = policy.spec().latent_dim();
  trace.warmup = cfg.long_history;
  const int total = static_cast<int>(scenario.duration / cfg.policy_dt);
  Eigen::Vector3d push = Eigen::Vector3d::Zero();
  size_t next_event = 0;
  std::vector<ScenarioEvent> events = scenario.events;
  std::sort(events.begin(), events.end(),
            [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; });
  bool standing = false;
  for (int t = 0; t < total; ++t) {
    const double now = t * cfg.policy_dt;
    while (next_event < events.size() && events[next_event].t <= now) {
      const auto& ev = events[next_event];
      if (ev.command) env.force_command(*ev.command);
      if (ev.push) push = *ev.push;
      if (ev.stand) {
        standing = *ev.stand;
        env.force_standing(standing);
      }
      ++next_event;
    }
    env.set_external_wrench(push);
    auto inputs = gf::rl::batch_from_bundles(policy, {bundle});
    auto out = policy.rollout_tape().forward(inputs);
    const auto& mean = out.at("mean");
    std::array<double, 4> a;
    for (int j = 0; j < 4; ++j) a[j] = std::clamp<double>(mean.data[j], -1.0, 1.0);
    const auto ref_frame = env.current_ref_frame();
    auto res = env.step(a);
    trace.t.push_back(now);
    const auto& latent = out.at("latent");
    trace.latent.insert(trace.latent.end(), latent.data.begin(), latent.data.end());
    trace.fz_l.push_back(res.info.peak_fz[0]);
    trace.fz_r.push_back(res.info.peak_fz[1]);
    double me = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = env.state().q[3 + j] - ref_frame.motors[j];
      me += d * d;
    }
    trace.motion_err.push_back(std::sqrt(me));
    const double vcmd = standing ? 0.0 : res.info.command[0];
    trace.speed_err.push_back(std::abs(env.state().qd[0] - vcmd));
    trace.pushing.push_back(push.norm() > 0 ? 1 : 0);
    trace.standing.push_back(standing ? 1 : 0);
    bundle = std::move(res.obs);
    if (res.done) {
      trace.fell = true;
      break;
    }
  }
  return trace;
}

// Pearson correlation; zero-variance series report r = 0 with the flag set.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y,
                      bool* degenerate = nullptr) {
  gf::ad::check(x.size() == y.size() && !x.empty(), "pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return sxy / std::sqrt(sxx * syy);
}

struct ContactCorrelation {
  std::vector<double> r_left, r_right;  // per latent dim
  int top_left = -1, top_right = -1;
  double max_abs_left = 0.0, max_abs_right = 0.0;
};

inline ContactCorrelation correlate_contact(const LatentTrace& trace) {
  ContactCorrelation out;
  const long t0 = std::min<long>(trace.warmup, trace.steps());
  const long n = trace.steps() - t0;
  gf::ad::check(n > 2, "correlate_contact: trace too short after warm-up");
  std::vector<double> fzl(trace.fz_l.begin() + t0, trace.fz_l.end());
  std::vector<double> fzr(trace.fz_r.begin() + t0, trace.fz_r.end());
  out.r_left.resize(trace.latent_dim);
  out.r_right.resize(trace.latent_dim);
  std::vector<double> dim(n);
  for (int d = 0; d < trace.latent_dim; ++d) {
    for (long i = 0; i < n; ++i)
      dim[i] = trace.latent[(t0 + i) * trace.latent_dim + d];
    out.r_left[d] = pearson(dim, fzl);
    out.r_right[d] = pearson(dim, fzr);
    if (std::abs(out.r_left[d]) > out.max_abs_left) {
      out.max_abs_left = std::abs(out.r_left[d]);
      out.top_left = d;
    }
    if (std::abs(out.r_right[d]) > out.max_abs_right) {
      out.max_abs_right = std::abs(out.r_right[d]);
      out.top_right = d;
    }
  }
  return out;
}

// autocorrelation of the latent trace at a given lag (averaged over dims)
inline double latent_autocorrelation(const LatentTrace& trace, int lag) {
  const long t0 = trace.warmup;
  const long n = trace.steps() - t0 - lag;
  gf::ad::check(n > 2, "autocorrelation: trace too short");
  double acc = 0.0;
  int used = 0;
  std::vector<double> a(n), b(n);
  for (int d = 0; d < trace.latent_dim; ++d) {
    for (long i = 0; i < n; ++i) {
      a[i] = trace.latent[(t0 + i) * trace.latent_dim + d];
      b[i] = trace.latent[(t0 + i + lag) * trace.latent_dim + d];
    }
    bool degenerate = false;
    const double r = pearson(a, b, &degenerate);
    if (!degenerate) {
      acc += r;
      ++used;
    }
  }
  return used ? acc / used : 0.0;
}

struct ShiftResult {
  std::string delta;
  double mean_latent_change = 0.0;
  double speed_err = 0.0;   // E_t analog
  double motion_err = 0.0;  // E_m analog
  bool fell = false;
};

// Runs the scenario under the nominal model and under each delta; reports
// the mean |latent change| over the aligned post-warmup window plus control
// metrics.
inline std::vector<ShiftResult> latent_shift(gf::nets::PolicyModel& policy,
                                             const gf::env::EnvConfig& cfg,
                                             const gf::ref::ReferenceMotion* ref,
                                             const Scenario& base,
                                             const std::vector<std::string>& deltas,
                                             uint64_t seed) {
  Scenario nominal = base;
  nominal.delta.clear();
  const LatentTrace t0 = record_latent(policy, cfg, ref, nominal, seed);
  auto metrics = [](const LatentTrace& tr) {
    double se = 0, me = 0;
    long n = 0;
    for (long i = tr.warmup; i < tr.steps(); ++i) {
      se += tr.speed_err[i];
      me += tr.motion_err[i];
      ++n;
    }
    return std::pair<double, double>{n ? se / n : 1e9, n ? me / n : 1e9};
  };
  const auto [se0, me0] = metrics(t0);
  std::vector<ShiftResult> out;
  ShiftResult base_row;
  base_row.delta = "nominal";
  base_row.speed_err = se0;
  base_row.motion_err = me0;
  base_row.fell = t0.fell;
  out.push_back(base_row);
  for (const auto& name : deltas) {
    Scenario s = base;
    s.delta = name;
    const LatentTrace t1 = record_latent(policy, cfg, ref, s, seed);
    ShiftResult r;
    r.delta = name;
    r.fell = t1.fell;
    const long n = std::min(t0.steps(), t1.steps()) - t0.warmup;
    double acc = 0.0;
    for (long i = 0; i < n; ++i)
      for (int d = 0; d < t0.latent_dim; ++d)
        acc += std::abs(t1.latent[(t0.warmup + i) * t0.latent_dim + d] -
                        t0.latent[(t0.warmup + i) * t0.latent_dim + d]);
    r.mean_latent_change = n > 0 ? acc / (static_cast<double>(n) * t0.latent_dim) : 1e9;
    std::tie(r.speed_err, r.motion_err) = metrics(t1);
    out.push_back(r);
  }
  return out;
}

}  // namespace gf::an
