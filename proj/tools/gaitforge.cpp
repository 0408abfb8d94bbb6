// Command-line entry points: train / eval / ablate / analyze / simcheck.
// Exit codes: 0 success, 2 config error, 3 runtime divergence, 4 contract
// violation.
#include <CLI11.hpp>

#include "gaitforge/analysis/latent.hpp"
#include "gaitforge/analysis/robustness.hpp"
#include "gaitforge/analysis/saliency.hpp"
#include "gaitforge/bench/benchmark.hpp"
#include "gaitforge/io/config.hpp"
#include "gaitforge/io/csv.hpp"
#include "gaitforge/io/svg.hpp"
#include "gaitforge/train/driver.hpp"

namespace {

using gf::io::RunConfig;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig resolve_config(const std::string& config_path,
                         const std::vector<std::string>& overrides, RunConfig defaults) {
  auto merged = [&](const RunConfig& base) {
    nlohmann::json j = gf::io::to_json(base);
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f.good()) throw ConfigError("config: cannot open " + config_path);
      nlohmann::json file_json;
      try {
        file_json = nlohmann::json::parse(f);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
      j.merge_patch(file_json);
    }
    for (const auto& ov : overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key.path=value, got " + ov);
      gf::io::apply_override(j, ov.substr(0, eq), ov.substr(eq + 1));
    }
    return j;
  };
  // the preset decides the ppo defaults, then file/flag overrides win
  nlohmann::json first = merged(defaults);
  if (first.value("preset", "desk") == std::string("paper")) defaults.ppo = gf::io::paper_ppo();
  RunConfig cfg;
  try {
    gf::io::from_json_strict(merged(defaults), cfg);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::unique_ptr<gf::nets::PolicyModel> load_policy(const std::string& ckpt) {
  const auto tensors = gf::ad::load_checkpoint(ckpt);
  if (!tensors.count("meta/arch"))
    throw std::runtime_error("checkpoint " + ckpt + " lacks the architecture record");
  const auto spec = gf::nets::ArchSpec::deserialize(tensors.at("meta/arch").data);
  auto policy = std::make_unique<gf::nets::PolicyModel>(spec, 1);
  policy->import_tensors(tensors, false);
  return policy;
}

gf::env::EnvConfig eval_env_for(gf::ref::Skill skill) {
  gf::env::EnvConfig cfg;
  cfg.skill = skill;
  cfg.e_e_enabled = false;
  cfg.e_t = 1e9;
  cfg.randomize_command = false;
  switch (skill) {
    case gf::ref::Skill::kWalk: cfg.fixed_command = {0.6, 0.72}; break;
    case gf::ref::Skill::kRun: cfg.fixed_command = {2.1, 0.0}; break;
    case gf::ref::Skill::kJump: cfg.fixed_command = {0.0, 0.0}; break;
    case gf::ref::Skill::kStand: cfg.fixed_command = {0.0, 0.72}; break;
  }
  return cfg;
}

gf::an::Scenario load_scenario(const std::string& path, gf::ref::Skill* skill) {
  gf::an::Scenario s;
  if (path.empty()) return s;
  std::ifstream f(path);
  if (!f.good()) throw ConfigError("scenario: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (j.contains("skill") && skill) *skill = gf::ref::skill_from_name(j.at("skill"));
  if (j.contains("duration")) s.duration = j.at("duration").get<double>();
  if (j.contains("delta")) s.delta = j.at("delta").get<std::string>();
  if (j.contains("events"))
    for (const auto& ev : j.at("events")) {
      gf::an::ScenarioEvent e;
      e.t = ev.at("t").get<double>();
      if (ev.contains("command")) {
        const auto c = ev.at("command");
        e.command = std::array<double, 2>{c.at(0).get<double>(),
                                          c.size() > 1 ? c.at(1).get<double>() : 0.0};
      }
      if (ev.contains("push")) {
        const auto p = ev.at("push");
        e.push = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                 p.size() > 2 ? p.at(2).get<double>() : 0.0);
      }
      if (ev.contains("stand")) e.stand = ev.at("stand").get<bool>();
      s.events.push_back(e);
    }
  return s;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_ckpt,
              const std::string& resume_stage, bool dry_run) {
  gf::io::write_run_manifest(cfg.out, cfg);
  auto plan = cfg.build_plan_with_overrides();
  if (dry_run) {
    std::cout << "plan for " << cfg.skill << " (" << cfg.preset << "):";
    for (const auto& s : plan.stages) std::cout << " " << s.id << "x" << s.iterations;
    std::cout << "\nsnapshot written to " << cfg.out << "/config.json\n";
    return 0;
  }
  gf::train::TrainerOptions opt;
  opt.ppo = cfg.ppo;
  opt.variant = gf::nets::variant_from_name(cfg.variant);
  opt.seed = cfg.seed;
  opt.out_dir = cfg.out;
  opt.quiet = false;
  gf::train::Trainer tr(plan, opt);
  if (!resume_ckpt.empty()) tr.resume_from(resume_ckpt, resume_stage);
  const std::string final_ckpt = tr.run();
  std::cout << "final checkpoint: " << final_ckpt << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& scenario_path, const std::string& out,
             double duration, uint64_t seed) {
  auto policy = load_policy(ckpt);
  gf::ref::Skill skill = gf::ref::Skill::kWalk;
  gf::an::Scenario scen = load_scenario(scenario_path, &skill);
  if (duration > 0) scen.duration = duration;
  gf::env::EnvConfig cfg = eval_env_for(skill);
  if (cfg.command_dim() != policy->spec().cmd_dim ||
      cfg.preview_dim() != policy->spec().preview_dim)
    throw std::runtime_error("architecture/observation mismatch between checkpoint and skill");
  cfg.residual_action = policy->spec().residual();
  gf::ref::ReferenceMotion ref;
  gf::env::LocomotionEnv env(cfg, &ref);
  gf::sim::DynamicsParams p;
  gf::an::apply_delta(scen.delta, p, cfg);
  env.set_dynamics_override(p);
  auto bundle = env.reset(seed, 0);

  std::filesystem::create_directories(out);
  // trajectory dump: (t, q[7], qdot[7], tau[4], Fz_L, Fz_R)
  std::vector<std::string> traj_header{"t"};
  for (int i = 0; i < 7; ++i) traj_header.push_back("q" + std::to_string(i));
  for (int i = 0; i < 7; ++i) traj_header.push_back("qd" + std::to_string(i));
  for (int i = 0; i < 4; ++i) traj_header.push_back("tau" + std::to_string(i));
  traj_header.emplace_back("Fz_L");
  traj_header.emplace_back("Fz_R");
  gf::io::CsvWriter traj(out + "/trajectory.csv", traj_header);
  std::vector<std::string> header{"t", "cmd0", "cmd1"};
  for (int i = 0; i < gf::env::kObsDim; ++i) header.push_back("o" + std::to_string(i));
  for (int i = 0; i < 4; ++i) header.push_back("a_raw" + std::to_string(i));
  for (int i = 0; i < 4; ++i) header.push_back("a_filt" + std::to_string(i));
  for (int i = 0; i < 4; ++i) header.push_back("tau" + std::to_string(i));
  header.push_back("r");
  for (int i = 0; i < gf::env::kNumRewardComponents; ++i)
    header.emplace_back(gf::env::reward_component_name(i));
  header.push_back("termination");
  gf::io::CsvWriter trace(out + "/trace.csv", header);

  std::sort(scen.events.begin(), scen.events.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
  size_t next_event = 0;
  Eigen::Vector3d push = Eigen::Vector3d::Zero();
  const int total = static_cast<int>(scen.duration / cfg.policy_dt);
  double speed_abs_err = 0.0, pitch_abs = 0.0;
  int steps = 0;
  std::string term = "none";
  for (int t = 0; t < total; ++t) {
    const double now = t * cfg.policy_dt;
    while (next_event < scen.events.size() && scen.events[next_event].t <= now) {
      const auto& ev = scen.events[next_event];
      if (ev.command) env.force_command(*ev.command);
      if (ev.push) push = *ev.push;
      if (ev.stand) env.force_standing(*ev.stand);
      ++next_event;
    }
    env.set_external_wrench(push);
    auto inputs = gf::rl::batch_from_bundles(*policy, {bundle});
    const auto mean = policy->rollout_tape().forward(inputs).at("mean");
    std::array<double, 4> a;
    for (int j = 0; j < 4; ++j) a[j] = std::clamp<double>(mean.data[j], -1.0, 1.0);
    auto res = env.step(a);
    const double vcmd = env.standing_commanded() ? 0.0 : res.info.command[0];
    speed_abs_err += std::abs(env.state().qd[0] - vcmd);
    pitch_abs += std::abs(env.state().q[2]);
    ++steps;
    std::vector<std::string> row{std::to_string(now), std::to_string(res.info.command[0]),
                                 std::to_string(res.info.command[1])};
    for (float o : res.obs.obs_now) row.push_back(std::to_string(o));
    for (double v : a) row.push_back(std::to_string(v));
    for (double v : res.info.filtered_action) row.push_back(std::to_string(v));
    for (double v : res.info.applied_tau) row.push_back(std::to_string(v));
    row.push_back(std::to_string(res.reward));
    for (double v : res.info.reward_components) row.push_back(std::to_string(v));
    row.emplace_back(gf::env::termination_name(res.info.termination));
    trace.row_mixed(row);
    std::vector<double> trow{now};
    for (int i = 0; i < 7; ++i) trow.push_back(env.state().q[i]);
    for (int i = 0; i < 7; ++i) trow.push_back(env.state().qd[i]);
    for (int i = 0; i < 4; ++i) trow.push_back(res.info.applied_tau[i]);
    trow.push_back(res.info.peak_fz[0]);
    trow.push_back(res.info.peak_fz[1]);
    traj.row(trow);
    bundle = std::move(res.obs);
    if (res.done) {
      term = gf::env::termination_name(res.info.termination);
      break;
    }
  }
  nlohmann::json summary;
  summary["steps"] = steps;
  summary["duration_s"] = steps * cfg.policy_dt;
  summary["speed_mae"] = steps ? speed_abs_err / steps : 0.0;
  summary["pitch_mae"] = steps ? pitch_abs / steps : 0.0;
  summary["termination"] = term;
  std::ofstream(out + "/summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& variants_csv, int seeds, int iterations,
               int arma_iterations) {
  gf::bench::BenchmarkConfig bc;
  bc.variants.clear();
  std::stringstream ss(variants_csv);
  std::string name;
  while (std::getline(ss, name, ',')) bc.variants.push_back(gf::nets::variant_from_name(name));
  bc.seeds = seeds;
  bc.iterations = iterations;
  bc.arma_iterations = arma_iterations;
  bc.ppo = cfg.ppo;
  // the shared benchmark env is the stage-3 environment of the skill
  auto plan = cfg.build_plan_with_overrides();
  const auto* s3 = plan.find("S3");
  if (!s3) throw ConfigError("plan has no stage S3 for the benchmark env");
  bc.env = s3->env;
  bc.out_dir = cfg.out;
  bc.seed_base = cfg.seed;
  gf::io::write_run_manifest(cfg.out, cfg);
  gf::bench::Benchmark bench(bc);
  const auto result = bench.run();
  std::cout << "variant, mean final normalized return\n";
  for (auto v : bc.variants)
    std::cout << gf::nets::variant_name(v) << ", " << result.mean_final_normalized(v) << "\n";
  return 0;
}

int cmd_analyze_latent(const std::string& ckpt, const std::string& scenario_path,
                       const std::string& out, uint64_t seed) {
  auto policy = load_policy(ckpt);
  gf::ref::Skill skill = gf::ref::Skill::kWalk;
  const gf::an::Scenario scen = load_scenario(scenario_path, &skill);
  gf::ref::ReferenceMotion ref;
  gf::env::EnvConfig cfg = eval_env_for(skill);
  cfg.residual_action = policy->spec().residual();
  const auto trace = gf::an::record_latent(*policy, cfg, &ref, scen, seed);
  std::filesystem::create_directories(out);
  std::vector<std::string> header{"t", "fz_l", "fz_r", "pushing", "standing"};
  for (int d = 0; d < trace.latent_dim; ++d) header.push_back("z" + std::to_string(d));
  gf::io::CsvWriter csv(out + "/latent.csv", header);
  for (long i = 0; i < trace.steps(); ++i) {
    std::vector<std::string> row{std::to_string(trace.t[i]), std::to_string(trace.fz_l[i]),
                                 std::to_string(trace.fz_r[i]),
                                 std::to_string(static_cast<int>(trace.pushing[i])),
                                 std::to_string(static_cast<int>(trace.standing[i]))};
    for (int d = 0; d < trace.latent_dim; ++d)
      row.push_back(std::to_string(trace.latent[i * trace.latent_dim + d]));
    csv.row_mixed(row);
  }
  std::vector<double> heat(trace.steps() * trace.latent_dim);
  for (size_t i = 0; i < heat.size(); ++i) heat[i] = trace.latent[i];
  gf::io::write_heatmap_svg(out + "/latent.svg", "latent embedding over time",
                            heat, trace.latent_dim, static_cast<int>(trace.steps()), 3);
  nlohmann::json j;
  j["fell"] = trace.fell;
  if (trace.steps() > trace.warmup + 2) {
    const auto corr = gf::an::correlate_contact(trace);
    j["top_left_dim"] = corr.top_left;
    j["top_left_r"] = corr.r_left[corr.top_left];
    j["top_right_dim"] = corr.top_right;
    j["top_right_r"] = corr.r_right[corr.top_right];
  } else {
    j["note"] = "trace shorter than the encoder warm-up; correlations unavailable";
  }
  std::ofstream(out + "/contact_correlation.json") << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_shift(const std::string& ckpt, const std::string& scenario_path,
                      const std::string& out, uint64_t seed) {
  auto policy = load_policy(ckpt);
  gf::ref::Skill skill = gf::ref::Skill::kWalk;
  gf::an::Scenario scen = load_scenario(scenario_path, &skill);
  gf::ref::ReferenceMotion ref;
  gf::env::EnvConfig cfg = eval_env_for(skill);
  cfg.residual_action = policy->spec().residual();
  const auto rows = gf::an::latent_shift(*policy, cfg, &ref, scen, gf::an::delta_menu(), seed);
  std::filesystem::create_directories(out);
  gf::io::CsvWriter csv(out + "/latent_shift.csv",
                        {"delta", "mean_latent_change", "speed_err", "motion_err", "fell"});
  for (const auto& r : rows) {
    csv.row_mixed({r.delta, std::to_string(r.mean_latent_change), std::to_string(r.speed_err),
                   std::to_string(r.motion_err), r.fell ? "1" : "0"});
    std::cout << r.delta << ": dz " << r.mean_latent_change << " E_t " << r.speed_err
              << " E_m " << r.motion_err << (r.fell ? " (fell)" : "") << "\n";
  }
  return 0;
}

int cmd_analyze_saliency(const std::string& ckpt, const std::string& scenario_path,
                         const std::string& out, uint64_t seed) {
  auto policy = load_policy(ckpt);
  gf::ref::Skill skill = gf::ref::Skill::kWalk;
  gf::an::Scenario scen = load_scenario(scenario_path, &skill);
  gf::ref::ReferenceMotion ref;
  gf::env::EnvConfig cfg = eval_env_for(skill);
  cfg.residual_action = policy->spec().residual();
  // gather bundles along the scenario
  gf::env::LocomotionEnv env(cfg, &ref);
  auto bundle = env.reset(seed, 0);
  std::vector<gf::env::ObsBundle> samples;
  const int total = static_cast<int>(scen.duration / cfg.policy_dt);
  for (int t = 0; t < total; ++t) {
    auto inputs = gf::rl::batch_from_bundles(*policy, {bundle});
    const auto mean = policy->rollout_tape().forward(inputs).at("mean");
    std::array<double, 4> a;
    for (int j = 0; j < 4; ++j) a[j] = std::clamp<double>(mean.data[j], -1.0, 1.0);
    if (t % 5 == 0) samples.push_back(bundle);
    auto res = env.step(a);
    bundle = std::move(res.obs);
    if (res.done) break;
  }
  const auto sal = gf::an::saliency(*policy, samples);
  std::filesystem::create_directories(out);
  gf::io::CsvWriter csv(out + "/saliency.csv", {"block", "dim", "mean_abs_gradient"});
  nlohmann::json j;
  for (const auto& [name, v] : sal.per_block) {
    for (size_t i = 0; i < v.size(); ++i)
      csv.row_mixed({name, std::to_string(i), std::to_string(v[i])});
    j[name] = sal.block_mean(name);
  }
  std::ofstream(out + "/saliency_blocks.json") << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_robust(const std::vector<std::string>& ckpts, const std::string& out,
                       double max_force, double force_step, int seeds) {
  std::vector<std::unique_ptr<gf::nets::PolicyModel>> policies;
  std::vector<gf::an::NamedPolicy> named;
  for (const auto& c : ckpts) {
    policies.push_back(load_policy(c));
    named.push_back({std::filesystem::path(c).stem().string(), policies.back().get()});
  }
  gf::ref::ReferenceMotion ref;
  const gf::env::EnvConfig cfg = eval_env_for(gf::ref::Skill::kWalk);
  std::vector<double> forces;
  for (double f = -max_force; f <= max_force + 1e-9; f += force_step)
    if (std::abs(f) > 1e-9) forces.push_back(f);
  const std::vector<double> com_offsets{-0.08, -0.05, 0.05, 0.08};
  const auto grid = gf::an::robustness_suite(named, cfg, &ref, forces, com_offsets, seeds);
  std::filesystem::create_directories(out);
  gf::io::CsvWriter csv(out + "/robustness.csv",
                        {"policy", "disturbance", "magnitude", "seed", "survived", "time_s"});
  for (const auto& c : grid)
    csv.row_mixed({c.policy_name, c.disturbance, std::to_string(c.magnitude),
                   std::to_string(c.seed), c.survived ? "1" : "0",
                   std::to_string(c.time_survived)});
  std::cout << "robustness grid written to " << out << "/robustness.csv\n";
  return 0;
}

int cmd_simcheck() {
  using namespace gf::sim;
  DynamicsParams p;
  PlanarBiped b(p);
  gf::Rng rng(20240);
  int failures = 0;
  auto expect = [&](bool ok, const char* what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (!ok) ++failures;
  };
  bool sym_ok = true, pd_ok = true;
  for (int i = 0; i < 2000; ++i) {
    Vec7 q;
    q << rng.uniform(-1, 1), rng.uniform(0.5, 1.5), rng.uniform(-.6, .6), rng.uniform(-1, 1.2),
        rng.uniform(-1.6, .3), rng.uniform(-1, 1.2), rng.uniform(-1.6, .3);
    const Mat7 m = b.mass_matrix(q);
    sym_ok = sym_ok && ((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    pd_ok = pd_ok && (Eigen::LLT<Mat7>(m).info() == Eigen::Success);
  }
  expect(sym_ok, "mass matrix symmetric");
  expect(pd_ok, "mass matrix positive definite (Cholesky)");
  // energy conservation, 1 s undamped swing
  DynamicsParams pf = p;
  pf.kp = {0, 0, 0, 0};
  pf.kd = {0, 0, 0, 0};
  pf.joint_damping = {0, 0, 0, 0};
  PlanarBiped bf(pf);
  RobotState s;
  s.q.setZero();
  s.q[1] = 12.0;
  s.q[3] = 0.8;
  s.qd[3] = 3.0;
  s.qd[6] = -2.0;
  const double e0 = bf.energy(s.q, s.qd);
  Terrain flat;
  double drift = 0.0;
  const std::array<double, 4> hold{s.q[3], s.q[4], s.q[5], s.q[6]};
  for (int i = 0; i < 33; ++i) {
    bf.inner_loop_step(s, hold, flat, Eigen::Vector3d::Zero());
    drift = std::max(drift, std::abs(bf.energy(s.q, s.qd) - e0));
  }
  expect(drift / std::abs(e0) < 0.005, "energy drift < 0.5% over 1 s");
  // contact complementarity
  bool comp_ok = true;
  for (int i = 0; i < 2000; ++i) {
    Vec7 q;
    q << 0, rng.uniform(0.3, 1.0), rng.uniform(-.6, .6), rng.uniform(-1, 1.2),
        rng.uniform(-1.6, .3), rng.uniform(-1, 1.2), rng.uniform(-1.6, .3);
    Vec7 qd;
    for (int k = 0; k < 7; ++k) qd[k] = rng.uniform(-2, 2);
    for (const auto& c : b.contact_forces(q, qd, flat))
      comp_ok = comp_ok && (c.fz >= 0) && (c.fz == 0 || c.penetration > 0);
  }
  expect(comp_ok, "soft contact complementarity");
  std::cout << (failures ? "simcheck FAILED\n" : "simcheck passed\n");
  return failures ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar biped locomotion RL framework"};
  app.require_subcommand(1);

  RunConfig defaults;
  std::string config_path, resume_ckpt, resume_stage = "S1";
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--set", overrides, "dotted-path overrides key=value")->take_all();
    cmd->add_option("--skill", defaults.skill, "walk|run|jump|stand");
    cmd->add_option("--preset", defaults.preset, "desk|paper");
    cmd->add_option("--variant", defaults.variant, "policy architecture variant");
    cmd->add_option("--seed", defaults.seed, "master seed");
    cmd->add_option("--out", defaults.out, "output run directory");
    cmd->add_option("--workers", defaults.workers, "worker threads (0: GF_WORKERS)");
  };

  bool dry_run = false;
  auto* train = app.add_subcommand("train", "run the multi-stage curriculum");
  add_common(train);
  train->add_option("--resume", resume_ckpt, "stage-boundary checkpoint to resume from");
  train->add_option("--resume-stage", resume_stage, "stage the checkpoint completed");
  train->add_flag("--dry-run", dry_run, "write the config snapshot and plan, then exit");

  std::string eval_ckpt, scenario_path, eval_out = "eval_out";
  double eval_duration = 0.0;
  uint64_t eval_seed = 1;
  auto* eval = app.add_subcommand("eval", "deterministic mean-policy evaluation");
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint")->required();
  eval->add_option("--scenario", scenario_path, "scenario JSON");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--duration", eval_duration, "override duration (s)");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  std::string variants = "dual,long-only,short-only,state-only,residual,expert";
  int seeds = 3, iterations = 300, arma_iterations = 120;
  auto* ablate = app.add_subcommand("ablate", "architecture learning benchmark");
  add_common(ablate);
  ablate->add_option("--variants", variants, "comma-separated variant list");
  ablate->add_option("--seeds", seeds, "seeds per variant");
  ablate->add_option("--iterations", iterations, "training iterations per cell");
  ablate->add_option("--arma-iterations", arma_iterations, "fine-tune budget for a-rma");

  auto* analyze = app.add_subcommand("analyze", "post-hoc studies");
  analyze->require_subcommand(1);
  std::string an_ckpt, an_out = "analysis_out";
  uint64_t an_seed = 1;
  auto* latent = analyze->add_subcommand("latent", "record the latent embedding");
  latent->add_option("--checkpoint", an_ckpt)->required();
  latent->add_option("--scenario", scenario_path);
  latent->add_option("--out", an_out);
  latent->add_option("--seed", an_seed);
  auto* shift = analyze->add_subcommand("shift", "latent change under dynamics deltas");
  shift->add_option("--checkpoint", an_ckpt)->required();
  shift->add_option("--scenario", scenario_path);
  shift->add_option("--out", an_out);
  shift->add_option("--seed", an_seed);
  auto* sal = analyze->add_subcommand("saliency", "input saliency of the policy mean");
  sal->add_option("--checkpoint", an_ckpt)->required();
  sal->add_option("--scenario", scenario_path);
  sal->add_option("--out", an_out);
  sal->add_option("--seed", an_seed);
  std::vector<std::string> robust_ckpts;
  double max_force = 40.0, force_step = 5.0;
  int robust_seeds = 3;
  auto* robust = analyze->add_subcommand("robust", "survival grid under disturbances");
  robust->add_option("--checkpoints", robust_ckpts, "policy checkpoints")->required();
  robust->add_option("--out", an_out);
  robust->add_option("--max-force", max_force);
  robust->add_option("--force-step", force_step);
  robust->add_option("--seeds", robust_seeds);

  app.add_subcommand("simcheck", "run the simulator validation battery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("train") || app.got_subcommand("ablate")) {
      RunConfig cfg = resolve_config(config_path, overrides, defaults);
      if (cfg.workers > 0) setenv("GF_WORKERS", std::to_string(cfg.workers).c_str(), 1);
      if (app.got_subcommand("train")) return cmd_train(cfg, resume_ckpt, resume_stage, dry_run);
      return cmd_ablate(cfg, variants, seeds, iterations, arma_iterations);
    }
    if (app.got_subcommand("eval"))
      return cmd_eval(eval_ckpt, scenario_path, eval_out, eval_duration, eval_seed);
    if (app.got_subcommand("analyze")) {
      if (analyze->got_subcommand("latent"))
        return cmd_analyze_latent(an_ckpt, scenario_path, an_out, an_seed);
      if (analyze->got_subcommand("shift"))
        return cmd_analyze_shift(an_ckpt, scenario_path, an_out, an_seed);
      if (analyze->got_subcommand("saliency"))
        return cmd_analyze_saliency(an_ckpt, scenario_path, an_out, an_seed);
      if (analyze->got_subcommand("robust"))
        return cmd_analyze_robust(robust_ckpts, an_out, max_force, force_step, robust_seeds);
    }
    if (app.got_subcommand("simcheck")) return cmd_simcheck();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    if (msg.find("diverged") != std::string::npos) return 3;
    return 4;
  }
  return 0;
}
