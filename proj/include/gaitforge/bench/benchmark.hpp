#pragma once

#include <atomic>
#include <optional>
#include <sstream>
#include <thread>

#include "gaitforge/bench/distill.hpp"
#include "gaitforge/io/csv.hpp"
#include "gaitforge/train/driver.hpp"

namespace gf::bench {

using gf::nets::Variant;
using gf::train::IterationRow;

// Shared-config signature: all benchmark cells must train under the very
// same env, reward, and PPO settings.
inline uint64_t shared_config_hash(const gf::env::EnvConfig& e, const gf::rl::PpoConfig& p) {
  std::ostringstream os;
  os << static_cast<int>(e.skill) << "|" << e.episode_len << "|" << e.long_history << "|"
     << e.randomize_command << "|" << e.e_e << e.e_e_enabled << e.e_t << e.fall_z << "|";
  for (double w : e.weights) os << w << ",";
  for (int i = 0; i < gf::env::kNumRewardComponents; ++i) os << e.alphas.of(i) << ",";
  os << "|" << e.rnd.dynamics << e.rnd.perturbation << e.rnd.terrain;
  os << "|" << p.clip << "," << p.step_size << "," << p.iteration_batch << "," << p.minibatch
     << "," << p.epochs << "," << p.gamma << "," << p.lambda << "," << p.n_envs;
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct BenchmarkConfig {
  std::vector<Variant> variants{Variant::kDual,      Variant::kResidual, Variant::kStateOnly,
                                Variant::kLongOnly,  Variant::kShortOnly, Variant::kExpert};
  int seeds = 3;
  int iterations = 300;
  int arma_iterations = 120;
  int distill_samples = 6000;
  int distill_epochs = 30;
  int distill_batch = 128;
  double distill_lr = 1e-3;
  gf::rl::PpoConfig ppo;
  gf::env::EnvConfig env;  // the stage-3 environment every variant shares
  std::string out_dir;
  uint64_t seed_base = 1000;
  int cell_workers = 0;  // 0: GF_WORKERS

  bool wants(Variant v) const {
    for (Variant w : variants)
      if (w == v) return true;
    return false;
  }
};

struct CellResult {
  Variant variant;
  int seed = 0;
  std::vector<IterationRow> curve;
  double final_return = 0.0;  // trailing-window mean
  long param_count = 0;
  uint64_t config_hash = 0;
  double distill_mse = -1.0;          // rma cells
  double distill_baseline_mse = -1.0; // rma cells
  bool missing = false;               // cell aborted; results are partial
  std::string error;
};

struct BenchmarkResult {
  std::vector<CellResult> cells;
  double normalizer = 0.0;  // per-skill max observed return
  uint64_t config_hash = 0;
  bool partial = false;  // some cells aborted

  double mean_final_normalized(Variant v) const {
    double acc = 0.0;
    int n = 0;
    for (const auto& c : cells)
      if (c.variant == v && !c.missing) {
        acc += c.final_return / normalizer;
        ++n;
      }
    return n ? acc / n : 0.0;
  }

  const CellResult* find(Variant v, int seed) const {
    for (const auto& c : cells)
      if (c.variant == v && c.seed == seed) return &c;
    return nullptr;
  }
};

namespace detail_bench {

inline double trailing_return(const std::vector<IterationRow>& curve, int window = 10) {
  if (curve.empty()) return 0.0;
  double acc = 0.0;
  int n = 0;
  for (long i = static_cast<long>(curve.size()) - 1; i >= 0 && n < window; --i, ++n)
    acc += curve[i].mean_return;
  return acc / std::max(1, n);
}

inline long count_params(gf::nets::PolicyModel& m) {
  long n = 0;
  for (const auto& name : m.train_tape().param_names())
    n += m.train_tape().param_value(name).size();
  return n;
}

}  // namespace detail_bench

// Mean stochastic-policy return of a checkpointed model over a few episodes
// (used for the distillation-only RMA cells, which are not RL-trained).
inline double evaluate_return(gf::nets::PolicyModel& policy, const gf::env::EnvConfig& env_cfg,
                              const gf::ref::ReferenceMotion* ref, uint64_t seed,
                              int episodes = 8) {
  gf::rl::Collector col(env_cfg, ref, 4, gf::Rng::derive(seed, 0xEE37));
  gf::nets::GaussianHead head = policy.head();
  std::vector<gf::Rng> rng(4);
  for (int e = 0; e < 4; ++e) rng[e] = gf::Rng(gf::Rng::derive(seed, 0xEE38, e));
  Array<float> mean;
  int done_count = 0;
  std::vector<double> returns;
  std::vector<double> acc(4, 0.0);
  while (done_count < episodes) {
    col.forward_policy(policy, mean);
    for (int e = 0; e < 4; ++e) {
      auto& env = col.env(e);
      std::array<double, 4> a;
      for (int j = 0; j < 4; ++j) a[j] = head.sample_dim(mean.data[e * 4 + j], rng[e]);
      auto res = env.step(a);
      acc[e] += res.reward;
      if (res.done) {
        returns.push_back(acc[e]);
        acc[e] = 0.0;
        ++done_count;
        col.set_bundle(e, env.reset(seed, e));
      } else {
        col.set_bundle(e, std::move(res.obs));
      }
    }
  }
  double s = 0.0;
  for (double r : returns) s += r;
  return s / returns.size();
}

// Fig.-style learning benchmark: every (variant, seed) cell trains from
// scratch in the shared stage-3 env; RMA cells distill from the matching
// expert cell; A-RMA cells fine-tune the RMA student with the encoder
// frozen. Cells fan out as independent jobs.
class Benchmark {
 public:
  explicit Benchmark(const BenchmarkConfig& cfg) : cfg_(cfg), ref_() {
    gf::ad::check(!(cfg.wants(Variant::kRma) || cfg.wants(Variant::kArma)) ||
                      cfg.wants(Variant::kExpert),
                  "rma/arma cells need the expert variant in the run");
  }

  BenchmarkResult run() {
    BenchmarkResult result;
    result.config_hash = shared_config_hash(cfg_.env, cfg_.ppo);
    if (!cfg_.out_dir.empty()) std::filesystem::create_directories(cfg_.out_dir);

    // phase 1: RL-trained variants
    std::vector<std::pair<Variant, int>> cells;
    for (Variant v : cfg_.variants)
      if (v != Variant::kRma && v != Variant::kArma)
        for (int s = 0; s < cfg_.seeds; ++s) cells.emplace_back(v, s);
    std::vector<CellResult> phase1(cells.size());
    run_jobs(cells.size(), [&](size_t i) {
      try {
        phase1[i] = train_cell(cells[i].first, cells[i].second);
      } catch (const std::exception& e) {
        phase1[i].variant = cells[i].first;
        phase1[i].seed = cells[i].second;
        phase1[i].missing = true;
        phase1[i].error = e.what();
      }
    });
    for (auto& c : phase1) result.cells.push_back(std::move(c));

    // phase 2: distillation cells (need the expert checkpoints)
    if (cfg_.wants(Variant::kRma) || cfg_.wants(Variant::kArma)) {
      std::vector<CellResult> phase2(cfg_.seeds * 2);
      run_jobs(cfg_.seeds, [&](size_t s) {
        try {
          auto [rma, arma] = distill_cells(static_cast<int>(s));
          phase2[2 * s] = std::move(rma);
          phase2[2 * s + 1] = std::move(arma);
        } catch (const std::exception& e) {
          phase2[2 * s].variant = Variant::kRma;
          phase2[2 * s + 1].variant = Variant::kArma;
          phase2[2 * s].seed = phase2[2 * s + 1].seed = static_cast<int>(s);
          phase2[2 * s].missing = phase2[2 * s + 1].missing = true;
          phase2[2 * s].error = phase2[2 * s + 1].error = e.what();
        }
      });
      for (auto& c : phase2) {
        if ((c.variant == Variant::kRma && cfg_.wants(Variant::kRma)) ||
            (c.variant == Variant::kArma && cfg_.wants(Variant::kArma)))
          result.cells.push_back(std::move(c));
      }
    }

    for (const auto& c : result.cells) {
      result.partial = result.partial || c.missing;
      for (const auto& row : c.curve) result.normalizer = std::max(result.normalizer, row.mean_return);
      result.normalizer = std::max(result.normalizer, c.final_return);
    }
    if (result.normalizer <= 0.0) result.normalizer = 1.0;
    if (!cfg_.out_dir.empty()) write_summary(result);
    return result;
  }

 private:
  uint64_t cell_seed(Variant v, int seed) const {
    return gf::Rng::derive(cfg_.seed_base, static_cast<uint64_t>(v) + 17, seed);
  }

  std::string cell_ckpt(Variant v, int seed) const {
    return cfg_.out_dir + "/cell_" + gf::nets::variant_name(v) + "_s" + std::to_string(seed) +
           ".gfckpt";
  }

  CellResult train_cell(Variant v, int seed) {
    gf::train::SkillPlan plan;
    plan.skill = cfg_.env.skill;
    gf::train::StageConfig stage;
    stage.id = "bench";
    stage.env = cfg_.env;
    stage.iterations = cfg_.iterations;
    plan.stages.push_back(stage);
    gf::train::TrainerOptions opt;
    opt.ppo = cfg_.ppo;
    opt.variant = v;
    opt.seed = cell_seed(v, seed);
    opt.out_dir = "";  // metrics aggregated here, not per cell
    gf::train::Trainer tr(plan, opt);
    tr.run_stage(plan.stages[0], 0);
    CellResult c;
    c.variant = v;
    c.seed = seed;
    c.curve = tr.history();
    c.final_return = detail_bench::trailing_return(c.curve);
    c.param_count = detail_bench::count_params(tr.policy());
    c.config_hash = shared_config_hash(cfg_.env, cfg_.ppo);
    if (!cfg_.out_dir.empty()) {
      std::map<std::string, Array<float>> tensors;
      tr.policy().export_tensors(tensors);
      tr.critic().export_tensors(tensors);
      gf::ad::save_checkpoint(cell_ckpt(v, seed), tensors);
    }
    return c;
  }

  std::pair<CellResult, CellResult> distill_cells(int seed) {
    // teacher
    const auto teacher_tensors = gf::ad::load_checkpoint(cell_ckpt(Variant::kExpert, seed));
    gf::nets::ArchSpec tspec =
        gf::nets::ArchSpec::deserialize(teacher_tensors.at("meta/arch").data);
    gf::nets::PolicyModel teacher(tspec, 1);
    teacher.import_tensors(teacher_tensors, false);

    // student distillation
    gf::nets::ArchSpec sspec = tspec;
    sspec.variant = Variant::kRma;
    gf::nets::PolicyModel student(sspec, cell_seed(Variant::kRma, seed));
    const DistillDataset ds = harvest_dataset(teacher, cfg_.env, &ref_, cfg_.distill_samples,
                                              cell_seed(Variant::kRma, seed));
    const DistillResult dr = distill_rma(teacher, student, ds, cfg_.distill_epochs,
                                         cfg_.distill_batch, cfg_.distill_lr,
                                         cell_seed(Variant::kRma, seed));
    CellResult rma;
    rma.variant = Variant::kRma;
    rma.seed = seed;
    rma.distill_mse = dr.final_mse;
    rma.distill_baseline_mse = dr.baseline_mse;
    rma.param_count = detail_bench::count_params(student);
    rma.final_return = evaluate_return(student, cfg_.env, &ref_, cell_seed(Variant::kRma, seed));
    rma.config_hash = shared_config_hash(cfg_.env, cfg_.ppo);
    std::map<std::string, Array<float>> stensors;
    student.export_tensors(stensors);
    // carry the teacher's critic so fine-tuning resumes from trained values
    for (const auto& [name, arr] : teacher_tensors)
      if (name.rfind("vf/", 0) == 0) stensors[name] = arr;
    if (!cfg_.out_dir.empty()) gf::ad::save_checkpoint(cell_ckpt(Variant::kRma, seed), stensors);

    // A-RMA: RL on the base MLP with the encoder frozen
    gf::train::SkillPlan plan;
    plan.skill = cfg_.env.skill;
    gf::train::StageConfig stage;
    stage.id = "arma";
    stage.env = cfg_.env;
    stage.iterations = cfg_.arma_iterations;
    plan.stages.push_back(stage);
    gf::train::TrainerOptions opt;
    opt.ppo = cfg_.ppo;
    opt.variant = Variant::kArma;
    opt.seed = cell_seed(Variant::kArma, seed);
    gf::train::Trainer tr(plan, opt);
    tr.policy().import_tensors(stensors, false);
    for (const auto& [name, arr] : stensors) (void)name;
    // critic from the teacher run
    std::map<std::string, Array<float>> vf_only;
    for (const auto& [name, arr] : teacher_tensors)
      if (name.rfind("vf/", 0) == 0 || name.rfind("opt/vf", 0) == 0) vf_only[name] = arr;
    if (!vf_only.empty()) tr.critic().import_tensors(vf_only, true);
    const uint64_t enc_before = params_hash(tr.policy(), "pi/enc/");
    tr.run_stage(plan.stages[0], 0);
    gf::ad::check(params_hash(tr.policy(), "pi/enc/") == enc_before,
                  "a-rma contract violation: encoder drifted during fine-tuning");
    CellResult arma;
    arma.variant = Variant::kArma;
    arma.seed = seed;
    arma.curve = tr.history();
    arma.final_return = detail_bench::trailing_return(arma.curve);
    arma.param_count = detail_bench::count_params(tr.policy());
    arma.config_hash = shared_config_hash(cfg_.env, cfg_.ppo);
    if (!cfg_.out_dir.empty()) {
      std::map<std::string, Array<float>> tensors;
      tr.policy().export_tensors(tensors);
      tr.critic().export_tensors(tensors);
      gf::ad::save_checkpoint(cell_ckpt(Variant::kArma, seed), tensors);
    }
    return {std::move(rma), std::move(arma)};
  }

  void run_jobs(size_t n, const std::function<void(size_t)>& job) {
    int workers = cfg_.cell_workers > 0 ? cfg_.cell_workers : gf::env_worker_count();
    workers = std::min<int>(workers, static_cast<int>(n));
    std::atomic<size_t> next{0};
    auto drain = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        job(i);
      }
    };
    std::vector<std::thread> threads;
    for (int w = 0; w < workers - 1; ++w) threads.emplace_back(drain);
    drain();
    for (auto& t : threads) t.join();
  }

  void write_summary(const BenchmarkResult& r) {
    std::filesystem::create_directories(cfg_.out_dir);
    gf::io::CsvWriter csv(cfg_.out_dir + "/benchmark.csv",
                          {"variant", "seed", "iteration", "mean_return", "normalized_return"});
    for (const auto& c : r.cells) {
      if (c.missing) continue;  // flagged in partial.json below
      if (c.curve.empty()) {
        csv.row_mixed({gf::nets::variant_name(c.variant), std::to_string(c.seed), "-1",
                       std::to_string(c.final_return),
                       std::to_string(c.final_return / r.normalizer)});
        continue;
      }
      for (const auto& row : c.curve)
        csv.row_mixed({gf::nets::variant_name(c.variant), std::to_string(c.seed),
                       std::to_string(row.iteration), std::to_string(row.mean_return),
                       std::to_string(row.mean_return / r.normalizer)});
    }
    // structural audit: parameter counts per variant
    gf::io::CsvWriter params(cfg_.out_dir + "/param_counts.csv", {"variant", "seed", "params"});
    for (const auto& c : r.cells)
      if (!c.missing)
        params.row_mixed({gf::nets::variant_name(c.variant), std::to_string(c.seed),
                          std::to_string(c.param_count)});
    if (r.partial) {
      std::ofstream flag(cfg_.out_dir + "/partial.json");
      flag << "{ \"partial\": true, \"missing\": [";
      bool first = true;
      for (const auto& c : r.cells)
        if (c.missing) {
          flag << (first ? "" : ", ") << "{\"variant\": \"" << gf::nets::variant_name(c.variant)
               << "\", \"seed\": " << c.seed << ", \"error\": \"" << c.error << "\"}";
          first = false;
        }
      flag << "] }\n";
    }
  }

  BenchmarkConfig cfg_;
  gf::ref::ReferenceMotion ref_;
};

}  // namespace gf::bench
