#pragma once

#include <cstring>
#include <numeric>
#include <vector>

#include "gaitforge/rl/rollout.hpp"
#include "gaitforge/train/driver.hpp"

namespace gf::bench {

using gf::ad::Array;

// (long I/O history window, expert extrinsics) pairs harvested from expert
// rollouts; windows are only taken after the encoder warm-up.
struct DistillDataset {
  int n = 0;
  int channels = 0;
  int length = 0;
  int extr_dim = 0;
  std::vector<float> windows;  // n x channels x length
  std::vector<float> extr;     // n x extr_dim

  // mean squared error of the best constant predictor (the per-dim mean)
  double constant_predictor_mse() const {
    std::vector<double> mean(extr_dim, 0.0);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < extr_dim; ++d) mean[d] += extr[static_cast<size_t>(i) * extr_dim + d];
    for (auto& m : mean) m /= n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < extr_dim; ++d) {
        const double e = extr[static_cast<size_t>(i) * extr_dim + d] - mean[d];
        acc += e * e;
      }
    return acc / (static_cast<double>(n) * extr_dim);
  }
};

inline std::vector<float> env_window(gf::rl::Collector& col, int e) {
  // collector keeps the freshest bundle per env
  return col.bundle(e).long_cnn;
}

inline void step_all(gf::rl::Collector& col, gf::nets::PolicyModel& policy,
                     const Array<float>& mean, const gf::nets::GaussianHead& head,
                     std::vector<gf::Rng>& rng, uint64_t seed) {
  (void)policy;
  for (int e = 0; e < col.n_envs(); ++e) {
    auto& env = col.env(e);
    std::array<double, 4> a;
    for (int j = 0; j < 4; ++j) a[j] = head.sample_dim(mean.data[e * 4 + j], rng[e]);
    if (env.done()) {
      col.set_bundle(e, env.reset(seed, e));
      continue;
    }
    auto res = env.step(a);
    if (res.done)
      col.set_bundle(e, env.reset(seed, e));
    else
      col.set_bundle(e, std::move(res.obs));
  }
}

// Rolls out the expert with mean actions in the stage-3 env and records
// (window, extrinsics) pairs.
inline DistillDataset harvest_dataset(gf::nets::PolicyModel& expert,
                                      const gf::env::EnvConfig& env_cfg,
                                      const gf::ref::ReferenceMotion* ref, int n_samples,
                                      uint64_t seed, int n_envs = 16) {
  gf::ad::check(expert.spec().variant == gf::nets::Variant::kExpert,
                "harvest: teacher must be the expert variant");
  DistillDataset ds;
  ds.channels = expert.spec().obs_dim + expert.spec().act_dim;
  ds.length = env_cfg.long_history;
  ds.extr_dim = expert.spec().extrinsics_dim;
  gf::rl::Collector col(env_cfg, ref, n_envs, gf::Rng::derive(seed, 0xD157));
  gf::nets::GaussianHead head = expert.head();
  std::vector<gf::Rng> rng(n_envs);
  for (int e = 0; e < n_envs; ++e) rng[e] = gf::Rng(gf::Rng::derive(seed, 0xD158, e));
  Array<float> mean, latent;
  while (ds.n < n_samples) {
    col.forward_policy(expert, mean, &latent);
    for (int e = 0; e < n_envs && ds.n < n_samples; ++e) {
      auto& env = col.env(e);
      if (env.steps() >= env_cfg.long_history && !env.done()) {
        // window + teacher extrinsics for this env
        const auto img = env_window(col, e);
        ds.windows.insert(ds.windows.end(), img.begin(), img.end());
        ds.extr.insert(ds.extr.end(), latent.ptr() + e * ds.extr_dim,
                       latent.ptr() + (e + 1) * ds.extr_dim);
        ++ds.n;
      }
    }
    // step all envs with sampled expert actions
    step_all(col, expert, mean, head, rng, seed);
  }
  return ds;
}

struct DistillResult {
  std::vector<double> loss_curve;  // epoch-mean training MSE
  double final_mse = 0.0;
  double baseline_mse = 0.0;
};

// Supervised regression of the student's long-history encoder onto the
// expert extrinsics. The student copies the expert's base MLP, which stays
// frozen through distillation.
inline DistillResult distill_rma(gf::nets::PolicyModel& expert, gf::nets::PolicyModel& student,
                                 const DistillDataset& ds, int epochs, int batch, double lr,
                                 uint64_t seed) {
  gf::ad::check(student.spec().variant == gf::nets::Variant::kRma, "student must be rma");
  gf::ad::check(student.spec().extrinsics_dim == ds.extr_dim, "extrinsics dim mismatch");
  // copy the frozen base MLP from the expert
  for (const auto& name : expert.train_tape().param_names()) {
    if (name.rfind("pi/mlp/", 0) != 0) continue;
    student.train_tape().param_value(name).data = expert.train_tape().param_value(name).data;
  }

  // regression tape over the encoder params (shared by name with the student)
  gf::ad::Tape<float> t;
  gf::Rng rng(gf::Rng::derive(seed, 0xD159));
  auto x = t.input("win", {ds.channels, ds.length});
  auto tgt = t.input("target", {ds.extr_dim});
  auto k1 = t.param("pi/enc/k1", student.train_tape().param_value("pi/enc/k1"));
  auto b1 = t.param("pi/enc/b1", student.train_tape().param_value("pi/enc/b1"));
  auto c1 = t.relu(t.conv1d(x, k1, b1, 3));
  auto k2 = t.param("pi/enc/k2", student.train_tape().param_value("pi/enc/k2"));
  auto b2 = t.param("pi/enc/b2", student.train_tape().param_value("pi/enc/b2"));
  auto c2 = t.relu(t.conv1d(c1, k2, b2, 2));
  auto pw = t.param("pi/enc/proj_w", student.train_tape().param_value("pi/enc/proj_w"));
  auto pb = t.param("pi/enc/proj_b", student.train_tape().param_value("pi/enc/proj_b"));
  auto est = t.add_bias(t.matmul(t.flatten(c2), pw), pb);
  t.mark_output("est", est);
  t.mark_output("loss", t.mean_all(t.square(t.sub(est, tgt))));

  gf::ad::AdamOptimizer<float> opt(lr);
  DistillResult out;
  out.baseline_mse = ds.constant_predictor_mse();
  const long win_sz = static_cast<long>(ds.channels) * ds.length;
  std::vector<long> order(ds.n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (long i = ds.n - 1; i > 0; --i)
      std::swap(order[i], order[rng.next_u64() % static_cast<uint64_t>(i + 1)]);
    double acc = 0.0;
    long count = 0;
    for (int start = 0; start + batch <= ds.n; start += batch) {
      Array<float> win({batch, ds.channels, ds.length});
      Array<float> target({batch, ds.extr_dim});
      for (int r = 0; r < batch; ++r) {
        const long id = order[start + r];
        std::copy(ds.windows.begin() + id * win_sz, ds.windows.begin() + (id + 1) * win_sz,
                  win.data.begin() + static_cast<long>(r) * win_sz);
        std::copy(ds.extr.begin() + id * ds.extr_dim, ds.extr.begin() + (id + 1) * ds.extr_dim,
                  target.data.begin() + static_cast<long>(r) * ds.extr_dim);
      }
      auto res = t.forward({{"win", std::move(win)}, {"target", std::move(target)}});
      auto grads = t.backward({{"loss", Array<float>::scalar(1.0f)}});
      opt.step(t, grads);
      acc += res.at("loss").data[0];
      ++count;
    }
    out.loss_curve.push_back(acc / std::max<long>(1, count));
  }
  out.final_mse = out.loss_curve.empty() ? 0.0 : out.loss_curve.back();
  // write the trained encoder back into the student
  for (const char* n : {"pi/enc/k1", "pi/enc/b1", "pi/enc/k2", "pi/enc/b2", "pi/enc/proj_w",
                        "pi/enc/proj_b"})
    student.train_tape().param_value(n).data = t.param_value(n).data;
  student.sync_rollout();
  return out;
}

inline uint64_t params_hash(gf::nets::PolicyModel& m, const std::string& prefix) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& name : m.train_tape().param_names()) {
    if (name.rfind(prefix, 0) != 0) continue;
    for (float v : m.train_tape().param_value(name).data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      h ^= bits;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace gf::bench
