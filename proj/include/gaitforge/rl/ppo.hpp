#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gaitforge/nets/policy.hpp"
#include "gaitforge/rl/gae.hpp"
#include "gaitforge/rl/rollout.hpp"

namespace gf::rl {

struct PpoConfig {
  double clip = 0.2;
  double step_size = 3e-4;        // desk scale; paper preset 1e-4
  double critic_step_size = 1e-3; // desk scale; 0 = follow step_size
  int iteration_batch = 8192;     // desk scale; paper preset 65536
  int minibatch = 1024;           // desk scale; paper preset 8192
  int epochs = 2;
  double gamma = 0.98;
  double lambda = 0.95;
  double max_grad_norm = 1.0;
  int n_envs = 16;

  int steps_per_env() const { return iteration_batch / n_envs; }
  double critic_lr() const { return critic_step_size > 0 ? critic_step_size : step_size; }
  bool valid() const {
    return clip > 0 && gamma > 0 && gamma <= 1 && lambda >= 0 && lambda <= 1 &&
           step_size >= 0 && iteration_batch % n_envs == 0 && minibatch > 0 && epochs > 0;
  }
};

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double adv_mean = 0.0;  // post-normalization diagnostics
  double adv_std = 0.0;
  int skipped_minibatches = 0;
};

// Fills batch.advantage / batch.ret with per-env GAE sequences.
inline void compute_gae(RolloutBatch& b, double gamma, double lambda) {
  const long total = b.size();
  b.advantage.resize(total);
  b.ret.resize(total);
  for (int e = 0; e < b.n_envs; ++e) {
    const long off = static_cast<long>(e) * b.n_steps;
    std::vector<double> r(b.reward.begin() + off, b.reward.begin() + off + b.n_steps);
    std::vector<double> v(b.value.begin() + off, b.value.begin() + off + b.n_steps);
    std::vector<Boundary> bd(b.boundary.begin() + off, b.boundary.begin() + off + b.n_steps);
    std::vector<double> bs(b.bootstrap.begin() + off, b.bootstrap.begin() + off + b.n_steps);
    const GaeResult g = gae(r, v, bd, bs, gamma, lambda);
    std::copy(g.advantages.begin(), g.advantages.end(), b.advantage.begin() + off);
    std::copy(g.returns.begin(), g.returns.end(), b.ret.begin() + off);
  }
}

// Normalizes advantages in place to zero mean, unit std (64-bit accumulate).
inline std::pair<double, double> normalize_advantages(std::vector<double>& adv) {
  const long n = static_cast<long>(adv.size());
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= n;
  const double stdev = std::sqrt(std::max(var, 1e-12));
  for (double& a : adv) a = (a - mean) / stdev;
  double m2 = 0.0, v2 = 0.0;
  for (double a : adv) m2 += a;
  m2 /= n;
  for (double a : adv) v2 += (a - m2) * (a - m2);
  return {m2, std::sqrt(v2 / n)};
}

// conv slots carry [C, L] per-sample shapes; restore them after flat packing
inline void reshape_conv_inputs(gf::nets::PolicyModel& policy,
                                std::map<std::string, gf::ad::Array<float>>& in) {
  for (const auto& slot : policy.input_slots()) {
    if (slot.shape.size() < 2) continue;
    auto it = in.find(slot.name);
    if (it == in.end()) continue;
    std::vector<int> shape = slot.shape;
    shape.insert(shape.begin(), it->second.shape[0]);
    it->second.shape = shape;
  }
}

// Clipped-surrogate PPO over shuffled minibatches; the critic regresses the
// GAE return targets with a plain MSE. There is no entropy bonus (the
// Gaussian std is fixed).
inline UpdateMetrics ppo_update(gf::nets::PolicyModel& policy, gf::nets::CriticModel& critic,
                                RolloutBatch& b, const PpoConfig& cfg, uint64_t shuffle_key) {
  gf::ad::check(cfg.valid(), "ppo config invalid");
  compute_gae(b, cfg.gamma, cfg.lambda);
  UpdateMetrics m;
  std::tie(m.adv_mean, m.adv_std) = normalize_advantages(b.advantage);

  const long total = b.size();
  std::vector<long> order(total);
  std::iota(order.begin(), order.end(), 0);
  const int n_mb = static_cast<int>(total / cfg.minibatch);
  gf::ad::check(n_mb >= 1, "batch smaller than one minibatch");

  long counted = 0;
  double loss_acc = 0.0, vloss_acc = 0.0, clip_acc = 0.0, kl_acc = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    gf::Rng rng(gf::Rng::derive(shuffle_key, 0x5A3, epoch));
    for (long i = total - 1; i > 0; --i) {
      const long j = static_cast<long>(rng.next_u64() % static_cast<uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    for (int mb = 0; mb < n_mb; ++mb) {
      const long* idx = nullptr;
      std::vector<long> ids(order.begin() + static_cast<long>(mb) * cfg.minibatch,
                            order.begin() + static_cast<long>(mb + 1) * cfg.minibatch);
      idx = ids.data();
      const int B = cfg.minibatch;

      // policy minibatch
      std::map<std::string, gf::ad::Array<float>> in;
      for (const auto& [name, dim] : b.block_dim) {
        std::vector<int> shape = {B, dim};
        // conv inputs need their [C, L] shape restored
        gf::ad::Array<float> arr;
        arr.shape = shape;
        arr.data.resize(static_cast<long>(B) * dim);
        const auto& src = b.blocks.at(name);
        for (int r = 0; r < B; ++r)
          std::copy(src.begin() + idx[r] * dim, src.begin() + (idx[r] + 1) * dim,
                    arr.data.begin() + static_cast<long>(r) * dim);
        in.emplace(name, std::move(arr));
      }
      reshape_conv_inputs(policy, in);
      gf::ad::Array<float> act({B, 4});
      gf::ad::Array<float> lpo({B, 1});
      gf::ad::Array<float> adv({B, 1});
      for (int r = 0; r < B; ++r) {
        std::copy(b.action.begin() + idx[r] * 4, b.action.begin() + (idx[r] + 1) * 4,
                  act.data.begin() + r * 4);
        lpo.data[r] = static_cast<float>(b.logp[idx[r]]);
        adv.data[r] = static_cast<float>(b.advantage[idx[r]]);
      }
      in.emplace("action", std::move(act));
      in.emplace("logp_old", std::move(lpo));
      in.emplace("adv", std::move(adv));
      auto out = policy.train_tape().forward(in);
      const double loss = out.at("loss").data[0];
      if (std::isfinite(loss)) {
        auto grads = policy.train_tape().backward(
            {{"loss", gf::ad::Array<float>::scalar(1.0f)}});
        policy.apply(grads);
        loss_acc += loss;
        // diagnostics
        const auto& ratio = out.at("ratio").data;
        const auto& logp = out.at("logp").data;
        long clipped = 0;
        double kl = 0.0;
        for (int r = 0; r < B; ++r) {
          if (std::abs(static_cast<double>(ratio[r]) - 1.0) > cfg.clip) ++clipped;
          kl += b.logp[idx[r]] - static_cast<double>(logp[r]);
        }
        clip_acc += static_cast<double>(clipped) / B;
        kl_acc += kl / B;
      } else {
        ++m.skipped_minibatches;
      }

      // critic minibatch
      gf::ad::Array<float> priv({B, b.priv_dim});
      gf::ad::Array<float> tgt({B, 1});
      for (int r = 0; r < B; ++r) {
        std::copy(b.privileged.begin() + idx[r] * b.priv_dim,
                  b.privileged.begin() + (idx[r] + 1) * b.priv_dim,
                  priv.data.begin() + static_cast<long>(r) * b.priv_dim);
        tgt.data[r] = static_cast<float>(b.ret[idx[r]]);
      }
      auto vout = critic.train_tape().forward({{"priv", std::move(priv)},
                                               {"vtarget", std::move(tgt)}});
      const double vloss = vout.at("loss").data[0];
      if (std::isfinite(vloss)) {
        auto vgrads = critic.train_tape().backward(
            {{"loss", gf::ad::Array<float>::scalar(1.0f)}});
        critic.optimizer().step(critic.train_tape(), vgrads);
        vloss_acc += vloss;
      } else {
        ++m.skipped_minibatches;
      }
      ++counted;
    }
  }
  policy.sync_rollout();
  critic.sync_eval();
  m.policy_loss = loss_acc / std::max<long>(1, counted);
  m.value_loss = vloss_acc / std::max<long>(1, counted);
  m.clip_fraction = clip_acc / std::max<long>(1, counted);
  m.approx_kl = kl_acc / std::max<long>(1, counted);
  return m;
}

}  // namespace gf::rl
