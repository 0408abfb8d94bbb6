#pragma once

#include <deque>
#include <utility>
#include <map>
#include <string>
#include <vector>

#include "gaitforge/ad/parallel.hpp"
#include "gaitforge/env/env.hpp"
#include "gaitforge/nets/policy.hpp"
#include "gaitforge/rl/gae.hpp"

namespace gf::rl {

using gf::ad::Array;

// Flattened, env-major transition storage for one PPO iteration. Policy
// input blocks are kept per slot name so every architecture variant can
// rebuild its minibatch inputs.
struct RolloutBatch {
  int n_envs = 0;
  int n_steps = 0;
  std::map<std::string, std::vector<float>> blocks;  // policy inputs, flat
  std::map<std::string, int> block_dim;              // per-sample flat size
  std::vector<float> privileged;
  int priv_dim = 0;
  std::vector<float> action;
  std::vector<double> logp;
  std::vector<double> reward;
  std::vector<double> value;
  std::vector<Boundary> boundary;
  std::vector<double> bootstrap;
  std::vector<double> advantage;
  std::vector<double> ret;

  long size() const { return static_cast<long>(reward.size()); }
};

// per-episode record for post-hoc studies (the sampled dynamics vector
// rides along so reward-vs-parameter analyses stay possible)
struct EpisodeRecord {
  int env = 0;
  long episode = 0;
  int length = 0;
  double ret = 0.0;
  std::vector<float> params_vec;
};

struct EpisodeStats {
  std::deque<double> lengths;   // completed episode lengths (policy steps)
  std::deque<double> returns;   // completed episode returns
  double acc_return = 0.0;      // per-env accumulators live in the collector

  void record(double len, double ret) {
    lengths.push_back(len);
    returns.push_back(ret);
    while (lengths.size() > 100) lengths.pop_front();
    while (returns.size() > 100) returns.pop_front();
  }
  double mean_length() const {
    if (lengths.empty()) return 0.0;
    double s = 0.0;
    for (double v : lengths) s += v;
    return s / lengths.size();
  }
  double mean_return() const {
    if (returns.empty()) return 0.0;
    double s = 0.0;
    for (double v : returns) s += v;
    return s / returns.size();
  }
};

// Batched policy inputs from a span of bundles, validated; a non-finite
// entry is rejected with the offending block as the source tag.
inline std::map<std::string, Array<float>> batch_from_bundles(
    const gf::nets::PolicyModel& policy, const std::vector<gf::env::ObsBundle>& bundles) {
  std::map<std::string, Array<float>> inputs;
  const int ne = static_cast<int>(bundles.size());
  for (const auto& slot : policy.input_slots()) {
    std::vector<int> shape = slot.shape;
    shape.insert(shape.begin(), ne);
    Array<float> arr(shape);
    const long dim = gf::ad::shape_size(slot.shape);
    for (int e = 0; e < ne; ++e) {
      const auto& src = gf::nets::block_of(bundles[e], slot.block);
      gf::ad::check(static_cast<long>(src.size()) == dim,
                    "policy input: block size mismatch for " + slot.name);
      for (long i = 0; i < dim; ++i)
        gf::ad::check(std::isfinite(src[i]),
                      "policy input: non-finite value in block '" + slot.name + "'");
      std::copy(src.begin(), src.end(), arr.data.begin() + e * dim);
    }
    inputs.emplace(slot.name, std::move(arr));
  }
  return inputs;
}

// Synchronous vectorized collector. Envs advance in lockstep; network
// forwards are batched across envs; per-env action noise comes from streams
// keyed by (seed, env index, episode index) so any worker count produces
// the identical batch in canonical env order.
class Collector {
 public:
  Collector(const gf::env::EnvConfig& cfg, const gf::ref::ReferenceMotion* ref, int n_envs,
            uint64_t seed)
      : cfg_(cfg), seed_(seed) {
    envs_.reserve(n_envs);
    for (int i = 0; i < n_envs; ++i) envs_.emplace_back(cfg, ref);
    bundles_.resize(n_envs);
    act_rng_.resize(n_envs);
    ep_return_.assign(n_envs, 0.0);
    ep_len_.assign(n_envs, 0);
    for (int i = 0; i < n_envs; ++i) {
      bundles_[i] = envs_[i].reset(seed_, i);
      act_rng_[i] = gf::Rng(gf::Rng::derive(seed_, 0xAC7, i, envs_[i].episode_index()));
    }
  }

  int n_envs() const { return static_cast<int>(envs_.size()); }
  gf::env::LocomotionEnv& env(int i) { return envs_[i]; }
  const gf::env::ObsBundle& bundle(int i) const { return bundles_[i]; }
  void set_bundle(int i, gf::env::ObsBundle b) { bundles_[i] = std::move(b); }
  const EpisodeStats& stats() const { return stats_; }
  // completed-episode log since the last drain (dynamics vector included)
  std::vector<EpisodeRecord> drain_episode_log() { return std::exchange(episode_log_, {}); }

  RolloutBatch collect(gf::nets::PolicyModel& policy, gf::nets::CriticModel& critic,
                       int n_steps) {
    const int ne = n_envs();
    slot_block_.clear();
    for (const auto& slot : policy.input_slots()) slot_block_[slot.name] = slot.block;
    pending_reset_.assign(ne, 0);
    RolloutBatch b;
    b.n_envs = ne;
    b.n_steps = n_steps;
    for (const auto& slot : policy.input_slots()) {
      b.block_dim[slot.name] = static_cast<int>(gf::ad::shape_size(slot.shape));
      b.blocks[slot.name].resize(static_cast<size_t>(ne) * n_steps * b.block_dim[slot.name]);
    }
    b.priv_dim = gf::env::privileged_dim(cfg_);
    b.privileged.resize(static_cast<size_t>(ne) * n_steps * b.priv_dim);
    const long total = static_cast<long>(ne) * n_steps;
    b.action.resize(total * gf::env::kActDim);
    b.logp.resize(total);
    b.reward.resize(total);
    b.value.resize(total);
    b.boundary.assign(total, Boundary::kContinue);
    b.bootstrap.assign(total, 0.0);

    const gf::nets::GaussianHead head = policy.head();
    Array<float> mean_batch;
    std::vector<float> values_now;
    for (int step = 0; step < n_steps; ++step) {
      forward_policy(policy, mean_batch);
      values_now = critic.values(priv_batch());
      // env-major storage index: env * n_steps + step
      parallel_for(ne, 1, [&](long lo, long hi) {
        for (long e = lo; e < hi; ++e) {
          const long idx = e * n_steps + step;
          std::array<double, 4> act;
          for (int j = 0; j < 4; ++j)
            act[j] = head.sample_dim(mean_batch.data[e * 4 + j], act_rng_[e]);
          float actf[4];
          for (int j = 0; j < 4; ++j) actf[j] = static_cast<float>(act[j]);
          b.logp[idx] = head.logp(actf, mean_batch.ptr() + e * 4, 4);
          std::copy(actf, actf + 4, b.action.begin() + idx * 4);
          b.value[idx] = values_now[e];
          for (const auto& [name, dim] : b.block_dim) {
            const auto& src = slot_data(e, name);
            std::copy(src.begin(), src.end(), b.blocks[name].begin() + idx * dim);
          }
          std::copy(bundles_[e].privileged.begin(), bundles_[e].privileged.end(),
                    b.privileged.begin() + idx * b.priv_dim);
          auto res = envs_[e].step(act);
          b.reward[idx] = res.reward;
          ep_return_[e] += res.reward;
          ep_len_[e] += 1;
          bundles_[e] = std::move(res.obs);
          if (res.done) {
            b.boundary[idx] = envs_[e].timed_out() ? Boundary::kTruncated : Boundary::kTerminal;
            pending_reset_[e] = 1;
          }
        }
      });
      // bootstrap values for truncated episodes, then reset (serial: rare)
      for (int e = 0; e < ne; ++e) {
        if (!pending_reset_[e]) continue;
        const long idx = static_cast<long>(e) * n_steps + step;
        if (b.boundary[idx] == Boundary::kTruncated)
          b.bootstrap[idx] = value_of(critic, bundles_[e].privileged);
        stats_.record(ep_len_[e], ep_return_[e]);
        episode_log_.push_back({e, envs_[e].episode_index(), ep_len_[e], ep_return_[e],
                                bundles_[e].params_vec});
        ep_return_[e] = 0.0;
        ep_len_[e] = 0;
        bundles_[e] = envs_[e].reset(seed_, e);
        act_rng_[e] = gf::Rng(gf::Rng::derive(seed_, 0xAC7, e, envs_[e].episode_index()));
        pending_reset_[e] = 0;
      }
    }
    // segment-end truncation bootstrap for still-running episodes
    values_now = critic.values(priv_batch());
    for (int e = 0; e < ne; ++e) {
      const long idx = static_cast<long>(e) * n_steps + (n_steps - 1);
      if (b.boundary[idx] == Boundary::kContinue) {
        b.boundary[idx] = Boundary::kTruncated;
        b.bootstrap[idx] = values_now[e];
      }
    }
    return b;
  }

  // Deterministic mean-policy evaluation forward for analysis paths.
  void forward_policy(gf::nets::PolicyModel& policy, Array<float>& mean_out,
                      Array<float>* latent_out = nullptr) {
    auto out = policy.rollout_tape().forward(batch_from_bundles(policy, bundles_));
    mean_out = out.at("mean");
    if (latent_out && out.count("latent")) *latent_out = out.at("latent");
  }

 private:
  Array<float> priv_batch() const {
    const int ne = n_envs();
    const int pd = static_cast<int>(bundles_[0].privileged.size());
    Array<float> arr({ne, pd});
    for (int e = 0; e < ne; ++e)
      std::copy(bundles_[e].privileged.begin(), bundles_[e].privileged.end(),
                arr.data.begin() + static_cast<long>(e) * pd);
    return arr;
  }

  double value_of(gf::nets::CriticModel& critic, const std::vector<float>& priv) {
    Array<float> arr({1, static_cast<int>(priv.size())}, std::vector<float>(priv));
    return critic.values(arr)[0];
  }

  const std::vector<float>& slot_data(long e, const std::string& name) {
    return gf::nets::block_of(bundles_[e], slot_block_.at(name));
  }

  gf::env::EnvConfig cfg_;
  uint64_t seed_;
  std::vector<gf::env::LocomotionEnv> envs_;
  std::vector<gf::env::ObsBundle> bundles_;
  std::vector<gf::Rng> act_rng_;
  std::vector<double> ep_return_;
  std::vector<int> ep_len_;
  std::vector<uint8_t> pending_reset_;
  std::map<std::string, gf::nets::Block> slot_block_;
  EpisodeStats stats_;
  std::vector<EpisodeRecord> episode_log_;
};

}  // namespace gf::rl
