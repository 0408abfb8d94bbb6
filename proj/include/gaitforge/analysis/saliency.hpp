#pragma once

#include <map>
#include <string>
#include <vector>

#include "gaitforge/rl/rollout.hpp"

namespace gf::an {

// Per-input-dimension mean absolute gradient of the policy mean outputs,
// averaged over action dimensions, partitioned by input block.
struct SaliencyMap {
  std::vector<std::pair<std::string, std::vector<double>>> per_block;  // |d mean / d input|
  int total_dim = 0;

  double block_mean(const std::string& name) const {
    for (const auto& [n, v] : per_block)
      if (n == name) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return v.empty() ? 0.0 : acc / v.size();
      }
    throw std::runtime_error("saliency: no block '" + name + "'");
  }
};

// Works on any scalar type so a double instantiation can back the
// finite-difference oracle.
template <typename T>
SaliencyMap saliency_from_tape(gf::ad::Tape<T>& tape,
                               const std::vector<gf::nets::InputSlot>& slots,
                               const std::map<std::string, gf::ad::Array<T>>& inputs,
                               int act_dim) {
  SaliencyMap out;
  tape.forward(inputs);
  std::vector<std::map<std::string, gf::ad::Array<T>>> grads_per_dim;
  const int batch = inputs.begin()->second.shape[0];
  gf::ad::check(batch == 1, "saliency: one sample at a time");
  for (const auto& slot : slots) {
    const long dim = gf::ad::shape_size(slot.shape);
    out.per_block.emplace_back(slot.name, std::vector<double>(dim, 0.0));
    out.total_dim += static_cast<int>(dim);
  }
  for (int j = 0; j < act_dim; ++j) {
    gf::ad::Array<T> seed({1, act_dim});
    seed.data[j] = T(1);
    tape.forward(inputs);  // refresh cached values before each backward
    tape.backward({{"mean", seed}});
    for (size_t s = 0; s < slots.size(); ++s) {
      const auto& g = tape.grad(tape.input_id(slots[s].name));
      for (long i = 0; i < g.size(); ++i)
        out.per_block[s].second[i] += std::abs(static_cast<double>(g.data[i])) / act_dim;
    }
  }
  return out;
}

// Mean saliency over a set of observation bundles.
inline SaliencyMap saliency(gf::nets::PolicyModel& policy,
                            const std::vector<gf::env::ObsBundle>& samples) {
  gf::ad::check(!samples.empty(), "saliency: no samples");
  SaliencyMap acc;
  for (const auto& b : samples) {
    auto inputs = gf::rl::batch_from_bundles(policy, {b});
    SaliencyMap one = saliency_from_tape(policy.rollout_tape(), policy.input_slots(), inputs,
                                         policy.spec().act_dim);
    if (acc.per_block.empty()) {
      acc = std::move(one);
    } else {
      for (size_t s = 0; s < acc.per_block.size(); ++s)
        for (size_t i = 0; i < acc.per_block[s].second.size(); ++i)
          acc.per_block[s].second[i] += one.per_block[s].second[i];
    }
  }
  for (auto& [name, v] : acc.per_block)
    for (double& x : v) x /= samples.size();
  return acc;
}

}  // namespace gf::an
