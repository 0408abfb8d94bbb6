#pragma once

#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::env {

// Dual ring buffer of (observation, previous action) pairs. Pair k counts
// back from the present: (o_{t-k}, a_{t-k-1}). Both exported windows are
// newest-first; the long window always spans exactly long_len pairs,
// zero-filled at reset.
class IOHistory {
 public:
  IOHistory(int obs_dim, int act_dim, int long_len, int short_len)
      : obs_dim_(obs_dim), act_dim_(act_dim), long_len_(long_len), short_len_(short_len),
        obs_(static_cast<size_t>(long_len) * obs_dim, 0.0f),
        act_(static_cast<size_t>(long_len) * act_dim, 0.0f) {}

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int long_len() const { return long_len_; }
  int short_len() const { return short_len_; }

  void reset() {
    std::fill(obs_.begin(), obs_.end(), 0.0f);
    std::fill(act_.begin(), act_.end(), 0.0f);
    head_ = 0;
  }

  // Push the pair (o_t, a_{t-1}).
  void push(const std::vector<float>& obs, const std::vector<float>& prev_action) {
    gf::ad::check(static_cast<int>(obs.size()) == obs_dim_, "history: bad obs dim");
    gf::ad::check(static_cast<int>(prev_action.size()) == act_dim_, "history: bad act dim");
    head_ = (head_ + long_len_ - 1) % long_len_;
    std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<size_t>(head_) * obs_dim_);
    std::copy(prev_action.begin(), prev_action.end(),
              act_.begin() + static_cast<size_t>(head_) * act_dim_);
  }

  // pair k, newest-first (k = 0 is (o_t, a_{t-1}))
  const float* obs_at(int k) const {
    return obs_.data() + static_cast<size_t>((head_ + k) % long_len_) * obs_dim_;
  }
  const float* act_at(int k) const {
    return act_.data() + static_cast<size_t>((head_ + k) % long_len_) * act_dim_;
  }

  // Short window as interleaved pairs [o_t, a_{t-1}, o_{t-1}, a_{t-2}, ...].
  std::vector<float> short_pairs() const {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(short_len_) * (obs_dim_ + act_dim_));
    for (int k = 0; k < short_len_; ++k) {
      out.insert(out.end(), obs_at(k), obs_at(k) + obs_dim_);
      out.insert(out.end(), act_at(k), act_at(k) + act_dim_);
    }
    return out;
  }

  // Short window with the action entries dropped (state-feedback ablation).
  std::vector<float> short_obs_only() const {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(short_len_) * obs_dim_);
    for (int k = 0; k < short_len_; ++k) out.insert(out.end(), obs_at(k), obs_at(k) + obs_dim_);
    return out;
  }

  // Channel-major [obs_dim + act_dim][long_len] image for the CNN encoder,
  // newest-first along the length axis.
  std::vector<float> cnn_image(bool include_actions = true) const {
    const int channels = obs_dim_ + (include_actions ? act_dim_ : 0);
    std::vector<float> out(static_cast<size_t>(channels) * long_len_);
    for (int k = 0; k < long_len_; ++k) {
      const float* o = obs_at(k);
      for (int c = 0; c < obs_dim_; ++c) out[static_cast<size_t>(c) * long_len_ + k] = o[c];
      if (include_actions) {
        const float* a = act_at(k);
        for (int c = 0; c < act_dim_; ++c)
          out[static_cast<size_t>(obs_dim_ + c) * long_len_ + k] = a[c];
      }
    }
    return out;
  }

 private:
  int obs_dim_, act_dim_, long_len_, short_len_;
  std::vector<float> obs_, act_;
  int head_ = 0;
};

}  // namespace gf::env
