#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gaitforge/ad/adam.hpp"
#include "gaitforge/ad/init.hpp"
#include "gaitforge/ad/tape.hpp"
#include "gaitforge/env/env.hpp"

namespace gf::nets {

using gf::ad::Array;
using gf::ad::Tape;

// The eight policy wirings. All variants receive command + reference preview;
// they differ in how the robot's history enters the base MLP.
enum class Variant {
  kDual = 0,     // short I/O pairs + CNN-encoded long I/O history
  kResidual,     // dual wiring, action added to the reference motor position
  kStateOnly,    // observations only in both histories
  kLongOnly,     // latest observation + CNN-encoded long history
  kShortOnly,    // short I/O pairs only, no encoder
  kExpert,       // privileged dynamics params -> 8D extrinsics
  kRma,          // frozen expert base MLP + encoder estimating extrinsics
  kArma,         // RMA encoder frozen, base MLP trained further by RL
};

inline const char* variant_name(Variant v) {
  static const char* names[] = {"dual",       "residual", "state-only", "long-only",
                                "short-only", "expert",   "rma",        "arma"};
  return names[static_cast<int>(v)];
}

inline Variant variant_from_name(const std::string& s) {
  for (int i = 0; i < 8; ++i)
    if (s == variant_name(static_cast<Variant>(i))) return static_cast<Variant>(i);
  throw std::runtime_error("unknown policy variant '" + s + "'");
}

struct ArchSpec {
  Variant variant = Variant::kDual;
  int obs_dim = gf::env::kObsDim;
  int act_dim = gf::env::kActDim;
  int cmd_dim = 2;
  int preview_dim = 12;
  int short_len = gf::env::kShortHistory;
  int long_len = gf::env::kLongHistory;  // Appendix-style variants: 33/66/99/132
  int params_dim = gf::rnd::kParamsVectorDim;
  int extrinsics_dim = 8;
  int hidden = 512;
  int extr_hidden = 64;
  double action_std = 0.1;

  bool has_encoder() const {
    return variant == Variant::kDual || variant == Variant::kResidual ||
           variant == Variant::kStateOnly || variant == Variant::kLongOnly ||
           variant == Variant::kRma || variant == Variant::kArma;
  }
  bool encoder_obs_only() const { return variant == Variant::kStateOnly; }
  int encoder_channels() const { return encoder_obs_only() ? obs_dim : obs_dim + act_dim; }
  // conv stack (kernel, filters, stride): (6, 32, 3) then (4, 16, 2)
  int encoder_len1() const { return (long_len - 6) / 3 + 1; }
  int encoder_len2() const { return (encoder_len1() - 4) / 2 + 1; }
  int latent_dim() const {
    if (variant == Variant::kRma || variant == Variant::kArma || variant == Variant::kExpert)
      return extrinsics_dim;
    return 16 * encoder_len2();
  }
  bool uses_short_pairs() const {
    return variant == Variant::kDual || variant == Variant::kResidual ||
           variant == Variant::kShortOnly || variant == Variant::kExpert ||
           variant == Variant::kRma || variant == Variant::kArma;
  }
  bool residual() const { return variant == Variant::kResidual; }

  std::vector<float> serialize() const {
    return {static_cast<float>(static_cast<int>(variant)),
            static_cast<float>(obs_dim),
            static_cast<float>(act_dim),
            static_cast<float>(cmd_dim),
            static_cast<float>(preview_dim),
            static_cast<float>(short_len),
            static_cast<float>(long_len),
            static_cast<float>(params_dim),
            static_cast<float>(extrinsics_dim),
            static_cast<float>(hidden),
            static_cast<float>(extr_hidden),
            static_cast<float>(action_std)};
  }
  static ArchSpec deserialize(const std::vector<float>& v) {
    gf::ad::check(v.size() >= 12, "arch meta truncated");
    ArchSpec s;
    s.variant = static_cast<Variant>(static_cast<int>(v[0]));
    s.obs_dim = static_cast<int>(v[1]);
    s.act_dim = static_cast<int>(v[2]);
    s.cmd_dim = static_cast<int>(v[3]);
    s.preview_dim = static_cast<int>(v[4]);
    s.short_len = static_cast<int>(v[5]);
    s.long_len = static_cast<int>(v[6]);
    s.params_dim = static_cast<int>(v[7]);
    s.extrinsics_dim = static_cast<int>(v[8]);
    s.hidden = static_cast<int>(v[9]);
    s.extr_hidden = static_cast<int>(v[10]);
    s.action_std = v[11];
    return s;
  }
};

// Input blocks a variant consumes, in the canonical concatenation order
// (command, preview, history block, latent source).
enum class Block { kCmd, kPreview, kShortPairs, kShortObs, kObsNow, kLongCnn, kLongObsCnn, kParams };

inline const std::vector<float>& block_of(const gf::env::ObsBundle& b, Block blk) {
  switch (blk) {
    case Block::kCmd: return b.command;
    case Block::kPreview: return b.preview;
    case Block::kShortPairs: return b.short_pairs;
    case Block::kShortObs: return b.short_obs;
    case Block::kObsNow: return b.obs_now;
    case Block::kLongCnn: return b.long_cnn;
    case Block::kLongObsCnn: return b.long_obs_cnn;
    case Block::kParams: return b.params_vec;
  }
  return b.command;
}

struct InputSlot {
  std::string name;
  Block block;
  std::vector<int> shape;  // per sample
};

namespace detail {

inline int input_dim(const ArchSpec& s) {
  int d = s.cmd_dim + s.preview_dim;
  if (s.uses_short_pairs())
    d += s.short_len * (s.obs_dim + s.act_dim);
  else if (s.variant == Variant::kStateOnly)
    d += s.short_len * s.obs_dim;
  else if (s.variant == Variant::kLongOnly)
    d += s.obs_dim;
  if (s.has_encoder() || s.variant == Variant::kExpert) d += s.latent_dim();
  return d;
}

template <typename T>
void build_policy_graph(Tape<T>& t, const ArchSpec& s, gf::Rng& rng, bool with_loss,
                        std::vector<InputSlot>* slots, double clip = 0.2) {
  using gf::ad::gaussian_init;
  using gf::ad::orthogonal_init;
  auto slot = [&](const std::string& name, Block b, std::vector<int> shape) {
    if (slots) slots->push_back({name, b, shape});
    return t.input(name, shape);
  };

  std::vector<typename Tape<T>::Id> cat;
  if (s.cmd_dim > 0) cat.push_back(slot("cmd", Block::kCmd, {s.cmd_dim}));
  cat.push_back(slot("preview", Block::kPreview, {s.preview_dim}));

  if (s.uses_short_pairs())
    cat.push_back(slot("short", Block::kShortPairs, {s.short_len * (s.obs_dim + s.act_dim)}));
  else if (s.variant == Variant::kStateOnly)
    cat.push_back(slot("short", Block::kShortObs, {s.short_len * s.obs_dim}));
  else if (s.variant == Variant::kLongOnly)
    cat.push_back(slot("obs_now", Block::kObsNow, {s.obs_dim}));

  if (s.has_encoder()) {
    const int ch = s.encoder_channels();
    auto x = slot("long", s.encoder_obs_only() ? Block::kLongObsCnn : Block::kLongCnn,
                  {ch, s.long_len});
    auto k1 = t.param("pi/enc/k1", gaussian_init<T>({32, ch, 6}, 1.0 / std::sqrt(6.0 * ch), rng));
    auto b1 = t.param("pi/enc/b1", Array<T>({32}));
    auto c1 = t.relu(t.conv1d(x, k1, b1, 3));
    auto k2 = t.param("pi/enc/k2", gaussian_init<T>({16, 32, 4}, 1.0 / std::sqrt(4.0 * 32.0), rng));
    auto b2 = t.param("pi/enc/b2", Array<T>({16}));
    auto c2 = t.relu(t.conv1d(c1, k2, b2, 2));
    auto flat = t.flatten(c2);
    if (s.variant == Variant::kRma || s.variant == Variant::kArma) {
      auto pw = t.param("pi/enc/proj_w",
                        orthogonal_init<T>(16 * s.encoder_len2(), s.extrinsics_dim, 1.0, rng));
      auto pb = t.param("pi/enc/proj_b", Array<T>({s.extrinsics_dim}));
      auto est = t.add_bias(t.matmul(flat, pw), pb);
      t.mark_output("latent", est);
      cat.push_back(est);
    } else {
      t.mark_output("latent", flat);
      cat.push_back(flat);
    }
  } else if (s.variant == Variant::kExpert) {
    auto pv = slot("extr_src", Block::kParams, {s.params_dim});
    auto w1 = t.param("pi/extr/w1", orthogonal_init<T>(s.params_dim, s.extr_hidden, 1.0, rng));
    auto b1 = t.param("pi/extr/b1", Array<T>({s.extr_hidden}));
    auto h = t.tanh_(t.add_bias(t.matmul(pv, w1), b1));
    auto w2 = t.param("pi/extr/w2", orthogonal_init<T>(s.extr_hidden, s.extrinsics_dim, 1.0, rng));
    auto b2 = t.param("pi/extr/b2", Array<T>({s.extrinsics_dim}));
    auto extr = t.add_bias(t.matmul(h, w2), b2);
    t.mark_output("latent", extr);
    cat.push_back(extr);
  }

  auto in = t.concat(cat);
  auto w1 = t.param("pi/mlp/w1", orthogonal_init<T>(input_dim(s), s.hidden, 1.0, rng));
  auto b1 = t.param("pi/mlp/b1", Array<T>({s.hidden}));
  auto h1 = t.tanh_(t.add_bias(t.matmul(in, w1), b1));
  auto w2 = t.param("pi/mlp/w2", orthogonal_init<T>(s.hidden, s.hidden, 1.0, rng));
  auto b2 = t.param("pi/mlp/b2", Array<T>({s.hidden}));
  auto h2 = t.tanh_(t.add_bias(t.matmul(h1, w2), b2));
  auto w3 = t.param("pi/mlp/w3", orthogonal_init<T>(s.hidden, s.act_dim, 0.01, rng));
  auto b3 = t.param("pi/mlp/b3", Array<T>({s.act_dim}));
  auto mean = t.tanh_(t.add_bias(t.matmul(h2, w3), b3));
  t.mark_output("mean", mean);

  if (with_loss) {
    auto action = t.input("action", {s.act_dim});
    auto logp_old = t.input("logp_old", {1});
    auto adv = t.input("adv", {1});
    const double var2 = 2.0 * s.action_std * s.action_std;
    const double log_norm = -s.act_dim * (std::log(s.action_std) + 0.5 * std::log(2.0 * M_PI));
    auto d = t.sub(action, mean);
    auto q = t.row_sum(t.square(d));
    auto logp = t.add_scalar(t.scale(q, -1.0 / var2), log_norm);
    t.mark_output("logp", logp);
    auto ratio = t.exp_(t.sub(logp, logp_old));
    t.mark_output("ratio", ratio);
    auto s1 = t.mul(ratio, adv);
    auto s2 = t.mul(t.clamp(ratio, 1.0 - clip, 1.0 + clip), adv);
    auto surr = t.min_(s1, s2);
    t.mark_output("loss", t.neg(t.mean_all(surr)));
  }
}

}  // namespace detail

// Diagonal Gaussian head with a fixed standard deviation; samples clamp to
// [-1, 1] before use and the stored log-prob is evaluated at the clamped
// action.
struct GaussianHead {
  double std_dev = 0.1;

  double sample_dim(double mean, gf::Rng& rng) const {
    return std::min(1.0, std::max(-1.0, mean + std_dev * rng.normal()));
  }
  double logp(const float* action, const float* mean, int n) const {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = static_cast<double>(action[i]) - static_cast<double>(mean[i]);
      acc += d * d;
    }
    return -acc / (2.0 * std_dev * std_dev) - n * (std::log(std_dev) + 0.5 * std::log(2.0 * M_PI));
  }
  double entropy(int n) const {
    return n * (0.5 * std::log(2.0 * M_PI * std_dev * std_dev) + 0.5);
  }
};

// Actor: a training tape (with the clipped-surrogate loss) plus a rollout
// tape holding an immutable parameter snapshot that workers copy.
class PolicyModel {
 public:
  PolicyModel(const ArchSpec& spec, uint64_t init_seed, double step_size = 1e-4,
              double max_grad_norm = 1.0, double clip = 0.2)
      : spec_(spec), opt_(step_size, 0.9, 0.999, 1e-8, max_grad_norm) {
    gf::Rng rng(gf::Rng::derive(init_seed, 0x90110));
    detail::build_policy_graph(train_, spec_, rng, /*with_loss=*/true, &slots_, clip);
    gf::Rng rng2(gf::Rng::derive(init_seed, 0x90110));
    detail::build_policy_graph(roll_, spec_, rng2, /*with_loss=*/false, nullptr, clip);
    trainable_ = train_.param_names();
    if (spec_.variant == Variant::kArma) freeze_encoder();
    sync_rollout();
  }

  const ArchSpec& spec() const { return spec_; }
  const std::vector<InputSlot>& input_slots() const { return slots_; }
  GaussianHead head() const { return GaussianHead{spec_.action_std}; }
  Tape<float>& rollout_tape() { return roll_; }
  Tape<float>& train_tape() { return train_; }
  gf::ad::AdamOptimizer<float>& optimizer() { return opt_; }
  const std::vector<std::string>& trainable() const { return trainable_; }

  void freeze_encoder() {
    std::vector<std::string> keep;
    for (const auto& n : train_.param_names())
      if (n.rfind("pi/enc/", 0) != 0) keep.push_back(n);
    trainable_ = keep;
  }

  void sync_rollout() { roll_.copy_params_from(train_); }

  // One optimizer step from precomputed grads restricted to trainable params.
  bool apply(std::map<std::string, Array<float>>& grads) {
    std::map<std::string, Array<float>> filtered;
    for (const auto& n : trainable_) filtered[n] = std::move(grads.at(n));
    return opt_.step(train_, filtered);
  }

  void export_tensors(std::map<std::string, Array<float>>& out) const {
    auto& self = const_cast<PolicyModel&>(*this);
    for (const auto& n : self.train_.param_names()) out[n] = self.train_.param_value(n);
    out["meta/arch"] = Array<float>({12}, spec_.serialize());
    for (auto& [n, slotv] : self.opt_.slots()) {
      if (slotv.m.shape.empty()) continue;
      out["opt/" + n + "/m"] = slotv.m;
      out["opt/" + n + "/v"] = slotv.v;
    }
    out["opt/pi/t"] = Array<float>({1}, {static_cast<float>(opt_.steps())});
  }

  void import_tensors(const std::map<std::string, Array<float>>& in, bool with_optimizer) {
    for (const auto& n : train_.param_names()) {
      auto it = in.find(n);
      gf::ad::check(it != in.end(), "checkpoint missing tensor " + n);
      gf::ad::check(it->second.shape == train_.param_value(n).shape,
                    "checkpoint shape mismatch for " + n);
      train_.param_value(n).data = it->second.data;
    }
    if (with_optimizer) {
      for (const auto& n : train_.param_names()) {
        auto m = in.find("opt/" + n + "/m");
        auto v = in.find("opt/" + n + "/v");
        if (m != in.end() && v != in.end()) {
          opt_.slots()[n].m = m->second;
          opt_.slots()[n].v = v->second;
        }
      }
      auto tt = in.find("opt/pi/t");
      if (tt != in.end()) opt_.step_counter() = static_cast<long>(tt->second.data[0]);
    }
    sync_rollout();
  }

 private:
  ArchSpec spec_;
  Tape<float> train_;
  Tape<float> roll_;
  std::vector<InputSlot> slots_;
  std::vector<std::string> trainable_;
  gf::ad::AdamOptimizer<float> opt_;
};

// Critic: 2 hidden tanh layers over the privileged observation.
class CriticModel {
 public:
  CriticModel(int in_dim, uint64_t init_seed, double step_size = 1e-4,
              double max_grad_norm = 1.0, int hidden = 512)
      : in_dim_(in_dim), opt_(step_size, 0.9, 0.999, 1e-8, max_grad_norm) {
    gf::Rng rng(gf::Rng::derive(init_seed, 0xC417));
    build(train_, rng, true, hidden);
    gf::Rng rng2(gf::Rng::derive(init_seed, 0xC417));
    build(eval_, rng2, false, hidden);
    sync_eval();
  }

  int input_dim() const { return in_dim_; }
  Tape<float>& train_tape() { return train_; }
  Tape<float>& eval_tape() { return eval_; }
  gf::ad::AdamOptimizer<float>& optimizer() { return opt_; }
  void sync_eval() { eval_.copy_params_from(train_); }

  // Batched values from the eval snapshot.
  std::vector<float> values(const Array<float>& priv) {
    auto out = eval_.forward({{"priv", priv}});
    return out.at("value").data;
  }

  void export_tensors(std::map<std::string, Array<float>>& out) const {
    auto& self = const_cast<CriticModel&>(*this);
    for (const auto& n : self.train_.param_names()) out[n] = self.train_.param_value(n);
    for (auto& [n, slotv] : self.opt_.slots()) {
      if (slotv.m.shape.empty()) continue;
      out["opt/" + n + "/m"] = slotv.m;
      out["opt/" + n + "/v"] = slotv.v;
    }
    out["opt/vf/t"] = Array<float>({1}, {static_cast<float>(opt_.steps())});
  }

  void import_tensors(const std::map<std::string, Array<float>>& in, bool with_optimizer) {
    for (const auto& n : train_.param_names()) {
      auto it = in.find(n);
      gf::ad::check(it != in.end(), "checkpoint missing tensor " + n);
      train_.param_value(n).data = it->second.data;
    }
    if (with_optimizer) {
      for (const auto& n : train_.param_names()) {
        auto m = in.find("opt/" + n + "/m");
        auto v = in.find("opt/" + n + "/v");
        if (m != in.end() && v != in.end()) {
          opt_.slots()[n].m = m->second;
          opt_.slots()[n].v = v->second;
        }
      }
      auto tt = in.find("opt/vf/t");
      if (tt != in.end()) opt_.step_counter() = static_cast<long>(tt->second.data[0]);
    }
    sync_eval();
  }

 private:
  void build(Tape<float>& t, gf::Rng& rng, bool with_loss, int hidden) {
    using gf::ad::orthogonal_init;
    auto x = t.input("priv", {in_dim_});
    auto w1 = t.param("vf/w1", orthogonal_init<float>(in_dim_, hidden, 1.0, rng));
    auto b1 = t.param("vf/b1", Array<float>({hidden}));
    auto h1 = t.tanh_(t.add_bias(t.matmul(x, w1), b1));
    auto w2 = t.param("vf/w2", orthogonal_init<float>(hidden, hidden, 1.0, rng));
    auto b2 = t.param("vf/b2", Array<float>({hidden}));
    auto h2 = t.tanh_(t.add_bias(t.matmul(h1, w2), b2));
    auto w3 = t.param("vf/w3", orthogonal_init<float>(hidden, 1, 0.01, rng));
    auto b3 = t.param("vf/b3", Array<float>({1}));
    auto v = t.add_bias(t.matmul(h2, w3), b3);
    t.mark_output("value", v);
    if (with_loss) {
      auto target = t.input("vtarget", {1});
      t.mark_output("loss", t.mean_all(t.square(t.sub(v, target))));
    }
  }

  int in_dim_;
  Tape<float> train_;
  Tape<float> eval_;
  gf::ad::AdamOptimizer<float> opt_;
};

// ArchSpec matching an env configuration.
inline ArchSpec arch_for_env(const gf::env::EnvConfig& cfg, Variant v) {
  ArchSpec s;
  s.variant = v;
  s.cmd_dim = cfg.command_dim();
  s.preview_dim = cfg.preview_dim();
  return s;
}

}  // namespace gf::nets
