#include <catch2/catch.hpp>

#include "gaitforge/ad/checkpoint.hpp"
#include "gaitforge/nets/policy.hpp"
#include "gaitforge/rl/rollout.hpp"

#include <filesystem>

using gf::Rng;
using gf::ad::Array;
using gf::env::EnvConfig;
using gf::env::ObsBundle;
using gf::nets::ArchSpec;
using gf::nets::CriticModel;
using gf::nets::GaussianHead;
using gf::nets::PolicyModel;
using gf::nets::Variant;

namespace {

ObsBundle zero_bundle(const ArchSpec& s) {
  ObsBundle b;
  b.command.assign(s.cmd_dim, 0.0f);
  b.preview.assign(s.preview_dim, 0.0f);
  b.obs_now.assign(s.obs_dim, 0.0f);
  b.short_pairs.assign(s.short_len * (s.obs_dim + s.act_dim), 0.0f);
  b.short_obs.assign(s.short_len * s.obs_dim, 0.0f);
  b.long_cnn.assign((s.obs_dim + s.act_dim) * s.long_len, 0.0f);
  b.long_obs_cnn.assign(s.obs_dim * s.long_len, 0.0f);
  b.params_vec.assign(s.params_dim, 0.0f);
  return b;
}

}  // namespace

TEST_CASE("encoder latent has the spec dimension 144 for the default config") {
  ArchSpec s;
  REQUIRE(s.encoder_len1() == 21);
  REQUIRE(s.encoder_len2() == 9);
  REQUIRE(s.latent_dim() == 144);
  PolicyModel m(s, 1);
  auto in = gf::rl::batch_from_bundles(m, {zero_bundle(s)});
  auto out = m.rollout_tape().forward(in);
  REQUIRE(out.at("latent").shape == std::vector<int>{1, 144});
  REQUIRE(out.at("mean").shape == std::vector<int>{1, 4});
}

TEST_CASE("appendix-style history lengths keep a valid encoder") {
  for (int len : {33, 66, 99, 132}) {
    ArchSpec s;
    s.long_len = len;
    REQUIRE(s.encoder_len2() >= 1);
    PolicyModel m(s, 2);
    ObsBundle b = zero_bundle(s);
    auto out = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {b}));
    REQUIRE(out.at("latent").shape[1] == s.latent_dim());
  }
}

TEST_CASE("all-zero history with zero biases gives a constant zero latent") {
  ArchSpec s;
  PolicyModel m(s, 3);
  auto out = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {zero_bundle(s)}));
  for (float v : out.at("latent").data) REQUIRE(v == 0.0f);  // relu(conv(0) + 0)
}

TEST_CASE("shifting the history by one step changes the latent") {
  ArchSpec s;
  PolicyModel m(s, 4);
  Rng rng(5);
  ObsBundle b = zero_bundle(s);
  for (auto& v : b.long_cnn) v = static_cast<float>(rng.uniform(-1, 1));
  ObsBundle shifted = b;
  // roll every channel by one step along the time axis
  for (int c = 0; c < 15; ++c) {
    for (int k = 0; k < s.long_len - 1; ++k)
      shifted.long_cnn[c * s.long_len + k + 1] = b.long_cnn[c * s.long_len + k];
    shifted.long_cnn[c * s.long_len] = 0.0f;
  }
  auto a = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {b})).at("latent");
  auto c = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {shifted})).at("latent");
  double diff = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) diff += std::abs(a.data[i] - c.data[i]);
  REQUIRE(diff > 1e-3);
}

TEST_CASE("gaussian head: std fixed at 0.1, constant entropy, clamped samples") {
  GaussianHead head{0.1};
  REQUIRE(head.std_dev == 0.1);
  REQUIRE(head.entropy(4) ==
          Approx(4 * (0.5 * std::log(2 * M_PI * 0.01) + 0.5)).epsilon(1e-12));
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) {
    const double a = head.sample_dim(0.999, rng);
    REQUIRE(a <= 1.0);
    REQUIRE(a >= -1.0);
  }
}

TEST_CASE("zero-weight network outputs tanh(bias)") {
  ArchSpec s;
  PolicyModel m(s, 7);
  for (const auto& name : m.train_tape().param_names()) m.train_tape().param_value(name).fill(0.0f);
  auto& b3 = m.train_tape().param_value("pi/mlp/b3");
  b3.data = {0.3f, -0.7f, 0.0f, 1.2f};
  m.sync_rollout();
  auto out = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {zero_bundle(s)}));
  for (int j = 0; j < 4; ++j)
    REQUIRE(out.at("mean").data[j] == Approx(std::tanh(b3.data[j])).margin(1e-6));
}

TEST_CASE("log-probability matches the closed form and integrates to one") {
  GaussianHead head{0.1};
  const float mean[4] = {0.1f, -0.2f, 0.4f, 0.0f};
  const float a[4] = {0.15f, -0.25f, 0.38f, 0.05f};
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = a[i] - mean[i];
    expect += -d * d / (2 * 0.01) - std::log(0.1) - 0.5 * std::log(2 * M_PI);
  }
  REQUIRE(head.logp(a, mean, 4) == Approx(expect).epsilon(1e-12));
  // quadrature over a 1-D slice: the marginal density of dim 0 integrates to 1
  double rest = 0.0;
  for (int k = 1; k < 4; ++k) {
    const double d = a[k] - mean[k];
    rest += -d * d / 0.02 - std::log(0.1) - 0.5 * std::log(2 * M_PI);
  }
  const int n = 4000;
  const double lo = mean[0] - 0.8, hi = mean[0] + 0.8;
  const double h = (hi - lo) / n;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    float probe[4] = {static_cast<float>(lo + i * h), a[1], a[2], a[3]};
    const double dens = std::exp(head.logp(probe, mean, 4) - rest);
    integral += (i == 0 || i == n ? 0.5 : 1.0) * dens * h;
  }
  REQUIRE(integral == Approx(1.0).margin(1e-6));
}

TEST_CASE("zero-initialized critic returns zero for any input") {
  CriticModel c(20, 8);
  for (const auto& name : c.train_tape().param_names()) c.train_tape().param_value(name).fill(0.0f);
  c.sync_eval();
  Array<float> priv({3, 20});
  Rng rng(9);
  for (auto& v : priv.data) v = static_cast<float>(rng.uniform(-2, 2));
  for (float v : c.values(priv)) REQUIRE(v == 0.0f);
}

TEST_CASE("critic trained on a constant-reward stream reaches r/(1-gamma) within 5%") {
  const double r = 0.5, gamma = 0.98, lam = 0.95;
  const double target = r / (1.0 - gamma);  // 25
  CriticModel critic(4, 10, /*step_size=*/1e-3);
  Array<float> x({1, 4}, {0.5f, -0.25f, 1.0f, 0.0f});
  const int T = 256;
  for (int iter = 0; iter < 3000; ++iter) {
    const double v = critic.values(x)[0];
    // GAE on a constant-reward, never-terminating stream from one state
    std::vector<double> rew(T, r), val(T, v), boot(T, 0.0);
    std::vector<gf::rl::Boundary> bd(T, gf::rl::Boundary::kContinue);
    bd[T - 1] = gf::rl::Boundary::kTruncated;
    boot[T - 1] = v;
    const auto g = gae(rew, val, bd, boot, gamma, lam);
    Array<float> priv({1, 4}, {0.5f, -0.25f, 1.0f, 0.0f});
    Array<float> tgt({1, 1}, {static_cast<float>(g.returns[0])});
    auto out = critic.train_tape().forward({{"priv", priv}, {"vtarget", tgt}});
    auto grads = critic.train_tape().backward({{"loss", Array<float>::scalar(1.0f)}});
    critic.optimizer().step(critic.train_tape(), grads);
    critic.sync_eval();
    if (std::abs(critic.values(x)[0] - target) < 0.05 * target) break;
  }
  REQUIRE(critic.values(x)[0] == Approx(target).epsilon(0.05));
}

TEST_CASE("checkpoint restore reproduces bit-identical forward outputs") {
  ArchSpec s;
  PolicyModel m(s, 11);
  CriticModel c(gf::env::privileged_dim(EnvConfig{}), 11);
  ObsBundle b = zero_bundle(s);
  Rng rng(12);
  for (auto& v : b.long_cnn) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : b.short_pairs) v = static_cast<float>(rng.uniform(-1, 1));
  const auto before = m.rollout_tape().forward(gf::rl::batch_from_bundles(m, {b})).at("mean");

  std::map<std::string, Array<float>> tensors;
  m.export_tensors(tensors);
  c.export_tensors(tensors);
  const auto path = std::filesystem::temp_directory_path() / "gf_policy_ckpt.bin";
  gf::ad::save_checkpoint(path.string(), tensors);
  const auto loaded = gf::ad::load_checkpoint(path.string());

  const ArchSpec restored_spec = ArchSpec::deserialize(loaded.at("meta/arch").data);
  REQUIRE(restored_spec.long_len == s.long_len);
  PolicyModel m2(restored_spec, 999);  // different init seed; weights overwritten
  m2.import_tensors(loaded, true);
  const auto after = m2.rollout_tape().forward(gf::rl::batch_from_bundles(m2, {b})).at("mean");
  REQUIRE(before.data == after.data);
  std::filesystem::remove(path);
}

TEST_CASE("non-finite policy input is rejected with the block name") {
  ArchSpec s;
  PolicyModel m(s, 13);
  ObsBundle b = zero_bundle(s);
  b.preview[3] = std::numeric_limits<float>::quiet_NaN();
  REQUIRE_THROWS_WITH(gf::rl::batch_from_bundles(m, {b}), Catch::Contains("preview"));
}

TEST_CASE("variant wiring: dual vs long-only differ by the short block only") {
  ArchSpec dual;
  ArchSpec lo;
  lo.variant = Variant::kLongOnly;
  REQUIRE(gf::nets::detail::input_dim(dual) - gf::nets::detail::input_dim(lo) ==
          4 * 15 - 11);  // short pairs replaced by the latest observation
  ArchSpec sh;
  sh.variant = Variant::kShortOnly;
  REQUIRE(gf::nets::detail::input_dim(dual) - gf::nets::detail::input_dim(sh) == 144);
  ArchSpec ex;
  ex.variant = Variant::kExpert;
  REQUIRE(gf::nets::detail::input_dim(ex) ==
          2 + 12 + 60 + 8);  // extrinsics vector is 8-D
}
