#include <catch2/catch.hpp>

#include "gaitforge/rnd/randomize.hpp"

using gf::Rng;
using gf::rnd::RandomizationConfig;
using gf::rnd::sample_dynamics;
using gf::rnd::sample_terrain;
using gf::sim::DynamicsParams;
using gf::sim::Terrain;

TEST_CASE("randomization off returns the exact nominal params") {
  RandomizationConfig cfg;
  DynamicsParams nominal;
  Rng rng(1);
  const DynamicsParams p = sample_dynamics(cfg, nominal, rng);
  REQUIRE(p.friction == nominal.friction);
  REQUIRE(p.mass == nominal.mass);
  REQUIRE(p.kp == nominal.kp);
  REQUIRE(p.delay_steps == 0);
}

TEST_CASE("sampled friction stays in range with the uniform mean") {
  RandomizationConfig cfg;
  cfg.dynamics = true;
  DynamicsParams nominal;
  Rng rng(2);
  double sum = 0.0, lo = 1e9, hi = -1e9;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const DynamicsParams p = sample_dynamics(cfg, nominal, rng);
    sum += p.friction;
    lo = std::min(lo, p.friction);
    hi = std::max(hi, p.friction);
  }
  REQUIRE(lo >= 0.3);
  REQUIRE(hi <= 3.0);
  REQUIRE(sum / n == Approx(1.65).margin(0.02));
}

TEST_CASE("every sampled field lies inside its interval") {
  RandomizationConfig cfg;
  cfg.dynamics = true;
  DynamicsParams nominal;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const DynamicsParams p = sample_dynamics(cfg, nominal, rng);
    for (int j = 0; j < 4; ++j) {
      REQUIRE(p.joint_damping[j] >= 0.3);
      REQUIRE(p.joint_damping[j] <= 4.0);
      REQUIRE(p.kp[j] / nominal.kp[j] >= 0.7);
      REQUIRE(p.kp[j] / nominal.kp[j] <= 1.3);
      REQUIRE(std::abs(p.motor_pos_bias[j]) <= 0.002);
      REQUIRE(std::abs(p.motor_vel_bias[j]) <= 0.01);
    }
    for (int l = 0; l < 5; ++l) {
      REQUIRE(p.mass[l] / nominal.mass[l] >= 0.5);
      REQUIRE(p.mass[l] / nominal.mass[l] <= 1.5);
      REQUIRE(p.inertia[l] / nominal.inertia[l] >= 0.7);
      REQUIRE(p.inertia[l] / nominal.inertia[l] <= 1.3);
    }
    REQUIRE(std::abs(p.com_along[0] - nominal.com_along[0]) <= 0.1);
    REQUIRE(std::abs(p.com_along[1] - nominal.com_along[1]) <= 0.05);
    REQUIRE(std::abs(p.pitch_bias) <= 0.002);
    REQUIRE(std::abs(p.linvel_bias[0]) <= 0.04);
    REQUIRE((p.delay_steps == 0 || p.delay_steps == 1));
    for (int k = 0; k < 2; ++k) {
      REQUIRE(p.knee_spring_k[k] / nominal.knee_spring_k[k] >= 0.8);
      REQUIRE(p.knee_spring_k[k] / nominal.knee_spring_k[k] <= 1.2);
    }
  }
}

TEST_CASE("PD gain factors are independent across joints") {
  RandomizationConfig cfg;
  cfg.dynamics = true;
  DynamicsParams nominal;
  Rng rng(4);
  const int n = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const DynamicsParams p = sample_dynamics(cfg, nominal, rng);
    const double x = p.kp[0] / nominal.kp[0];
    const double y = p.kp[1] / nominal.kp[1];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double corr = (n * sxy - sx * sy) /
                      std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  REQUIRE(std::abs(corr) < 0.05);
}

TEST_CASE("sampling is reproducible from the seed") {
  RandomizationConfig cfg;
  cfg.dynamics = true;
  DynamicsParams nominal;
  Rng a(77), b(77);
  for (int i = 0; i < 10; ++i) {
    const DynamicsParams pa = sample_dynamics(cfg, nominal, a);
    const DynamicsParams pb = sample_dynamics(cfg, nominal, b);
    REQUIRE(pa.friction == pb.friction);
    REQUIRE(pa.mass == pb.mass);
    REQUIRE(pa.kp == pb.kp);
    REQUIRE(pa.delay_steps == pb.delay_steps);
  }
}

TEST_CASE("params vector is normalized to [-1, 1]") {
  RandomizationConfig cfg;
  cfg.dynamics = true;
  DynamicsParams nominal;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const DynamicsParams p = sample_dynamics(cfg, nominal, rng);
    const auto v = gf::rnd::params_vector(cfg, p, nominal);
    REQUIRE(static_cast<int>(v.size()) == gf::rnd::kParamsVectorDim);
    for (float x : v) {
      REQUIRE(x >= -1.0f - 1e-5f);
      REQUIRE(x <= 1.0f + 1e-5f);
    }
  }
}

TEST_CASE("flat terrain is zero everywhere") {
  Terrain t;
  for (double x : {-3.0, 0.0, 1.7, 12.0}) REQUIRE(t.height(x) == 0.0);
}

TEST_CASE("slope terrain rises by tan(angle) per meter") {
  Terrain t;
  t.kind = Terrain::Kind::kSlope;
  t.origin = 0.0;
  t.slope = std::tan(10.0 * M_PI / 180.0);
  REQUIRE(t.height(1.0) - t.height(0.0) == Approx(std::tan(10.0 * M_PI / 180.0)));
}

TEST_CASE("stairs are monotonically non-decreasing") {
  RandomizationConfig cfg;
  cfg.terrain = true;
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Terrain t = sample_terrain(cfg, rng);
    if (t.kind != Terrain::Kind::kStairs) continue;
    double prev = -1e9;
    for (double x = -1.0; x < 6.0; x += 0.01) {
      const double h = t.height(x);
      REQUIRE(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("terrain families respect the configured bounds") {
  RandomizationConfig cfg;
  cfg.terrain = true;
  Rng rng(7);
  bool saw[4] = {false, false, false, false};
  for (int trial = 0; trial < 300; ++trial) {
    Terrain t = sample_terrain(cfg, rng);
    switch (t.kind) {
      case Terrain::Kind::kWave:
        saw[0] = true;
        REQUIRE(t.amplitude <= cfg.max_wave_amplitude);
        break;
      case Terrain::Kind::kSlope:
        saw[1] = true;
        REQUIRE(std::abs(std::atan(t.slope)) <= cfg.max_slope_deg * M_PI / 180.0 + 1e-9);
        break;
      case Terrain::Kind::kStairs:
        saw[2] = true;
        REQUIRE(t.step_height <= cfg.max_step_height);
        break;
      case Terrain::Kind::kSteps:
        saw[3] = true;
        for (double c : t.cells) REQUIRE(std::abs(c) <= cfg.max_step_height);
        break;
      default:
        FAIL("flat terrain sampled");
    }
  }
  REQUIRE((saw[0] && saw[1] && saw[2] && saw[3]));
}

TEST_CASE("perturbation: disabled gives a zero wrench always") {
  gf::rnd::PerturbationSchedule sched;  // disabled by default
  gf::rnd::PerturbationProcess proc(sched, Rng(8));
  for (double t = 0; t < 20.0; t += 0.03) REQUIRE(proc.at(t) == Eigen::Vector3d::Zero());
}

TEST_CASE("perturbation windows respect force bounds and per-skill durations") {
  for (auto skill : {gf::ref::Skill::kWalk, gf::ref::Skill::kRun}) {
    auto sched = gf::rnd::PerturbationSchedule::for_skill(skill, true);
    REQUIRE(sched.enabled);
    const double hi = skill == gf::ref::Skill::kWalk ? 3.0 : 1.0;
    gf::rnd::PerturbationProcess proc(sched, Rng(9 + static_cast<int>(skill)));
    const double dt = 0.002;
    bool active = false;
    double window_start = 0.0;
    int windows = 0;
    for (double t = 0; t < 60.0; t += dt) {
      const Eigen::Vector3d w = proc.at(t);
      REQUIRE(std::abs(w[0]) <= 20.0);
      REQUIRE(std::abs(w[1]) <= 20.0);
      REQUIRE(std::abs(w[2]) <= 5.0);
      const bool now_active = w.norm() > 0.0;
      if (now_active != active) {
        if (t > 0.5) {  // skip the initial partial window
          const double dur = t - window_start;
          REQUIRE(dur >= 0.1 - 2 * dt);
          REQUIRE(dur <= hi + 2 * dt);
          ++windows;
        }
        window_start = t;
        active = now_active;
      }
    }
    REQUIRE(windows > 10);
  }
}

TEST_CASE("jumping and standing never get perturbation") {
  REQUIRE_FALSE(gf::rnd::PerturbationSchedule::for_skill(gf::ref::Skill::kJump, true).enabled);
  REQUIRE_FALSE(gf::rnd::PerturbationSchedule::for_skill(gf::ref::Skill::kStand, true).enabled);
}
