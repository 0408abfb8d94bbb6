#include <catch2/catch.hpp>

#include "gaitforge/ad/rng.hpp"
#include "gaitforge/sim/biped.hpp"

using gf::Rng;
using gf::sim::DynamicsParams;
using gf::sim::PlanarBiped;
using gf::sim::RobotState;
using gf::sim::Terrain;
using gf::sim::Vec7;

namespace {

Vec7 random_q(Rng& rng) {
  Vec7 q;
  q << rng.uniform(-1, 1), rng.uniform(0.5, 1.5), rng.uniform(-0.6, 0.6),
      rng.uniform(-1.0, 1.2), rng.uniform(-1.6, 0.3), rng.uniform(-1.0, 1.2),
      rng.uniform(-1.6, 0.3);
  return q;
}

Vec7 random_qd(Rng& rng, double scale = 2.0) {
  Vec7 qd;
  for (int i = 0; i < 7; ++i) qd[i] = rng.uniform(-scale, scale);
  return qd;
}

// Numerical CoM velocity: central difference of the position map along qd.
double kinetic_energy_from_link_frames(const PlanarBiped& b, const Vec7& q, const Vec7& qd) {
  const double eps = 1e-6;
  const auto& p = b.params();
  double t = 0.0;
  for (int link = 0; link < 5; ++link) {
    const auto cp = b.link_com(q + eps * qd, link);
    const auto cm = b.link_com(q - eps * qd, link);
    const Eigen::Vector2d vel = (cp - cm) / (2.0 * eps);
    t += 0.5 * p.mass[link] * vel.squaredNorm();
  }
  // segment angular rates are linear in qd
  const auto dofs = PlanarBiped::seg_dofs();
  const int seg_of_link[5] = {0, 1, 2, 3, 4};
  for (int link = 0; link < 5; ++link) {
    double w = 0.0;
    for (int a : dofs[seg_of_link[link]])
      if (a >= 0) w += qd[a];
    t += 0.5 * p.inertia[link] * w * w;
  }
  return t;
}

}  // namespace

TEST_CASE("mass matrix is symmetric positive definite at random states") {
  DynamicsParams p;
  PlanarBiped b(p);
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const Vec7 q = random_q(rng);
    const auto m = b.mass_matrix(q);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) REQUIRE(std::abs(m(r, c) - m(c, r)) < 1e-12);
    Eigen::LLT<gf::sim::Mat7> llt(m);
    REQUIRE(llt.info() == Eigen::Success);
  }
}

TEST_CASE("half qd' M qd equals kinetic energy from link frame velocities") {
  DynamicsParams p;
  p.com_perp[0] = 0.03;  // exercise the lateral CoM terms too
  PlanarBiped b(p);
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const Vec7 q = random_q(rng);
    const Vec7 qd = random_qd(rng);
    const double t_m = 0.5 * qd.dot(b.mass_matrix(q) * qd);
    const double t_k = kinetic_energy_from_link_frames(b, q, qd);
    REQUIRE(t_m == Approx(t_k).epsilon(1e-6));
  }
}

TEST_CASE("doubling all masses and inertias doubles the mass matrix") {
  DynamicsParams p;
  PlanarBiped b1(p);
  DynamicsParams p2 = p;
  for (auto& m : p2.mass) m *= 2.0;
  for (auto& i : p2.inertia) i *= 2.0;
  PlanarBiped b2(p2);
  Rng rng(43);
  const Vec7 q = random_q(rng);
  const auto m1 = b1.mass_matrix(q);
  const auto m2 = b2.mass_matrix(q);
  REQUIRE((m2 - 2.0 * m1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bias at rest with relaxed springs is gravity only") {
  DynamicsParams p;
  PlanarBiped b(p);
  Vec7 q = Vec7::Zero();
  q[1] = 1.0;
  q[4] = p.knee_spring_rest;  // zero spring deflection
  q[6] = p.knee_spring_rest;
  const Vec7 bias = b.bias_forces(q, Vec7::Zero());
  REQUIRE(bias[0] == Approx(0.0).margin(1e-12));  // gravity acts vertically
  double total_mass = 0.0;
  for (double m : p.mass) total_mass += m;
  REQUIRE(bias[1] == Approx(total_mass * p.gravity).epsilon(1e-12));
}

TEST_CASE("knee spring contributes -k*deflection at the knee rows") {
  DynamicsParams p;
  p.gravity = 0.0;
  PlanarBiped b(p);
  Vec7 q = Vec7::Zero();
  const double delta = 0.3;
  q[4] = p.knee_spring_rest + delta;
  q[6] = p.knee_spring_rest;
  const Vec7 bias = b.bias_forces(q, Vec7::Zero());
  REQUIRE(bias[4] == Approx(p.knee_spring_k[0] * delta).epsilon(1e-12));
  REQUIRE(std::abs(bias[6]) < 1e-12);
}

TEST_CASE("work-energy balance holds in damped contact-free fall") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  Rng rng(44);
  Vec7 q = random_q(rng);
  q[1] = 40.0;  // far above ground, stays contact-free
  Vec7 qd = random_qd(rng);
  const std::array<double, 4> tau{3.0, -2.0, 1.0, 0.5};
  const Eigen::Vector3d ext(0, 0, 0);
  const double dt = 1e-5;
  // advance to t and t +/- dt with a high-order scheme to measure dE/dt
  auto deriv = [&](const Vec7& qq, const Vec7& qqd) { return b.acceleration(qq, qqd, tau, flat, ext); };
  auto rk4 = [&](Vec7& qq, Vec7& qqd, double h) {
    const Vec7 k1q = qqd, k1v = deriv(qq, qqd);
    const Vec7 k2q = qqd + 0.5 * h * k1v, k2v = deriv(qq + 0.5 * h * k1q, qqd + 0.5 * h * k1v);
    const Vec7 k3q = qqd + 0.5 * h * k2v, k3v = deriv(qq + 0.5 * h * k2q, qqd + 0.5 * h * k2v);
    const Vec7 k4q = qqd + h * k3v, k4v = deriv(qq + h * k3q, qqd + h * k3v);
    qq += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    qqd += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  };
  auto power = [&](const Vec7& qq, const Vec7& qqd) {
    double w = 0.0;
    for (int j = 0; j < 4; ++j) w += qqd[3 + j] * (tau[j] - p.joint_damping[j] * qqd[3 + j]);
    return w;
  };
  for (int i = 0; i < 20; ++i) {
    // one dt step via two RK4 half-steps; Simpson work over the same step
    Vec7 qm = q, qdm = qd;
    rk4(qm, qdm, 0.5 * dt);
    Vec7 qe = qm, qde = qdm;
    rk4(qe, qde, 0.5 * dt);
    const double de = b.energy(qe, qde) - b.energy(q, qd);
    const double work = dt / 6.0 * (power(q, qd) + 4.0 * power(qm, qdm) + power(qe, qde));
    REQUIRE(std::abs(de - work) < 1e-6 * std::max({std::abs(de), std::abs(work), 1e-9}));
    q = qe;
    qd = qde;
  }
}

TEST_CASE("foot above terrain produces an all-zero contact report") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  Vec7 q = Vec7::Zero();
  q[1] = 1.2;
  q[4] = q[6] = -0.3;
  const auto rep = b.contact_forces(q, Vec7::Zero(), flat);
  for (const auto& c : rep) {
    REQUIRE_FALSE(c.in_contact);
    REQUIRE(c.fz == 0.0);
    REQUIRE(c.ft == 0.0);
    REQUIRE(c.penetration == 0.0);
  }
}

TEST_CASE("static equilibrium penetration carries the weight share within friction") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  double total_mass = 0.0;
  for (double m : p.mass) total_mass += m;
  const double pstar = 0.5 * total_mass * p.gravity / p.ground_k;
  // symmetric stance, feet penetrated by pstar
  Vec7 q = Vec7::Zero();
  q[3] = q[5] = gf::sim::kStandHip;
  q[4] = q[6] = gf::sim::kStandKnee;
  q[1] = gf::sim::kStandHeight - pstar;
  const auto rep = b.contact_forces(q, Vec7::Zero(), flat);
  const double fz_total = rep[0].fz + rep[1].fz;
  REQUIRE(fz_total == Approx(total_mass * p.gravity).epsilon(1e-9));
  for (const auto& c : rep) {
    REQUIRE(c.fz == Approx(p.ground_k * pstar).epsilon(1e-9));
    REQUIRE(std::abs(c.ft) <= p.friction * c.fz);
  }
}

TEST_CASE("reversing tangential velocity flips the tangential force exactly") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  Vec7 q = Vec7::Zero();
  q[3] = q[5] = gf::sim::kStandHip;
  q[4] = q[6] = gf::sim::kStandKnee;
  q[1] = gf::sim::kStandHeight - 1e-3;
  Vec7 qd = Vec7::Zero();
  qd[0] = 0.07;
  const auto fwd = b.contact_forces(q, qd, flat);
  qd[0] = -0.07;
  const auto bwd = b.contact_forces(q, qd, flat);
  REQUIRE(fwd[0].ft == Approx(-bwd[0].ft).epsilon(1e-12));
  REQUIRE(fwd[0].ft < 0.0);
}

TEST_CASE("near-equilibrium hold: straight legs under PD barely move") {
  DynamicsParams p;
  p.knee_spring_rest = 0.0;  // spring relaxed in the straight-leg pose
  PlanarBiped b(p);
  Terrain flat;
  double total_mass = 0.0;
  for (double m : p.mass) total_mass += m;
  const double pstar = 0.5 * total_mass * p.gravity / p.ground_k;
  RobotState s;
  s.q.setZero();
  s.q[1] = 0.8 - pstar;
  const std::array<double, 4> q_des{0, 0, 0, 0};
  auto rep = b.inner_loop_step(s, q_des, flat, Eigen::Vector3d::Zero());
  REQUIRE_FALSE(rep.blowup);
  for (int j = 3; j < 7; ++j) REQUIRE(std::abs(s.q[j]) < 1e-3);
  REQUIRE(std::abs(s.q[2]) < 1e-3);
}

TEST_CASE("zero gains free fall matches an RK4 reference within 1e-3 m") {
  DynamicsParams p;
  p.kp = {0, 0, 0, 0};
  p.kd = {0, 0, 0, 0};
  p.joint_damping = {0, 0, 0, 0};
  PlanarBiped b(p);
  Terrain flat;
  Rng rng(45);
  RobotState s;
  s.q = random_q(rng);
  s.q[1] = 30.0;
  s.qd = random_qd(rng, 1.0);
  Vec7 q_ref = s.q, qd_ref = s.qd;
  const std::array<double, 4> tau{0, 0, 0, 0};
  const Eigen::Vector3d ext(0, 0, 0);
  // simulate 0.5 s with the production inner loop
  for (int step = 0; step < 17; ++step) {
    const std::array<double, 4> q_des{s.q[3], s.q[4], s.q[5], s.q[6]};
    b.inner_loop_step(s, q_des, flat, ext, step == 16 ? 40 : 60, 5e-4);
  }
  // RK4 oracle at dt=1e-4 over the same 0.5 s
  auto deriv = [&](const Vec7& qq, const Vec7& qqd) { return b.acceleration(qq, qqd, tau, flat, ext); };
  const double h = 1e-4;
  for (int i = 0; i < 5000; ++i) {
    const Vec7 k1q = qd_ref, k1v = deriv(q_ref, qd_ref);
    const Vec7 k2q = qd_ref + 0.5 * h * k1v,
               k2v = deriv(q_ref + 0.5 * h * k1q, qd_ref + 0.5 * h * k1v);
    const Vec7 k3q = qd_ref + 0.5 * h * k2v,
               k3v = deriv(q_ref + 0.5 * h * k2q, qd_ref + 0.5 * h * k2v);
    const Vec7 k4q = qd_ref + h * k3v, k4v = deriv(q_ref + h * k3q, qd_ref + h * k3v);
    q_ref += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    qd_ref += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  REQUIRE(std::abs(s.q[0] - q_ref[0]) < 1e-3);
  REQUIRE(std::abs(s.q[1] - q_ref[1]) < 1e-3);
  // the freeleg swing is a chaotic double pendulum; only a loose bound holds
  for (int j = 2; j < 7; ++j) REQUIRE(std::abs(s.q[j] - q_ref[j]) < 5e-2);
}

TEST_CASE("commanded torque far beyond the limit clamps to tau_max exactly") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  RobotState s;
  s.q.setZero();
  s.q[1] = 5.0;
  // PD torque = kp * 10 * tau_max / kp >> tau_max
  const double offset = 10.0 * p.tau_max[0] / p.kp[0];
  const std::array<double, 4> q_des{offset, offset, -offset, -offset};
  auto rep = b.inner_loop_step(s, q_des, flat, Eigen::Vector3d::Zero(), 1, 5e-4);
  REQUIRE(rep.tau_last[0] == p.tau_max[0]);
  REQUIRE(rep.tau_last[1] == p.tau_max[1]);
  REQUIRE(rep.tau_last[2] == -p.tau_max[2]);
  REQUIRE(rep.tau_last[3] == -p.tau_max[3]);
}

TEST_CASE("undamped unactuated contact-free swing conserves energy") {
  DynamicsParams p;
  p.kp = {0, 0, 0, 0};
  p.kd = {0, 0, 0, 0};
  p.joint_damping = {0, 0, 0, 0};
  PlanarBiped b(p);
  Terrain flat;
  RobotState s;
  s.q.setZero();
  s.q[1] = 12.0;
  s.q[3] = 0.8;
  s.q[5] = -0.4;
  s.q[4] = s.q[6] = -0.7;
  s.qd.setZero();
  s.qd[3] = 3.0;
  s.qd[4] = -2.0;
  s.qd[6] = 2.5;
  const double e0 = b.energy(s.q, s.qd);
  const std::array<double, 4> hold{s.q[3], s.q[4], s.q[5], s.q[6]};
  double max_drift = 0.0;
  for (int step = 0; step < 33; ++step) {  // ~1 s
    b.inner_loop_step(s, hold, flat, Eigen::Vector3d::Zero());
    max_drift = std::max(max_drift, std::abs(b.energy(s.q, s.qd) - e0));
  }
  REQUIRE(max_drift / std::abs(e0) < 0.005);
}

TEST_CASE("inner loop is deterministic") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  Rng rng(46);
  RobotState s1;
  s1.q = random_q(rng);
  s1.qd = random_qd(rng);
  RobotState s2 = s1;
  const std::array<double, 4> q_des{0.2, -0.6, 0.1, -0.4};
  b.inner_loop_step(s1, q_des, flat, Eigen::Vector3d(2, 0, 0.5));
  b.inner_loop_step(s2, q_des, flat, Eigen::Vector3d(2, 0, 0.5));
  REQUIRE(s1.q == s2.q);
  REQUIRE(s1.qd == s2.qd);
}

TEST_CASE("soft contact complementarity: positive force only while penetrating") {
  DynamicsParams p;
  PlanarBiped b(p);
  Terrain flat;
  Rng rng(47);
  for (int i = 0; i < 200; ++i) {
    Vec7 q = random_q(rng);
    q[1] = rng.uniform(0.3, 1.0);
    const auto rep = b.contact_forces(q, random_qd(rng), flat);
    for (const auto& c : rep) {
      REQUIRE(c.fz >= 0.0);
      if (c.fz > 0.0) REQUIRE(c.penetration > 0.0);
      if (!c.in_contact) REQUIRE((c.fz == 0.0 && c.ft == 0.0));
    }
  }
}
