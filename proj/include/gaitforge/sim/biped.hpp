#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "gaitforge/sim/params.hpp"
#include "gaitforge/sim/terrain.hpp"

namespace gf::sim {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Vec2 = Eigen::Vector2d;

// Generalized coordinates:
//   q = [base x, base z, pitch, hip L, knee L, hip R, knee R]
// Base (x, z) is the pelvis point where both thighs attach; the torso link
// extends upward from it. All joint angles are relative to the parent link;
// legs hang straight down at zero joint angles.
struct RobotState {
  Vec7 q = Vec7::Zero();
  Vec7 qd = Vec7::Zero();

  bool finite() const { return q.allFinite() && qd.allFinite(); }
};

struct ContactReport {
  double fz = 0.0;           // normal force, >= 0
  double ft = 0.0;           // tangential force
  double penetration = 0.0;  // > 0 while in contact
  bool in_contact = false;
};

struct InnerLoopReport {
  std::array<double, 2> peak_fz{0.0, 0.0};          // per foot, max over substeps
  std::array<ContactReport, 2> contact;             // at the final substep
  std::array<double, 4> tau_rms{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> tau_last{0.0, 0.0, 0.0, 0.0};
  bool blowup = false;
};

class PlanarBiped {
 public:
  static constexpr int kNq = 7;
  static constexpr int kNa = 4;
  static constexpr double kInnerDt = 5e-4;  // 2 kHz
  static constexpr int kSubsteps = 60;      // policy period 30 ms (~33.3 Hz)

  // Five rigid segments; each has one absolute angle built from pitch plus
  // the joint angles along its chain.
  enum Seg { kSegTorso = 0, kSegLThigh, kSegLShank, kSegRThigh, kSegRShank };

  explicit PlanarBiped(const DynamicsParams& p) : p_(p) { rebuild(); }

  const DynamicsParams& params() const { return p_; }
  void set_params(const DynamicsParams& p) {
    p_ = p;
    rebuild();
  }

  // ---- kinematics ------------------------------------------------------

  struct Kin {
    std::array<double, 5> ang;        // segment absolute angles
    std::array<double, 5> angd;       // segment angular rates
    std::array<Vec2, 5> u, v;         // frame axes: u = along, v = lateral
  };

  Kin kin(const Vec7& q, const Vec7& qd) const {
    Kin k;
    k.ang = {q[2], q[2] + q[3], q[2] + q[3] + q[4], q[2] + q[5], q[2] + q[5] + q[6]};
    k.angd = {qd[2], qd[2] + qd[3], qd[2] + qd[3] + qd[4], qd[2] + qd[5],
              qd[2] + qd[5] + qd[6]};
    for (int s = 0; s < 5; ++s) {
      k.u[s] = Vec2(-std::sin(k.ang[s]), std::cos(k.ang[s]));
      k.v[s] = Vec2(std::cos(k.ang[s]), std::sin(k.ang[s]));
    }
    return k;
  }

  // q indices that rotate each segment (besides base translation).
  static const std::array<std::array<int, 3>, 5>& seg_dofs() {
    static const std::array<std::array<int, 3>, 5> d{{{2, -1, -1},
                                                      {2, 3, -1},
                                                      {2, 3, 4},
                                                      {2, 5, -1},
                                                      {2, 5, 6}}};
    return d;
  }

  std::array<Vec2, 2> foot_positions(const Vec7& q) const {
    Kin k = kin(q, Vec7::Zero());
    const Vec2 base(q[0], q[1]);
    return {base - p_.length[kLThigh] * k.u[kSegLThigh] - p_.length[kLShank] * k.u[kSegLShank],
            base - p_.length[kRThigh] * k.u[kSegRThigh] - p_.length[kRShank] * k.u[kSegRShank]};
  }

  std::array<Vec2, 2> knee_positions(const Vec7& q) const {
    Kin k = kin(q, Vec7::Zero());
    const Vec2 base(q[0], q[1]);
    return {base - p_.length[kLThigh] * k.u[kSegLThigh],
            base - p_.length[kRThigh] * k.u[kSegRThigh]};
  }

  std::array<Vec2, 2> foot_velocities(const Vec7& q, const Vec7& qd) const {
    Eigen::Matrix<double, 2, 7> j;
    std::array<Vec2, 2> out;
    Kin k = kin(q, qd);
    for (int f = 0; f < 2; ++f) {
      foot_jacobian(k, f, j);
      out[f] = j * qd;
    }
    return out;
  }

  // ---- dynamics ----------------------------------------------------------

  Mat7 mass_matrix(const Vec7& q) const {
    Kin k = kin(q, Vec7::Zero());
    Mat7 m = Mat7::Zero();
    Eigen::Matrix<double, 2, 7> jv;
    for (int link = 0; link < 5; ++link) {
      com_jacobian(k, link, jv);
      m.noalias() += p_.mass[link] * jv.transpose() * jv;
      const auto& dofs = seg_dofs()[com_seg_of_link(link)];
      for (int a : dofs) {
        if (a < 0) continue;
        for (int b : dofs) {
          if (b < 0) continue;
          m(a, b) += p_.inertia[link];
        }
      }
    }
    return m;
  }

  // Coriolis/centrifugal + gravity - passive knee spring torques.
  Vec7 bias_forces(const Vec7& q, const Vec7& qd) const {
    Kin k = kin(q, qd);
    Vec7 b = Vec7::Zero();
    Eigen::Matrix<double, 2, 7> jv;
    for (int link = 0; link < 5; ++link) {
      com_jacobian(k, link, jv);
      // centripetal CoM acceleration with qdd = 0
      Vec2 acc = Vec2::Zero();
      for (const Term& t : terms_[link]) {
        const double wd = k.angd[t.seg];
        acc += (-t.a * k.u[t.seg] - t.b * k.v[t.seg]) * wd * wd;
      }
      b.noalias() += p_.mass[link] * (jv.transpose() * acc);
      // gravity: d V / d q, V = sum m g z_com
      for (int col = 0; col < 7; ++col) b[col] += p_.mass[link] * p_.gravity * jv(1, col);
    }
    // passive knee springs enter with opposite sign (they are an input)
    b[4] += p_.knee_spring_k[0] * (q[4] - p_.knee_spring_rest);
    b[6] += p_.knee_spring_k[1] * (q[6] - p_.knee_spring_rest);
    return b;
  }

  std::array<ContactReport, 2> contact_forces(const Vec7& q, const Vec7& qd,
                                              const Terrain& terrain) const {
    std::array<ContactReport, 2> out;
    Kin k = kin(q, qd);
    Eigen::Matrix<double, 2, 7> j;
    for (int f = 0; f < 2; ++f) {
      foot_jacobian(k, f, j);
      const Vec2 base(q[0], q[1]);
      const Vec2 pos = f == 0 ? base - p_.length[kLThigh] * k.u[kSegLThigh] -
                                    p_.length[kLShank] * k.u[kSegLShank]
                              : base - p_.length[kRThigh] * k.u[kSegRThigh] -
                                    p_.length[kRShank] * k.u[kSegRShank];
      const Vec2 vel = j * qd;
      out[f] = point_contact(pos, vel, terrain);
    }
    return out;
  }

  // Generalized acceleration under the given motor torques and external
  // pelvis wrench (fx, fz, pitch torque). Used by the inner loop and by
  // reference integrators in tests.
  Vec7 acceleration(const Vec7& q, const Vec7& qd, const std::array<double, 4>& tau,
                    const Terrain& terrain, const Eigen::Vector3d& ext,
                    std::array<ContactReport, 2>* contact_out = nullptr) const {
    Kin k = kin(q, qd);
    Vec7 rhs = -bias_forces(q, qd);
    for (int j = 0; j < 4; ++j) rhs[3 + j] += tau[j] - p_.joint_damping[j] * qd[3 + j];
    rhs[0] += ext[0];
    rhs[1] += ext[1];
    rhs[2] += ext[2];
    Eigen::Matrix<double, 2, 7> jf;
    for (int f = 0; f < 2; ++f) {
      foot_jacobian(k, f, jf);
      const Vec2 base(q[0], q[1]);
      const Vec2 pos = f == 0 ? base - p_.length[kLThigh] * k.u[kSegLThigh] -
                                    p_.length[kLShank] * k.u[kSegLShank]
                              : base - p_.length[kRThigh] * k.u[kSegRThigh] -
                                    p_.length[kRShank] * k.u[kSegRShank];
      const Vec2 vel = jf * qd;
      const ContactReport c = point_contact(pos, vel, terrain);
      if (contact_out) (*contact_out)[f] = c;
      if (c.in_contact) rhs.noalias() += jf.transpose() * Vec2(c.ft, c.fz);
    }
    const Eigen::LLT<Mat7> llt(mass_matrix(q));
    // the mass matrix is PD by construction; a Cholesky failure is fatal
    gf::ad::check(llt.info() == Eigen::Success, "mass matrix Cholesky failed");
    return llt.solve(rhs);
  }

  // One policy step of the inner 2 kHz loop: per-substep PD torques with
  // clamping, contact, and a symplectic update (trapezoidal position rule so
  // ballistic trajectories integrate exactly).
  InnerLoopReport inner_loop_step(RobotState& s, const std::array<double, 4>& q_des,
                                  const Terrain& terrain, const Eigen::Vector3d& ext,
                                  int n_sub = kSubsteps, double dt = kInnerDt) const {
    InnerLoopReport rep;
    std::array<double, 4> tau;
    std::array<ContactReport, 2> contact;
    std::array<double, 4> tau_sq{0, 0, 0, 0};
    for (int sub = 0; sub < n_sub; ++sub) {
      for (int j = 0; j < 4; ++j) {
        const double raw = p_.kp[j] * (q_des[j] - s.q[3 + j]) - p_.kd[j] * s.qd[3 + j];
        tau[j] = std::min(p_.tau_max[j], std::max(-p_.tau_max[j], raw));
        tau_sq[j] += tau[j] * tau[j];
      }
      const Vec7 qdd = acceleration(s.q, s.qd, tau, terrain, ext, &contact);
      const Vec7 qd_new = s.qd + dt * qdd;
      s.q += dt * 0.5 * (s.qd + qd_new);
      s.qd = qd_new;
      if (!s.finite()) {
        rep.blowup = true;
        break;
      }
      for (int f = 0; f < 2; ++f) rep.peak_fz[f] = std::max(rep.peak_fz[f], contact[f].fz);
    }
    rep.contact = contact;
    rep.tau_last = tau;
    for (int j = 0; j < 4; ++j) rep.tau_rms[j] = std::sqrt(tau_sq[j] / n_sub);
    return rep;
  }

  // Kinetic + potential (gravity and knee springs) energy.
  double energy(const Vec7& q, const Vec7& qd) const {
    const double t = 0.5 * qd.dot(mass_matrix(q) * qd);
    Kin k = kin(q, Vec7::Zero());
    double v = 0.0;
    for (int link = 0; link < 5; ++link) {
      Vec2 com(q[0], q[1]);
      for (const Term& tm : terms_[link]) com += tm.a * k.u[tm.seg] + tm.b * k.v[tm.seg];
      v += p_.mass[link] * p_.gravity * com[1];
    }
    v += 0.5 * p_.knee_spring_k[0] * (q[4] - p_.knee_spring_rest) * (q[4] - p_.knee_spring_rest);
    v += 0.5 * p_.knee_spring_k[1] * (q[6] - p_.knee_spring_rest) * (q[6] - p_.knee_spring_rest);
    return t + v;
  }

  Vec2 link_com(const Vec7& q, int link) const {
    Kin k = kin(q, Vec7::Zero());
    Vec2 com(q[0], q[1]);
    for (const Term& tm : terms_[link]) com += tm.a * k.u[tm.seg] + tm.b * k.v[tm.seg];
    return com;
  }

 private:
  // CoM of each link = base + sum of a*u(seg) + b*v(seg).
  struct Term {
    int seg;
    double a;
    double b;
  };

  static int com_seg_of_link(int link) {
    static const int seg[5] = {kSegTorso, kSegLThigh, kSegLShank, kSegRThigh, kSegRShank};
    return seg[link];
  }

  void rebuild() {
    terms_[kTorso] = {{kSegTorso, p_.com_along[kTorso], p_.com_perp[kTorso]}};
    terms_[kLThigh] = {{kSegLThigh, -p_.com_along[kLThigh], p_.com_perp[kLThigh]}};
    terms_[kLShank] = {{kSegLThigh, -p_.length[kLThigh], 0.0},
                       {kSegLShank, -p_.com_along[kLShank], p_.com_perp[kLShank]}};
    terms_[kRThigh] = {{kSegRThigh, -p_.com_along[kRThigh], p_.com_perp[kRThigh]}};
    terms_[kRShank] = {{kSegRThigh, -p_.length[kRThigh], 0.0},
                       {kSegRShank, -p_.com_along[kRShank], p_.com_perp[kRShank]}};
  }

  void com_jacobian(const Kin& k, int link, Eigen::Matrix<double, 2, 7>& jv) const {
    jv.setZero();
    jv(0, 0) = 1.0;
    jv(1, 1) = 1.0;
    for (const Term& t : terms_[link]) {
      const Vec2 d = -t.a * k.v[t.seg] + t.b * k.u[t.seg];
      for (int a : seg_dofs()[t.seg]) {
        if (a < 0) continue;
        jv(0, a) += d[0];
        jv(1, a) += d[1];
      }
    }
  }

  void foot_jacobian(const Kin& k, int foot, Eigen::Matrix<double, 2, 7>& j) const {
    j.setZero();
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    const int thigh_seg = foot == 0 ? kSegLThigh : kSegRThigh;
    const int shank_seg = foot == 0 ? kSegLShank : kSegRShank;
    const int thigh_link = foot == 0 ? kLThigh : kRThigh;
    const int shank_link = foot == 0 ? kLShank : kRShank;
    const Vec2 dt_ = p_.length[thigh_link] * k.v[thigh_seg];
    const Vec2 ds_ = p_.length[shank_link] * k.v[shank_seg];
    for (int a : seg_dofs()[thigh_seg]) {
      if (a < 0) continue;
      j(0, a) += dt_[0];
      j(1, a) += dt_[1];
    }
    for (int a : seg_dofs()[shank_seg]) {
      if (a < 0) continue;
      j(0, a) += ds_[0];
      j(1, a) += ds_[1];
    }
  }

  ContactReport point_contact(const Vec2& pos, const Vec2& vel, const Terrain& terr) const {
    ContactReport c;
    const double h = terr.height(pos[0]);
    c.penetration = h - pos[1];
    if (c.penetration <= 0.0) {
      c.penetration = 0.0;
      return c;
    }
    c.in_contact = true;
    const double pen_rate = terr.slope_at(pos[0]) * vel[0] - vel[1];
    c.fz = std::max(0.0, p_.ground_k * c.penetration + p_.ground_c * pen_rate);
    c.ft = -p_.friction * c.fz * std::tanh(vel[0] / p_.v_eps);
    return c;
  }

  DynamicsParams p_;
  std::array<std::vector<Term>, 5> terms_;
};

}  // namespace gf::sim
