#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gaitforge/ad/array.hpp"
#include "gaitforge/ref/bezier.hpp"
#include "gaitforge/sim/params.hpp"

namespace gf::ref {

enum class Skill { kWalk = 0, kRun = 1, kJump = 2, kStand = 3 };

inline const char* skill_name(Skill s) {
  switch (s) {
    case Skill::kWalk: return "walk";
    case Skill::kRun: return "run";
    case Skill::kJump: return "jump";
    case Skill::kStand: return "stand";
  }
  return "?";
}

inline Skill skill_from_name(const std::string& s) {
  if (s == "walk") return Skill::kWalk;
  if (s == "run") return Skill::kRun;
  if (s == "jump") return Skill::kJump;
  if (s == "stand") return Skill::kStand;
  throw std::runtime_error("unknown skill '" + s + "'");
}

// Motor reference at one instant plus the kinematically consistent base and
// foot heights (feet from forward kinematics of the reference posture).
struct RefFrame {
  std::array<double, 4> motors{};   // hip L, knee L, hip R, knee R
  double base_z = 0.0;
  std::array<double, 2> foot_z{};   // L, R
};

// Two-link leg inverse kinematics: hip->foot displacement (x down-range,
// z negative below the hip) to (hip, knee) with a forward-pointing knee.
inline std::array<double, 2> leg_ik(double x, double z, double l1, double l2) {
  double d2 = x * x + z * z;
  const double dmin = std::abs(l1 - l2) + 1e-4;
  const double dmax = l1 + l2 - 1e-3;
  double d = std::sqrt(d2);
  if (d < dmin) d = dmin;
  if (d > dmax) d = dmax;
  d2 = d * d;
  const double gamma = std::atan2(x, -z);
  const double ca = std::min(1.0, std::max(-1.0, (l1 * l1 + d2 - l2 * l2) / (2.0 * l1 * d)));
  const double cb = std::min(1.0, std::max(-1.0, (l1 * l1 + l2 * l2 - d2) / (2.0 * l1 * l2)));
  const double hip = gamma + std::acos(ca);
  const double knee = std::acos(cb) - M_PI;
  return {hip, knee};
}

inline double leg_fk_z(double hip, double knee, double l1, double l2) {
  return -(l1 * std::cos(hip) + l2 * std::cos(hip + knee));
}

// Nominal standing posture at pelvis height h (feet directly below pelvis).
inline std::array<double, 2> stand_pose(double h, double l1 = 0.4, double l2 = 0.4) {
  return leg_ik(0.0, -h, l1, l2);
}

// One periodic gait: shared hip/knee Bezier curves; the right leg evaluates
// the same curves half a period out of phase, which realizes the left/right
// mirror symmetry exactly.
struct BezierGait {
  std::vector<double> hip_coeffs;
  std::vector<double> knee_coeffs;
  double period = 0.8;
  double right_phase_offset = 0.5;
  double speed = 0.0;   // command key
  double height = 0.0;  // command key

  std::array<double, 4> motors_at_phase(double phase, long* clamps = nullptr) const {
    const double pl = phase - std::floor(phase);
    const double pr0 = phase + right_phase_offset;
    const double pr = pr0 - std::floor(pr0);
    return {bezier_eval(hip_coeffs, pl, clamps), bezier_eval(knee_coeffs, pl, clamps),
            bezier_eval(hip_coeffs, pr, clamps), bezier_eval(knee_coeffs, pr, clamps)};
  }
};

struct GaitShape {
  double period = 0.8;
  double duty = 0.55;
  double clearance_base = 0.05;
  double clearance_per_speed = 0.04;
  int degree = 4;
  int samples = 40;
};

// Procedurally authored periodic gait for one (speed, height) command:
// stance foot sweeps under the pelvis at -speed, swing returns it with a
// sinusoidal lift; the motor curves are a degree-4 Bezier fit of the leg IK.
inline BezierGait make_gait(double speed, double height, const GaitShape& shape,
                            double l1 = 0.4, double l2 = 0.4) {
  const double reach = l1 + l2 - 5e-3;
  double amp = std::abs(speed) * shape.duty * shape.period * 0.5;
  const double max_amp = 0.95 * std::sqrt(std::max(1e-6, reach * reach - height * height));
  amp = std::min(amp, max_amp);
  const double dir = speed >= 0.0 ? 1.0 : -1.0;
  const double lift = shape.clearance_base + shape.clearance_per_speed * std::abs(speed);
  std::vector<double> ph(shape.samples), hip(shape.samples), knee(shape.samples);
  for (int i = 0; i < shape.samples; ++i) {
    const double p = static_cast<double>(i) / shape.samples;
    double x, z;
    if (p < shape.duty) {
      const double sp = p / shape.duty;
      x = dir * amp * (1.0 - 2.0 * sp);
      z = -height;
    } else {
      const double sw = (p - shape.duty) / (1.0 - shape.duty);
      const double ease = sw * sw * (3.0 - 2.0 * sw);
      x = dir * amp * (-1.0 + 2.0 * ease);
      z = -height + lift * std::sin(M_PI * sw);
    }
    const auto ik = leg_ik(x, z, l1, l2);
    ph[i] = p;
    hip[i] = ik[0];
    knee[i] = ik[1];
  }
  BezierGait g;
  g.period = shape.period;
  g.speed = speed;
  g.height = height;
  g.hip_coeffs = bezier_fit(ph, hip, shape.degree, /*periodic=*/true);
  g.knee_coeffs = bezier_fit(ph, knee, shape.degree, /*periodic=*/true);
  return g;
}

// Rectangular (speed x height) grid of gaits with multilinear interpolation;
// queries clamp to the grid hull.
class GaitLibrary {
 public:
  GaitLibrary() = default;
  GaitLibrary(std::vector<double> speeds, std::vector<double> heights, const GaitShape& shape)
      : speeds_(std::move(speeds)), heights_(std::move(heights)), shape_(shape) {
    gf::ad::check(speeds_.size() >= 2 && heights_.size() >= 2, "gait library: grid too small");
    gaits_.reserve(speeds_.size() * heights_.size());
    for (double v : speeds_)
      for (double h : heights_) gaits_.push_back(make_gait(v, h, shape_));
  }

  const GaitShape& shape() const { return shape_; }
  const std::vector<double>& speeds() const { return speeds_; }
  const std::vector<double>& heights() const { return heights_; }
  size_t size() const { return gaits_.size(); }
  const BezierGait& gait(int vi, int hi) const { return gaits_[vi * heights_.size() + hi]; }

  std::array<double, 4> motors(double speed, double height, double phase) const {
    int vi;
    int hi;
    double fv, fh;
    locate(speeds_, speed, vi, fv);
    locate(heights_, height, hi, fh);
    std::array<double, 4> out{0, 0, 0, 0};
    const double w00 = (1 - fv) * (1 - fh), w01 = (1 - fv) * fh, w10 = fv * (1 - fh), w11 = fv * fh;
    const std::array<const BezierGait*, 4> gs{&gait(vi, hi), &gait(vi, hi + 1),
                                              &gait(vi + 1, hi), &gait(vi + 1, hi + 1)};
    const std::array<double, 4> ws{w00, w01, w10, w11};
    for (int g = 0; g < 4; ++g) {
      const auto m = gs[g]->motors_at_phase(phase);
      for (int j = 0; j < 4; ++j) out[j] += ws[g] * m[j];
    }
    return out;
  }

  // CSV dump: command key + coefficients per gait.
  void dump_csv(const std::string& path) const {
    std::ofstream f(path);
    f << "speed,height,period";
    for (int i = 0; i <= shape_.degree; ++i) f << ",hip_c" << i;
    for (int i = 0; i <= shape_.degree; ++i) f << ",knee_c" << i;
    f << "\n";
    for (const auto& g : gaits_) {
      f << g.speed << "," << g.height << "," << g.period;
      for (double c : g.hip_coeffs) f << "," << c;
      for (double c : g.knee_coeffs) f << "," << c;
      f << "\n";
    }
  }

  // Rebuilds the library from a dump; the grid is inferred from the keys.
  static GaitLibrary load_csv(const std::string& path) {
    std::ifstream f(path);
    gf::ad::check(f.good(), "gait library: cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    GaitLibrary lib;
    std::vector<double> speeds, heights;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
      gf::ad::check(v.size() >= 5, "gait library: short row");
      BezierGait g;
      g.speed = v[0];
      g.height = v[1];
      g.period = v[2];
      const size_t n = (v.size() - 3) / 2;
      g.hip_coeffs.assign(v.begin() + 3, v.begin() + 3 + n);
      g.knee_coeffs.assign(v.begin() + 3 + n, v.end());
      if (speeds.empty() || g.speed != speeds.back()) speeds.push_back(g.speed);
      if (speeds.size() == 1) heights.push_back(g.height);
      lib.gaits_.push_back(std::move(g));
      lib.shape_.degree = static_cast<int>(n) - 1;
      lib.shape_.period = v[2];
    }
    lib.speeds_ = std::move(speeds);
    lib.heights_ = std::move(heights);
    gf::ad::check(lib.gaits_.size() == lib.speeds_.size() * lib.heights_.size(),
                  "gait library: grid incomplete");
    return lib;
  }

 private:
  static void locate(const std::vector<double>& grid, double x, int& i, double& frac) {
    if (x <= grid.front()) {
      i = 0;
      frac = 0.0;
      return;
    }
    if (x >= grid.back()) {
      i = static_cast<int>(grid.size()) - 2;
      frac = 1.0;
      return;
    }
    i = 0;
    while (x > grid[i + 1]) ++i;
    frac = (x - grid[i]) / (grid[i + 1] - grid[i]);
  }

  std::vector<double> speeds_;
  std::vector<double> heights_;
  GaitShape shape_;
  std::vector<BezierGait> gaits_;
};

// Keyframed aperiodic motion (the jump): per-channel knots interpolated by a
// C1 cubic with zero end velocities; queries past the end clamp to the final
// frame, which equals the standing pose.
class KeyframeMotion {
 public:
  KeyframeMotion() = default;
  KeyframeMotion(std::vector<double> times, std::vector<std::array<double, 3>> knots)
      : t_(std::move(times)), k_(std::move(knots)) {
    gf::ad::check(t_.size() == k_.size() && t_.size() >= 2, "keyframes: bad sizes");
    for (size_t i = 1; i < t_.size(); ++i)
      gf::ad::check(t_[i] > t_[i - 1], "keyframes: times must increase");
  }

  double span() const { return t_.back(); }

  // channels: 0 hip, 1 knee, 2 base z
  std::array<double, 3> eval(double t) const {
    if (t <= t_.front()) return k_.front();
    if (t >= t_.back()) return k_.back();
    size_t i = 0;
    while (t > t_[i + 1]) ++i;
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    std::array<double, 3> out;
    for (int c = 0; c < 3; ++c) {
      const double m0 = tangent(i, c) * h;
      const double m1 = tangent(i + 1, c) * h;
      const double y0 = k_[i][c], y1 = k_[i + 1][c];
      const double s2 = s * s, s3 = s2 * s;
      out[c] = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 +
               (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
    }
    return out;
  }

 private:
  double tangent(size_t i, int c) const {
    if (i == 0 || i + 1 == t_.size()) return 0.0;  // zero end-velocity
    return (k_[i + 1][c] - k_[i - 1][c]) / (t_[i + 1] - t_[i - 1]);
  }

  std::vector<double> t_;
  std::vector<std::array<double, 3>> k_;
};

inline KeyframeMotion default_jump_motion() {
  // crouch -> extend -> flight (ballistic base) -> land -> absorb -> stand;
  // grounded knots put the feet exactly on the ground via leg FK
  const double g = 9.81;
  auto ground_z = [](double hip, double knee) { return -leg_fk_z(hip, knee, 0.4, 0.4); };
  const double t_off = 0.55, t_land = 0.95;
  const double z_off = ground_z(0.05, -0.10);
  const double z_land = ground_z(0.20, -0.40);
  const double tf = t_land - t_off;
  const double v_off = (z_land - z_off + 0.5 * g * tf * tf) / tf;
  auto flight_z = [&](double t) {
    const double u = t - t_off;
    return z_off + v_off * u - 0.5 * g * u * u;
  };
  return KeyframeMotion(
      {0.0, 0.35, t_off, 0.65, 0.75, 0.85, t_land, 1.25, 1.66},
      {{{0.25, -0.50, ground_z(0.25, -0.50)}},
       {{0.65, -1.35, ground_z(0.65, -1.35)}},
       {{0.05, -0.10, z_off}},
       {{0.30, -0.60, flight_z(0.65)}},
       {{0.65, -1.30, flight_z(0.75)}},
       {{0.45, -0.90, flight_z(0.85)}},
       {{0.20, -0.40, z_land}},
       {{0.55, -1.15, ground_z(0.55, -1.15)}},
       {{0.25, -0.50, ground_z(0.25, -0.50)}}});
}

inline constexpr double kJumpSpan = 1.66;

// Skill-specific reference source: gait library for walking, one fixed gait
// for running, keyframes for jumping, a constant pose for standing.
class ReferenceMotion {
 public:
  struct Config {
    std::vector<double> walk_speeds;   // library grid
    std::vector<double> walk_heights;
    GaitShape walk_shape;
    GaitShape run_shape;
    double run_ref_speed = 2.1;
    double run_ref_height = 0.70;
    double stand_height = 0.72;
    double l1 = 0.4, l2 = 0.4;

    static Config defaults() {
      Config c;
      for (int i = 0; i < 11; ++i) c.walk_speeds.push_back(-1.5 + 3.0 * i / 10.0);
      for (int i = 0; i < 6; ++i) c.walk_heights.push_back(0.58 + 0.18 * i / 5.0);
      c.walk_shape = GaitShape{};
      c.run_shape = GaitShape{0.7, 0.35, 0.10, 0.03, 4, 40};
      return c;
    }
  };

  explicit ReferenceMotion(const Config& cfg = Config::defaults())
      : cfg_(cfg),
        walk_lib_(cfg.walk_speeds, cfg.walk_heights, cfg.walk_shape),
        run_gait_(make_gait(cfg.run_ref_speed, cfg.run_ref_height, cfg.run_shape)),
        jump_(default_jump_motion()) {}

  const Config& config() const { return cfg_; }
  const GaitLibrary& walk_library() const { return walk_lib_; }

  double period(Skill s) const {
    return s == Skill::kWalk ? cfg_.walk_shape.period
           : s == Skill::kRun ? cfg_.run_shape.period
                              : kJumpSpan;
  }

  // command: walk (speed, height); run (speed); jump (target x, elevation);
  // stand (height). "t" is the skill clock: a phase clock for periodic
  // skills, time since the jump started for jumping.
  RefFrame frame(Skill skill, const std::array<double, 2>& command, double t) const {
    RefFrame f;
    switch (skill) {
      case Skill::kWalk: {
        const double phase = t / cfg_.walk_shape.period;
        f.motors = walk_lib_.motors(command[0], command[1], phase);
        f.base_z = command[1];
        break;
      }
      case Skill::kRun: {
        const double phase = t / cfg_.run_shape.period;
        f.motors = run_gait_.motors_at_phase(phase);
        f.base_z = cfg_.run_ref_height;
        break;
      }
      case Skill::kJump: {
        const auto k = jump_.eval(t);
        f.motors = {k[0], k[1], k[0], k[1]};
        f.base_z = k[2];
        break;
      }
      case Skill::kStand: {
        const double h = command[1] > 0.0 ? command[1] : cfg_.stand_height;
        const auto p = stand_pose(h, cfg_.l1, cfg_.l2);
        f.motors = {p[0], p[1], p[0], p[1]};
        f.base_z = h;
        break;
      }
    }
    f.foot_z = {f.base_z + leg_fk_z(f.motors[0], f.motors[1], cfg_.l1, cfg_.l2),
                f.base_z + leg_fk_z(f.motors[2], f.motors[3], cfg_.l1, cfg_.l2)};
    return f;
  }

  // Motor previews 1, 4, and 7 policy steps ahead; appends the current
  // reference base height when the command does not carry a height (run,
  // jump). Past-the-end previews clamp to the final frame.
  std::vector<double> preview(Skill skill, const std::array<double, 2>& command, double t,
                              double policy_dt) const {
    std::vector<double> out;
    for (int ahead : {1, 4, 7}) {
      double tq = t + ahead * policy_dt;
      if (skill == Skill::kJump && tq > kJumpSpan) tq = kJumpSpan;
      const RefFrame f = frame(skill, command, tq);
      out.insert(out.end(), f.motors.begin(), f.motors.end());
    }
    if (skill == Skill::kRun || skill == Skill::kJump) out.push_back(frame(skill, command, t).base_z);
    return out;
  }

 private:
  Config cfg_;
  GaitLibrary walk_lib_;
  BezierGait run_gait_;
  KeyframeMotion jump_;
};

}  // namespace gf::ref
