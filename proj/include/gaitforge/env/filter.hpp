#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "gaitforge/ad/array.hpp"

namespace gf::env {

// Second-order Butterworth low-pass biquad, bilinear transform with
// frequency prewarping. DC gain is exactly b0+b1+b2 over 1+a1+a2 = 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad butterworth_lowpass(double cutoff_hz, double sample_hz) {
    gf::ad::check(cutoff_hz > 0 && cutoff_hz < 0.5 * sample_hz, "biquad: bad cutoff");
    const double k = std::tan(M_PI * cutoff_hz / sample_hz);
    const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k * k);
    Biquad f{};
    f.b0 = k * k * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - std::sqrt(2.0) * k + k * k) * norm;
    return f;
  }

  // poles inside the unit circle
  bool stable() const {
    return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
  }

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  // steady-state at a constant input
  void prime(double v) {
    x1 = x2 = v;
    y1 = y2 = v * dc_gain();
  }

  double step(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }

  double magnitude_at(double hz, double sample_hz) const {
    const double w = 2.0 * M_PI * hz / sample_hz;
    const std::complex<double> z = std::polar(1.0, -w);
    const std::complex<double> num = b0 + b1 * z + b2 * z * z;
    const std::complex<double> den = 1.0 + a1 * z + a2 * z * z;
    return std::abs(num / den);
  }
};

// Per-motor action filter bank.
template <int N>
struct ActionFilter {
  std::array<Biquad, N> f;

  explicit ActionFilter(double cutoff_hz = 4.0, double sample_hz = 1.0 / 0.03) {
    for (auto& b : f) b = Biquad::butterworth_lowpass(cutoff_hz, sample_hz);
  }

  void prime(const std::array<double, N>& v) {
    for (int i = 0; i < N; ++i) f[i].prime(v[i]);
  }

  std::array<double, N> step(const std::array<double, N>& x) {
    std::array<double, N> y;
    for (int i = 0; i < N; ++i) y[i] = f[i].step(x[i]);
    return y;
  }
};

}  // namespace gf::env
