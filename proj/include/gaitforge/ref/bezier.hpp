#pragma once

#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::ref {

// De Casteljau evaluation of a Bezier curve with the given control
// coefficients at s in [0, 1]. Out-of-range s is clamped; callers count the
// clamp events if they care.
inline double bezier_eval(const std::vector<double>& coeffs, double s, long* clamp_count = nullptr) {
  gf::ad::check(!coeffs.empty(), "bezier_eval: no coefficients");
  if (s < 0.0 || s > 1.0) {
    if (clamp_count) ++*clamp_count;
    s = s < 0.0 ? 0.0 : 1.0;
  }
  std::vector<double> b = coeffs;
  for (size_t r = 1; r < coeffs.size(); ++r)
    for (size_t i = 0; i + r < coeffs.size(); ++i) b[i] = (1.0 - s) * b[i] + s * b[i + 1];
  return b[0];
}

// Least-squares fit of a degree-d Bezier to samples (s_i, y_i), with the
// first/last coefficients tied so the curve closes periodically when asked.
inline std::vector<double> bezier_fit(const std::vector<double>& s,
                                      const std::vector<double>& y, int degree,
                                      bool periodic) {
  gf::ad::check(s.size() == y.size() && s.size() > static_cast<size_t>(degree),
                "bezier_fit: not enough samples");
  const int n = degree + 1;
  const int m = static_cast<int>(s.size());
  // Bernstein design matrix
  std::vector<double> a(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    std::vector<double> basis(n, 0.0);
    basis[0] = 1.0;
    const double t = s[i];
    for (int r = 1; r < n; ++r)
      for (int j = r; j >= 0; --j)
        basis[j] = (j > 0 ? basis[j - 1] * t : 0.0) + (j <= r - 1 ? basis[j] * (1.0 - t) : 0.0);
    for (int j = 0; j < n; ++j) a[static_cast<size_t>(i) * n + j] = basis[j];
  }
  // normal equations (n is tiny)
  std::vector<double> ata(static_cast<size_t>(n) * n, 0.0), aty(n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      aty[j] += a[static_cast<size_t>(i) * n + j] * y[i];
      for (int l = 0; l < n; ++l)
        ata[static_cast<size_t>(j) * n + l] += a[static_cast<size_t>(i) * n + j] * a[static_cast<size_t>(i) * n + l];
    }
  }
  for (int j = 0; j < n; ++j) ata[static_cast<size_t>(j) * n + j] += 1e-9;
  // gaussian elimination
  std::vector<double> x = aty;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(ata[static_cast<size_t>(r) * n + col]) > std::abs(ata[static_cast<size_t>(piv) * n + col])) piv = r;
    for (int c = 0; c < n; ++c) std::swap(ata[static_cast<size_t>(col) * n + c], ata[static_cast<size_t>(piv) * n + c]);
    std::swap(x[col], x[piv]);
    const double d = ata[static_cast<size_t>(col) * n + col];
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = ata[static_cast<size_t>(r) * n + col] / d;
      for (int c = col; c < n; ++c) ata[static_cast<size_t>(r) * n + c] -= f * ata[static_cast<size_t>(col) * n + c];
      x[r] -= f * x[col];
    }
  }
  for (int j = 0; j < n; ++j) x[j] /= ata[static_cast<size_t>(j) * n + j];
  if (periodic) {
    const double endpoint = 0.5 * (x[0] + x[n - 1]);
    x[0] = x[n - 1] = endpoint;
  }
  return x;
}

}  // namespace gf::ref
