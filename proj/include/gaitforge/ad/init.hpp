#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "gaitforge/ad/array.hpp"
#include "gaitforge/ad/rng.hpp"

namespace gf::ad {

// Orthogonal-style init: Q factor of a Gaussian matrix, scaled by gain.
// Hidden layers use gain 1.0, policy output layers 0.01.
template <typename T>
Array<T> orthogonal_init(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  Eigen::MatrixXd g(big, big);
  for (int i = 0; i < big; ++i)
    for (int j = 0; j < big; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, big);
  // fix signs so the decomposition is unique
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < big; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  Array<T> out({rows, cols});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out.data[i * cols + j] = static_cast<T>(gain * q(i, j));
  return out;
}

template <typename T>
Array<T> gaussian_init(std::vector<int> shape, double stddev, Rng& rng) {
  Array<T> out(std::move(shape));
  for (auto& v : out.data) v = static_cast<T>(stddev * rng.normal());
  return out;
}

}  // namespace gf::ad
