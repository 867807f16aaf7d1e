#pragma once

#include <random>

#include <Eigen/Dense>

#include "l0dc/types.hpp"

namespace l0dc::testing {

inline Vector random_vector(Index n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(gen);
  return v;
}

// B^T B + shift I with a sparse random B.
inline SparseMatrix random_spd(Index n, std::mt19937_64& gen, double shift = 0.5) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::bernoulli_distribution keep(0.3);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j || keep(gen)) B(i, j) = d(gen);
    }
  }
  Eigen::MatrixXd H = B.transpose() * B + shift * Eigen::MatrixXd::Identity(n, n);
  return H.sparseView();
}

}  // namespace l0dc::testing
