#pragma once

#include "l0dc/fem.hpp"
#include "l0dc/ssn.hpp"

namespace l0dc {

struct SparsaConfig {
  int M = 5;  // nonmonotone window
  double eta = 2.0;
  double sigma = 0.01;
  double alpha_min = 1e-20;
  double alpha_max = 1e20;
  double alpha0 = 1.0;
  double beta = 0.0;
  double rel_tol = 1e-5;
  int max_iter = 20000;
};

struct SparsaResult {
  Vector u;
  int iterations = 0;
  double objective = 0.0;  // smooth part plus the weighted l1 term
  double alpha_final = 0.0;
  bool converged = false;
};

/// Per-dof l1 weights beta * integral(phi_j).
L1Weights sparsa_weights(const FemSystem& system, double beta);

/// Nonmonotone Barzilai-Borwein proximal gradient for
/// min 1/2 u^T H u - q^T u + sum_j c_j |u_j|. Throws SolverError at max_iter.
SparsaResult sparsa_solve(const QuadraticOperator& H, const Vector& q, const L1Weights& weights,
                          const SparsaConfig& cfg, const Vector& u0);

}  // namespace l0dc
