#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "l0dc/l0_solver.hpp"
#include "l0dc/sparsa.hpp"

using namespace l0dc;

TEST_CASE("scalar soft-threshold fixed point") {
  SparseMatrix h(1, 1);
  h.insert(0, 0) = 2.0;
  const SparseQuadratic H(h);
  const SparsaResult r =
      sparsa_solve(H, Vector::Constant(1, 3.0), L1Weights(Vector::Constant(1, 1.0)), SparsaConfig{}, Vector::Zero(1));
  CHECK(r.u[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.converged);
}

TEST_CASE("zero weights give the linear solve") {
  std::mt19937_64 gen(31);
  const SparseMatrix Hm = testing::random_spd(10, gen, 1.0);
  const Vector q = testing::random_vector(10, gen);
  SparsaConfig cfg;
  cfg.rel_tol = 1e-12;
  const SparsaResult r = sparsa_solve(SparseQuadratic(Hm), q, L1Weights(Vector::Zero(10)), cfg, Vector::Zero(10));
  const Vector exact = Eigen::MatrixXd(Hm).ldlt().solve(q);
  CHECK((r.u - exact).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("prototype baseline") {
  const FemSystem sys = assemble(build_structured_mesh(16), prototype_load);
  const ProblemDef p = poisson_prototype(sys);
  SparsaConfig cfg;
  cfg.beta = 4.36;
  const L1Weights w = sparsa_weights(sys, cfg.beta);
  CHECK(w.c == 4.36 * sys.dof_values(sys.basis_integral));
  const SparsaResult r = sparsa_solve(*p.hessian, p.q_smooth, w, cfg, unconstrained_minimizer(p));
  CHECK(r.iterations <= 200);
  const double l0 = feasibility(sys.expand(r.u), sys, 0.25).l0;
  CHECK(l0 > 0.15);
  CHECK(l0 < 0.35);
  // stationarity residual with tau = 1 / alpha_final
  const double F = f_tau_residual(L1Subproblem(*p.hessian, p.q_smooth, w), r.u, 1.0 / r.alpha_final).norm();
  CHECK(F <= 1e-6 * (1.0 + p.q_smooth.norm()));
}

TEST_CASE("parameter checks") {
  SparseMatrix h(1, 1);
  h.insert(0, 0) = 1.0;
  SparsaConfig cfg;
  cfg.eta = 1.0;
  CHECK_THROWS_AS(sparsa_solve(SparseQuadratic(h), Vector::Ones(1), L1Weights(Vector::Zero(1)), cfg, Vector::Zero(1)),
                  OutOfRange);
  cfg = SparsaConfig{};
  cfg.max_iter = 1;
  cfg.rel_tol = 1e-15;
  CHECK_THROWS_AS(
      sparsa_solve(SparseQuadratic(h), Vector::Ones(1), L1Weights(Vector::Zero(1)), cfg, Vector::Constant(1, 7.0)),
      SolverError);
  const FemSystem sys = assemble(build_structured_mesh(4), prototype_load);
  CHECK_THROWS_AS(sparsa_weights(sys, -1.0), OutOfRange);
}
