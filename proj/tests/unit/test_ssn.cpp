#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "l0dc/ssn.hpp"

using namespace l0dc;

namespace {

SparseMatrix scalar(double h) {
  SparseMatrix m(1, 1);
  m.insert(0, 0) = h;
  return m;
}

// Same matrix, but only as an action: exercises the conjugate-gradient principal solve.
class ActionOnly final : public QuadraticOperator {
 public:
  explicit ActionOnly(SparseMatrix H) : H_(std::move(H)) {}
  Index size() const override { return H_.rows(); }
  Vector apply(const Vector& v) const override { return H_ * v; }

 private:
  SparseMatrix H_;
};

void check_optimal(const L1Subproblem& prob, const Vector& u, double tol) {
  const Vector g = prob.smooth_gradient(u);
  for (Index i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0) {
      CHECK(std::abs(g[i]) <= prob.weights.c[i] + tol);
    } else {
      CHECK(g[i] == doctest::Approx(-prob.weights.c[i] * (u[i] > 0 ? 1.0 : -1.0)).epsilon(tol));
    }
  }
}

}  // namespace

TEST_CASE("residual on scalar problems") {
  const SparseQuadratic H(scalar(2.0));
  CHECK(f_tau_residual(Vector::Constant(1, 1.0), H, Vector::Constant(1, 3.0), L1Weights(Vector::Constant(1, 1.0)),
                       1.0)[0] == 0.0);
  CHECK(f_tau_residual(Vector::Zero(1), H, Vector::Constant(1, 3.0), L1Weights(Vector::Constant(1, 5.0)), 1.0)[0] ==
        0.0);
  CHECK(f_tau_residual(Vector::Zero(1), H, Vector::Constant(1, 3.0), L1Weights(Vector::Constant(1, 1.0)), 1.0)[0] ==
        -2.0);
  CHECK_THROWS_AS(f_tau_residual(Vector::Zero(1), H, Vector::Zero(1), L1Weights(Vector::Zero(1)), 0.0), OutOfRange);
  CHECK_THROWS_AS(L1Weights(Vector::Constant(1, -1.0)), OutOfRange);
}

TEST_CASE("zero is optimal when the data is below the thresholds") {
  std::mt19937_64 gen(9);
  const SparseQuadratic H(testing::random_spd(8, gen));
  const Vector q = testing::random_vector(8, gen, -0.5, 0.5);
  const L1Subproblem prob(H, q, L1Weights(Vector::Constant(8, 1.0)));
  CHECK(f_tau_residual(prob, Vector::Zero(8), 1.0).isZero());
  const SsnResult r = ssn_solve(prob, Vector::Ones(8));
  CHECK(r.u.isZero());
  CHECK(r.status == SsnStatus::converged);
  CHECK(r.iterations <= 3);
}

TEST_CASE("without thresholds Newton is a linear solve") {
  std::mt19937_64 gen(10);
  const SparseMatrix Hm = testing::random_spd(12, gen);
  const SparseQuadratic H(Hm);
  const Vector q = testing::random_vector(12, gen);
  const SsnResult r = ssn_solve(L1Subproblem(H, q, L1Weights(Vector::Zero(12))), Vector::Zero(12));
  const Vector exact = Eigen::MatrixXd(Hm).ldlt().solve(q);
  CHECK((r.u - exact).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(r.status == SsnStatus::converged);
}

TEST_CASE("proximal gradient oracle") {
  const SparseQuadratic H(scalar(2.0));
  const L1Subproblem prob(H, Vector::Constant(1, 3.0), L1Weights(Vector::Constant(1, 1.0)));
  CHECK(prox_grad_oracle(prob).u[0] == doctest::Approx(1.0).epsilon(1e-11));
  const L1Subproblem free(H, Vector::Constant(1, 3.0), L1Weights(Vector::Zero(1)));
  CHECK(prox_grad_oracle(free).u[0] == doctest::Approx(1.5).epsilon(1e-11));
  ProxGradOptions capped;
  capped.max_iter = 2;
  capped.tol = 0.0;
  CHECK_THROWS_AS(prox_grad_oracle(prob, capped), SolverError);
}

TEST_CASE("Newton agrees with the proximal gradient oracle on random instances") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseQuadratic H(testing::random_spd(20, gen));
    const Vector q = testing::random_vector(20, gen, -3.0, 3.0);
    const L1Subproblem prob(H, q, L1Weights(testing::random_vector(20, gen, 0.0, 1.5)));
    const SsnResult r = ssn_solve(prob, Vector::Zero(20));
    CHECK(r.status == SsnStatus::converged);
    CHECK(r.residual_norm <= 1e-14);
    const ProxGradResult o = prox_grad_oracle(prob);
    CHECK((r.u - o.u).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(prob.objective(r.u) <= prob.objective(o.u) + 1e-9);
    check_optimal(prob, r.u, 1e-10);
    CHECK(optimality_defect(prob, r.u) <= 1e-10);
  }
}

TEST_CASE("residual norm is permutation equivariant") {
  std::mt19937_64 gen(13);
  const Index n = 15;
  const SparseMatrix Hm = testing::random_spd(n, gen);
  const Vector q = testing::random_vector(n, gen);
  const Vector c = testing::random_vector(n, gen, 0.0, 1.0);
  const Vector u = testing::random_vector(n, gen);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), gen);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
  for (Index i = 0; i < n; ++i) P.indices()[i] = idx[static_cast<std::size_t>(i)];
  const SparseMatrix Hp = (P * Eigen::MatrixXd(Hm) * P.transpose()).sparseView();
  const double a = f_tau_residual(u, SparseQuadratic(Hm), q, L1Weights(c), 0.7).norm();
  const double b = f_tau_residual(P * u, SparseQuadratic(Hp), P * q, L1Weights(P * c), 0.7).norm();
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
}

TEST_CASE("conjugate-gradient principal solve matches the factorization") {
  std::mt19937_64 gen(14);
  const SparseMatrix Hm = testing::random_spd(30, gen);
  const SparseQuadratic direct(Hm);
  const ActionOnly action(Hm);
  const std::vector<Index> active{0, 3, 4, 9, 17, 29};
  const Vector rhs = testing::random_vector(6, gen);
  CHECK((direct.solve_principal(active, rhs) - action.solve_principal(active, rhs)).norm() < 1e-9);
  const Vector q = testing::random_vector(30, gen, -2.0, 2.0);
  const L1Weights w(Vector::Constant(30, 0.3));
  const SsnResult a = ssn_solve(L1Subproblem(direct, q, w), Vector::Zero(30));
  const SsnResult b = ssn_solve(L1Subproblem(action, q, w), Vector::Zero(30));
  CHECK((a.u - b.u).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("large tilt cancelling the threshold frees the coordinate") {
  const SparseQuadratic H(scalar(1.0));
  const double c = 1e9;
  const L1Subproblem prob(H, Vector::Constant(1, 1e-3), L1Weights(Vector::Constant(1, c)), Vector::Constant(1, c));
  SsnOptions opts;
  opts.tau = 1e-10;
  const SsnResult r = ssn_solve(prob, Vector::Constant(1, 5e-4), opts);
  CHECK(r.u[0] == 1e-3);
  CHECK(r.residual_norm <= 1e-14);
}

TEST_CASE("mesh scaled tau") {
  CHECK(mesh_scaled_tau(Vector{{0.5, -2.0}}, 1e3, 0.1) == doctest::Approx(2.0));
  CHECK(mesh_scaled_tau(Vector::Zero(2), 1e9, 0.1) == 1e-16);
  CHECK(mesh_scaled_tau(Vector::Zero(2), 1.0, 1.0, 0.01) == doctest::Approx(1.0));
}

TEST_CASE("power iteration estimates the largest eigenvalue") {
  SparseMatrix d(3, 3);
  d.insert(0, 0) = 1.0;
  d.insert(1, 1) = 4.0;
  d.insert(2, 2) = 2.0;
  CHECK(power_iteration(SparseQuadratic(d), 500) == doctest::Approx(4.0).epsilon(1e-8));
}
