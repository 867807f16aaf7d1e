#include "l0dc/problems.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace l0dc {

double prototype_load(double x, double y) { return 10.0 * x * std::sin(5.0 * x) * std::sin(7.0 * y); }

double default_desired_state(double x, double y) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::sin(two_pi * x) * std::sin(two_pi * y) * std::exp(2.0 * x) / 6.0;
}

ProblemDef poisson_prototype(const FemSystem& system) {
  ProblemDef p;
  p.label = "poisson";
  auto H = std::make_shared<SparseQuadratic>(system.A);
  p.hessian = H;
  p.q_smooth = system.b;
  const Vector b = system.b;
  p.smooth_value = [H, b](const Vector& u) { return 0.5 * u.dot(H->apply(u)) - b.dot(u); };
  p.smooth_grad = [H, b](const Vector& u) { return Vector(H->apply(u) - b); };
  return p;
}

struct ControlHessian::Factor {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

ControlHessian::ControlHessian(const SparseMatrix& A, const SparseMatrix& M, double alpha, double beta)
    : A_(A), M_(M), factor_(std::make_unique<Factor>()) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw OutOfRange("control problem needs alpha > 0 and beta > 0");
  if (A.rows() != A.cols() || M.rows() != A.rows() || M.cols() != A.cols()) {
    throw DimensionMismatch("stiffness and mass matrices must be square and of equal size");
  }
  R_ = alpha * M_ + beta * A_;
  R_.makeCompressed();
  factor_->ldlt.compute(A_);
  if (factor_->ldlt.info() != Eigen::Success) throw SolverError("stiffness factorization failed");
}

ControlHessian::~ControlHessian() = default;

Vector ControlHessian::solve_stiffness(const Vector& rhs) const {
  Vector x = factor_->ldlt.solve(rhs);
  if (factor_->ldlt.info() != Eigen::Success) throw SolverError("stiffness solve failed");
  return x;
}

Vector ControlHessian::state(const Vector& u) const { return solve_stiffness(M_ * u); }

Vector ControlHessian::apply(const Vector& v) const {
  require_size(v.size(), size(), "control vector");
  const Vector y = state(v);
  const Vector p = solve_stiffness(M_ * y);
  return M_ * p + R_ * v;
}

Vector ControlHessian::solve_principal(std::span<const Index> active, const Vector& rhs) const {
  const auto m = static_cast<Index>(active.size());
  require_size(rhs.size(), m, "principal right-hand side");
  if (m == 0) return Vector();
  const Index n = size();
  std::vector<Index> pos(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < m; ++i) pos[static_cast<std::size_t>(active[i])] = i;

  // unknowns: [v_A (m) | y (n) | p (n)]
  const Index oy = m;
  const Index op = m + n;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(4 * A_.nonZeros() + 2 * M_.nonZeros() + R_.nonZeros()));
  for (Index col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(A_, col); it; ++it) {
      trips.emplace_back(oy + it.row(), oy + col, it.value());  // A y
      trips.emplace_back(op + it.row(), op + col, it.value());  // A p
    }
    const Index ac = pos[static_cast<std::size_t>(col)];
    for (SparseMatrix::InnerIterator it(M_, col); it; ++it) {
      trips.emplace_back(op + it.row(), oy + col, -it.value());  // -M y
      if (ac >= 0) trips.emplace_back(oy + it.row(), ac, -it.value());  // -M_{:,A} v_A
      const Index ar = pos[static_cast<std::size_t>(it.row())];
      if (ar >= 0) trips.emplace_back(ar, op + col, it.value());  // M_{A,:} p
    }
    if (ac >= 0) {
      for (SparseMatrix::InnerIterator it(R_, col); it; ++it) {
        const Index ar = pos[static_cast<std::size_t>(it.row())];
        if (ar >= 0) trips.emplace_back(ar, ac, it.value());
      }
    }
  }
  SparseMatrix K(m + 2 * n, m + 2 * n);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();

  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) throw SolverError("singular principal system: " + lu.lastErrorMessage());
  Vector full_rhs = Vector::Zero(m + 2 * n);
  full_rhs.head(m) = rhs;
  const Vector x = lu.solve(full_rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("singular principal system");
  return x.head(m);
}

ProblemDef control_reduced(const FemSystem& system, const ControlConfig& cfg) {
  auto H = std::make_shared<ControlHessian>(system.A, system.M, cfg.alpha, cfg.beta);
  Vector yd_nodal;
  if (cfg.y_d_nodal.size() != 0) {
    require_size(cfg.y_d_nodal.size(), system.num_nodes(), "desired state");
    yd_nodal = cfg.y_d_nodal;
  } else {
    yd_nodal = system.interpolate(cfg.y_d);
  }
  const Vector yd = system.restrict(yd_nodal);
  const SparseMatrix M = system.M;
  const SparseMatrix A = system.A;
  const double alpha = cfg.alpha;
  const double beta = cfg.beta;

  ProblemDef p;
  p.label = "control";
  p.hessian = H;
  p.q_smooth = M * H->solve_stiffness(M * yd);
  p.constant = 0.5 * yd.dot(M * yd);
  p.smooth_value = [H, M, A, yd, alpha, beta](const Vector& u) {
    const Vector e = H->state(u) - yd;
    return 0.5 * e.dot(M * e) + 0.5 * alpha * u.dot(M * u) + 0.5 * beta * u.dot(A * u);
  };
  p.smooth_grad = [H, M, A, yd, alpha, beta](const Vector& u) {
    const Vector e = H->state(u) - yd;
    const Vector adj = H->solve_stiffness(M * e);
    return Vector(M * adj + alpha * (M * u) + beta * (A * u));
  };
  p.tracking_error = [H, M, yd](const Vector& u) {
    const Vector e = H->state(u) - yd;
    return std::sqrt(std::max(0.0, e.dot(M * e)));
  };
  return p;
}

Vector unconstrained_minimizer(const ProblemDef& problem) {
  std::vector<Index> all(static_cast<std::size_t>(problem.size()));
  for (Index i = 0; i < problem.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  return problem.hessian->solve_principal(all, problem.q_smooth);
}

}  // namespace l0dc
