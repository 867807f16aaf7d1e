#pragma once

#include <functional>
#include <memory>
#include <string>

#include "l0dc/fem.hpp"
#include "l0dc/ssn.hpp"

namespace l0dc {

/// Smooth convex part f(u) = 1/2 u^T H u - q_smooth^T u + constant on the
/// free dofs of a FemSystem.
struct ProblemDef {
  std::string label;
  std::shared_ptr<const QuadraticOperator> hessian;
  Vector q_smooth;
  double constant = 0.0;
  std::function<double(const Vector&)> smooth_value;
  std::function<Vector(const Vector&)> smooth_grad;
  /// Discrete L2 distance of the state to the target; empty for problems without a state.
  std::function<double(const Vector&)> tracking_error;

  Index size() const { return q_smooth.size(); }
};

/// Load of the Poisson prototype, 10 x sin(5x) sin(7y).
double prototype_load(double x, double y);

/// Default desired state (1/6) sin(2 pi x) sin(2 pi y) exp(2x).
double default_desired_state(double x, double y);

/// f(u) = 1/2 u^T A u - b^T u.
ProblemDef poisson_prototype(const FemSystem& system);

struct ControlConfig {
  double alpha = 1e-7;
  double beta = 1e-7;
  ScalarField y_d = default_desired_state;
  /// Nodal values of y_d (all nodes); overrides y_d when non-empty.
  Vector y_d_nodal;
};

/// H v = M A^{-1} M A^{-1} M v + alpha M v + beta A v, applied with a cached
/// factorization of A. Principal blocks are solved through the sparse block
/// system in (v_A, y, p):
///   A y - M_{:,A} v_A = 0,  A p - M y = 0,  M_{A,:} p + (alpha M + beta A)_{AA} v_A = rhs.
class ControlHessian final : public QuadraticOperator {
 public:
  ControlHessian(const SparseMatrix& A, const SparseMatrix& M, double alpha, double beta);
  ~ControlHessian() override;

  Index size() const override { return A_.rows(); }
  Vector apply(const Vector& v) const override;
  Vector solve_principal(std::span<const Index> active, const Vector& rhs) const override;

  /// y = A^{-1} M u.
  Vector state(const Vector& u) const;
  Vector solve_stiffness(const Vector& rhs) const;

 private:
  struct Factor;
  SparseMatrix A_, M_, R_;
  std::unique_ptr<Factor> factor_;
};

/// Reduced problem min 1/2 |S u - y_d|_M^2 + alpha/2 u^T M u + beta/2 u^T A u
/// with S = A^{-1} M. Value and gradient go through the state and adjoint.
ProblemDef control_reduced(const FemSystem& system, const ControlConfig& cfg = {});

/// H^{-1} q_smooth.
Vector unconstrained_minimizer(const ProblemDef& problem);

}  // namespace l0dc
