#pragma once

#include <memory>
#include <span>
#include <vector>

#include "l0dc/types.hpp"

namespace l0dc {

/// Symmetric positive definite operator H, available at least as an action.
class QuadraticOperator {
 public:
  virtual ~QuadraticOperator() = default;

  virtual Index size() const = 0;
  virtual Vector apply(const Vector& v) const = 0;

  /// Solves H_AA x = rhs on the principal block indexed by `active`.
  /// The default runs conjugate gradients on the restricted action.
  virtual Vector solve_principal(std::span<const Index> active, const Vector& rhs) const;

  /// Explicit sparse matrix if the operator has one.
  virtual const SparseMatrix* explicit_matrix() const { return nullptr; }

  /// Relative residual target of the default CG principal solve.
  double cg_tolerance = 1e-12;
};

/// Operator backed by an explicit sparse matrix; principal blocks are factored
/// with a sparse LDL^T.
class SparseQuadratic final : public QuadraticOperator {
 public:
  explicit SparseQuadratic(SparseMatrix H);

  Index size() const override { return H_.rows(); }
  Vector apply(const Vector& v) const override { return H_ * v; }
  Vector solve_principal(std::span<const Index> active, const Vector& rhs) const override;
  const SparseMatrix* explicit_matrix() const override { return &H_; }

 private:
  SparseMatrix H_;
};

/// Extracts rows and columns `active` of a sparse matrix.
SparseMatrix principal_submatrix(const SparseMatrix& H, std::span<const Index> active);

/// Nonnegative per-coordinate thresholds of the weighted l1 term.
struct L1Weights {
  Vector c;

  L1Weights() = default;
  explicit L1Weights(Vector thresholds);
  Index size() const { return c.size(); }
};

/// min 1/2 u^T H u - (q + tilt)^T u + sum_j c_j |u_j|.
///
/// The linear term is split so that a large tilt that cancels against c (the
/// DC linearization of a penalty) is combined with c before meeting the small
/// smooth part q; the mathematical problem only depends on q + tilt.
struct L1Subproblem {
  const QuadraticOperator* H = nullptr;
  Vector q;
  Vector tilt;  // empty means zero
  L1Weights weights;

  L1Subproblem(const QuadraticOperator& op, Vector q_, L1Weights w, Vector tilt_ = {});

  Index size() const { return q.size(); }
  double tilt_at(Index i) const { return tilt.size() == 0 ? 0.0 : tilt[i]; }
  /// Smooth gradient without the tilt: H u - q.
  Vector smooth_gradient(const Vector& u) const { return H->apply(u) - q; }
  double objective(const Vector& u) const;
};

/// F_tau(u) = g - clamp(g - u/tau, -c, c) with g = H u - q - tilt.
Vector f_tau_residual(const L1Subproblem& prob, const Vector& u, double tau);

/// Convenience overload with the linear term given as one vector.
Vector f_tau_residual(const Vector& u, const QuadraticOperator& H, const Vector& q,
                      const L1Weights& weights, double tau);

enum class SsnStatus { converged, stalled, max_newton };

struct SsnOptions {
  double tau = 1.0;
  double tol = 1e-14;  // on ||F_tau||_2
  int max_newton = 100;
  int stall_window = 5;        // non-decreasing steps before the proximal fallback
  int fallback_max_steps = 20000;
};

struct SsnResult {
  Vector u;
  double residual_norm = 0.0;
  int iterations = 0;  // Newton steps (principal solves)
  int fallback_steps = 0;
  SsnStatus status = SsnStatus::max_newton;
};

/// Semismooth Newton (primal active set) on F_tau(u) = 0, warm-started at `warm`.
/// Returns the best iterate found; status says whether tol was reached.
SsnResult ssn_solve(const L1Subproblem& prob, const Vector& warm, const SsnOptions& opts = {});

/// tau = 100 max|u_j| / (rho max patch), floored at 1e-16. `fallback_scale`
/// replaces max|u_j| when the warm start vanishes.
double mesh_scaled_tau(const Vector& warm, double rho, double max_patch_measure,
                       double fallback_scale = 0.0);

/// Largest-eigenvalue estimate by power iteration.
double power_iteration(const QuadraticOperator& H, int iterations = 200, unsigned seed = 7);

struct ProxGradOptions {
  double tol = 1e-12;  // on ||u_{k+1} - u_k||_inf
  int max_iter = 2'000'000;
  double lipschitz = 0.0;  // 0: estimate by power iteration with a 10% margin
};

struct ProxGradResult {
  Vector u;
  int iterations = 0;
  bool converged = false;
};

/// Proximal gradient (ISTA) with step 1/L. Throws SolverError at the iteration cap.
ProxGradResult prox_grad_oracle(const L1Subproblem& prob, const ProxGradOptions& opts = {},
                                const Vector& start = {});

/// One proximal-gradient step with step 1/L.
Vector prox_grad_step(const L1Subproblem& prob, const Vector& u, double L);

/// Componentwise first-order optimality defect of u: |g_i| - c_i on zeros
/// (clamped at 0) and |g_i + c_i sign(u_i)| on the support, g = H u - q - tilt.
double optimality_defect(const L1Subproblem& prob, const Vector& u);

}  // namespace l0dc
