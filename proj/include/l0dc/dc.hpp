#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "l0dc/types.hpp"

namespace l0dc {

/// Result of minimizing g(u) - <s, u> for a fixed tilt s.
struct SubproblemSolution {
  Vector u;
  double residual = 0.0;  // norm of the stationarity residual; 0 when solved exactly
  int inner_iterations = 0;
};

/// Decomposition f = g - h driven by the DC iteration.
///
/// The iteration index k is passed to h_subgrad and objective so that callers
/// can let h vary with k (e.g. a continuation in a constraint parameter); the
/// descent check compares objective(u^{k+1}, k) with objective(u^k, k).
struct DcProblem {
  /// (tilt, warm start, remaining residual budget or +inf) -> approximate minimizer.
  std::function<SubproblemSolution(const Vector& tilt, const Vector& warm, double budget)> g_solve;
  std::function<Vector(const Vector& u, int k)> h_subgrad;
  std::function<double(const Vector& u, int k)> objective;
  /// Whether the fixed-point test may stop the run after iteration k. Empty = always.
  std::function<bool(int k)> may_terminate;
  /// Optional dist(0, dg(u) - s). Without it criticality is measured by how far
  /// g_solve moves away from u.
  std::function<double(const Vector& u, const Vector& s)> stationarity;
};

struct DcOptions {
  int max_iter = 500;
  double fixed_point_tol = 0.0;  // infinity-norm; 0 demands bitwise equal iterates
  /// Inexact mode: cap on the running sum of squared subproblem residuals.
  std::optional<double> residual_budget;
};

enum class DcStatus { running, converged_fixed_point, max_iter };

struct DcRecord {
  double objective = 0.0;         // objective(u^{k+1}, k)
  double objective_before = 0.0;  // objective(u^k, k)
  double step_norm = 0.0;         // ||u^{k+1} - u^k||_inf
  double residual = 0.0;
  int inner_iterations = 0;
};

struct DcState {
  Vector u;
  Vector s;
  int k = 0;       // index of the last subproblem solved
  int solves = 0;  // number of subproblems solved
  std::vector<DcRecord> history;
  DcStatus status = DcStatus::running;
  double residual_sq_sum = 0.0;
  double initial_objective = 0.0;
  /// Largest observed increase objective(u^{k+1}, k) - objective(u^k, k); <= 0 for a descent run.
  double max_ascent = -std::numeric_limits<double>::infinity();
};

/// DC iteration: s^k in dh(u^k), u^{k+1} ~ argmin g(u) - <s^k, u>, stop when
/// consecutive iterates agree to fixed_point_tol (and may_terminate allows it).
/// Subproblem exceptions are rethrown as SolverError tagged with the iteration.
DcState dc_solve(const DcProblem& problem, const Vector& u0, const DcOptions& opts = {},
                 const std::function<void(const DcState&)>& on_step = {});

/// Zero when u minimizes g - <s, .>, i.e. s is a common subgradient of g and h
/// at u. Uses problem.stationarity when present, otherwise the step taken by
/// g_solve warm-started at u plus its reported residual.
double criticality_residual(const DcProblem& problem, const Vector& u, const Vector& s);

}  // namespace l0dc
