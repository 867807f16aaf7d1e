#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "l0dc/dc.hpp"
#include "l0dc/fem.hpp"
#include "l0dc/problems.hpp"
#include "l0dc/ssn.hpp"

namespace l0dc {

/// Value a_j used at nodes with u_j = 0 when forming the subgradient.
enum class ZeroSignRule { zero, plus, minus, sign_of_load };

enum class InitPolicy { unconstrained_solve, zero, custom };

struct L0PenaltyConfig {
  double K = 0.25;
  double rho = 1e9;
  std::optional<double> schedule_lambda;
  ZeroSignRule zero_sign = ZeroSignRule::zero;
  InitPolicy u0_policy = InitPolicy::unconstrained_solve;
  Vector u0_custom;  // dof vector, read when u0_policy == custom

  /// Offer zero elements to the greedy selection once the nonzero ones are placed.
  bool fill_zero_atoms = false;
  int max_dc_iter = 500;
  double ssn_tol = 1e-14;
  int max_newton = 100;
  /// Fixed tau for every subproblem; 0 selects the mesh-scaled rule.
  double tau = 0.0;
  /// Inexact mode: cap on the summed squared subproblem residuals.
  std::optional<double> residual_budget;
};

/// Throws OutOfRange unless 0 < K < mu(Omega) (K = mu(Omega) allowed), rho > 0
/// and schedule_lambda in (0, 1).
void validate(const L0PenaltyConfig& cfg, double domain_measure);

/// K_k for k = 0, 1, ... until the target is reached (single entry without a schedule).
std::vector<double> k_schedule(double K, double domain_measure, std::optional<double> lambda);

/// Thresholds c_j = rho * mu(patch_j) of the convex penalty part, on the dofs.
Vector penalty_thresholds(const FemSystem& system, double rho);

/// s = rho (D^T r) * a for a selection on w_u: r_i = mu(T_i) on selected
/// elements, a_j = sign(u_j), and a_j = zero_value[j] where u_j = 0.
Vector penalty_subgradient(const Vector& u, const FemSystem& system, double rho, const KSelection& selection,
                           const Vector& zero_value);

struct IterationRecord {
  int k = 0;
  double K_k = 0.0;
  double objective = 0.0;  // f + rho * gap at K_k, after the step
  double objective_before = 0.0;
  double f = 0.0;
  double gap = 0.0;  // at K_k
  int newton_iters = 0;
  double residual = 0.0;  // ||F_tau|| at the subproblem solution
  double tau = 0.0;
};

/// First-order diagnostics with g_hat_j = (H u - q)_j / mu(patch_j).
struct OptimalityReport {
  double pairing = 0.0;       // (H u - q)^T u
  double cond_support = 0.0;  // max |g_hat| on supported nodes with the whole patch in A*
  double cond_outside = 0.0;  // max |g_hat + rho sign(u)| on supported nodes outside A*
  double cond_zero = 0.0;     // max |g_hat| on zero nodes
  Index n_support = 0;
  Index n_outside = 0;
  Index n_zero = 0;
  double max_scaled_gradient = 0.0;
  bool exact_penalty = false;  // rho > max |g_hat|
  bool exact_selection = false;
  Vector scaled_gradient;  // nodal, zero on the boundary
};

struct L0Solution {
  Vector u;        // dofs
  Vector u_nodal;  // all nodes
  double objective = 0.0;  // smooth part f(u)
  double l0 = 0.0;
  double gap = 0.0;
  double w_l1 = 0.0;
  bool exact_selection = false;
  int dc_iters = 0;
  int newton_iters = 0;
  int reductions = 0;  // schedule steps until K_k = K
  DcStatus status = DcStatus::running;
  double initial_penalized = 0.0;  // f(u0) + rho gap(u0) at K_0
  double initial_f = 0.0;          // f(u0)
  double max_ascent = 0.0;         // largest increase of the penalized objective at fixed K_k
  std::vector<IterationRecord> history;
  OptimalityReport diagnostics;
  double tracking_error = 0.0;  // when the problem has a state
};

/// Penalized DC solve of min f(u) + rho (|w_u|_1 - |w_u|_K).
L0Solution solve_l0_penalized(const ProblemDef& problem, const FemSystem& system,
                              const L0PenaltyConfig& cfg,
                              const std::function<void(const IterationRecord&)>& on_iteration = {});

OptimalityReport optimality_report(const Vector& u, const ProblemDef& problem,
                                   const FemSystem& system, double rho, double K);

/// Reformulation gap and support measure of a dof vector; exact oracle when applicable.
struct FeasibilityInfo {
  double l0 = 0.0;
  double gap = 0.0;
  double w_l1 = 0.0;
  bool exact = false;
};
FeasibilityInfo feasibility(const Vector& u_nodal, const FemSystem& system, double K);

/// One solve per rho (increasing), each warm-started from the previous solution.
std::vector<L0Solution> penalty_sweep(const ProblemDef& problem, const FemSystem& system,
                                      const L0PenaltyConfig& cfg, const std::vector<double>& rhos);

}  // namespace l0dc
