#include "l0dc/dc.hpp"

#include <cmath>
#include <exception>
#include <string>

namespace l0dc {

DcState dc_solve(const DcProblem& problem, const Vector& u0, const DcOptions& opts,
                 const std::function<void(const DcState&)>& on_step) {
  if (!problem.g_solve || !problem.h_subgrad || !problem.objective) {
    throw Error("dc_solve: g_solve, h_subgrad and objective are required");
  }
  DcState state;
  state.u = u0;
  state.initial_objective = problem.objective(u0, 0);
  if (!std::isfinite(state.initial_objective)) throw OutOfRange("dc_solve: objective not finite at u0");

  for (int k = 0; k < opts.max_iter; ++k) {
    state.k = k;
    state.s = problem.h_subgrad(state.u, k);
    const double before = problem.objective(state.u, k);

    double budget = std::numeric_limits<double>::infinity();
    if (opts.residual_budget) budget = *opts.residual_budget - state.residual_sq_sum;

    SubproblemSolution next;
    try {
      next = problem.g_solve(state.s, state.u, budget);
    } catch (const std::exception& e) {
      throw SolverError("DC iteration " + std::to_string(k) + ": " + e.what());
    }
    require_size(next.u.size(), state.u.size(), "subproblem solution");
    ++state.solves;

    if (opts.residual_budget) {
      const double sq = next.residual * next.residual;
      if (state.residual_sq_sum + sq > *opts.residual_budget) {
        throw SolverError("DC iteration " + std::to_string(k) +
                          ": subproblem residual exhausts the residual budget");
      }
      state.residual_sq_sum += sq;
    } else {
      state.residual_sq_sum += next.residual * next.residual;
    }

    DcRecord rec;
    rec.objective_before = before;
    rec.objective = problem.objective(next.u, k);
    rec.step_norm = (next.u - state.u).lpNorm<Eigen::Infinity>();
    rec.residual = next.residual;
    rec.inner_iterations = next.inner_iterations;
    state.max_ascent = std::max(state.max_ascent, rec.objective - rec.objective_before);
    state.history.push_back(rec);

    const bool stop_allowed = !problem.may_terminate || problem.may_terminate(k);
    const bool fixed = rec.step_norm <= opts.fixed_point_tol;
    state.u = std::move(next.u);
    if (on_step) on_step(state);
    if (fixed && stop_allowed) {
      state.status = DcStatus::converged_fixed_point;
      return state;
    }
  }
  state.status = DcStatus::max_iter;
  return state;
}

double criticality_residual(const DcProblem& problem, const Vector& u, const Vector& s) {
  if (problem.stationarity) return problem.stationarity(u, s);
  const SubproblemSolution sol =
      problem.g_solve(s, u, std::numeric_limits<double>::infinity());
  return (sol.u - u).lpNorm<Eigen::Infinity>() + sol.residual;
}

}  // namespace l0dc
