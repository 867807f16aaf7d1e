#include "l0dc/sparsa.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace l0dc {

L1Weights sparsa_weights(const FemSystem& system, double beta) {
  if (!(beta >= 0.0)) throw OutOfRange("beta must be nonnegative");
  return L1Weights(beta * system.dof_values(system.basis_integral));
}

namespace {

Vector soft_threshold(const Vector& z, const Vector& c, double alpha) {
  Vector out(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double t = c[i] / alpha;
    out[i] = z[i] > t ? z[i] - t : (z[i] < -t ? z[i] + t : 0.0);
  }
  return out;
}

}  // namespace

SparsaResult sparsa_solve(const QuadraticOperator& H, const Vector& q, const L1Weights& weights,
                          const SparsaConfig& cfg, const Vector& u0) {
  require_size(q.size(), H.size(), "linear term");
  require_size(weights.size(), H.size(), "l1 weights");
  require_size(u0.size(), H.size(), "initial iterate");
  if (cfg.M < 1 || !(cfg.eta > 1.0) || !(cfg.sigma > 0.0) || !(cfg.alpha_min > 0.0) ||
      !(cfg.alpha_max >= cfg.alpha_min) || !(cfg.rel_tol > 0.0)) {
    throw OutOfRange("invalid SpaRSA parameters");
  }
  const L1Subproblem prob(H, q, weights);
  SparsaResult res;
  res.u = u0;
  Vector grad = prob.smooth_gradient(res.u);
  double phi = prob.objective(res.u);
  std::deque<double> recent{phi};
  double alpha = std::clamp(cfg.alpha0, cfg.alpha_min, cfg.alpha_max);

  for (int k = 0; k < cfg.max_iter; ++k) {
    const double ref = *std::max_element(recent.begin(), recent.end());
    Vector next, du;
    double phi_next = 0.0;
    while (true) {
      next = soft_threshold(res.u - grad / alpha, weights.c, alpha);
      du = next - res.u;
      phi_next = prob.objective(next);
      if (phi_next <= ref - 0.5 * cfg.sigma * alpha * du.squaredNorm()) break;
      if (du.squaredNorm() == 0.0 || alpha >= cfg.alpha_max) break;
      alpha = std::min(cfg.eta * alpha, cfg.alpha_max);
    }
    const Vector grad_next = prob.smooth_gradient(next);
    const double step_sq = du.squaredNorm();
    const double rel_obj = std::abs(phi_next - phi) / std::max(std::abs(phi), 1e-300);
    const double nrm = next.norm();
    const double rel_step = nrm > 0.0 ? std::sqrt(step_sq) / nrm : std::sqrt(step_sq);

    const Vector dg = grad_next - grad;
    res.u = std::move(next);
    grad = grad_next;
    phi = phi_next;
    res.iterations = k + 1;
    res.alpha_final = alpha;
    recent.push_back(phi);
    if (static_cast<int>(recent.size()) > cfg.M) recent.pop_front();

    if ((rel_obj <= cfg.rel_tol && rel_step <= cfg.rel_tol) || step_sq == 0.0) {
      res.converged = true;
      res.objective = phi;
      return res;
    }
    alpha = std::clamp(dg.dot(du) / step_sq, cfg.alpha_min, cfg.alpha_max);
  }
  throw SolverError("SpaRSA reached the iteration cap of " + std::to_string(cfg.max_iter));
}

}  // namespace l0dc
