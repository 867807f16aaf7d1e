#include "l0dc/ssn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SparseCholesky>

namespace l0dc {

Vector QuadraticOperator::solve_principal(std::span<const Index> active, const Vector& rhs) const {
  const auto m = static_cast<Index>(active.size());
  require_size(rhs.size(), m, "principal right-hand side");
  Vector x = Vector::Zero(m);
  if (m == 0) return x;
  Vector full = Vector::Zero(size());
  auto restricted_apply = [&](const Vector& p) {
    full.setZero();
    for (Index i = 0; i < m; ++i) full[active[i]] = p[i];
    const Vector hp = apply(full);
    Vector out(m);
    for (Index i = 0; i < m; ++i) out[i] = hp[active[i]];
    return out;
  };
  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  const double stop = cg_tolerance * cg_tolerance * std::max(rhs.squaredNorm(), 1e-300);
  const int max_iter = static_cast<int>(std::max<Index>(10 * m, 1000));
  for (int it = 0; it < max_iter && rr > stop; ++it) {
    const Vector hp = restricted_apply(p);
    const double php = p.dot(hp);
    if (!(php > 0.0)) throw SolverError("conjugate gradients: operator not positive definite");
    const double alpha = rr / php;
    x += alpha * p;
    r -= alpha * hp;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (rr > stop) throw SolverError("conjugate gradients did not reach the requested tolerance");
  return x;
}

SparseMatrix principal_submatrix(const SparseMatrix& H, std::span<const Index> active) {
  std::vector<Index> pos(static_cast<std::size_t>(H.rows()), -1);
  for (std::size_t i = 0; i < active.size(); ++i) pos[static_cast<std::size_t>(active[i])] = static_cast<Index>(i);
  std::vector<Triplet> trips;
  for (std::size_t jc = 0; jc < active.size(); ++jc) {
    for (SparseMatrix::InnerIterator it(H, active[jc]); it; ++it) {
      const Index ir = pos[static_cast<std::size_t>(it.row())];
      if (ir >= 0) trips.emplace_back(ir, static_cast<Index>(jc), it.value());
    }
  }
  const auto m = static_cast<Index>(active.size());
  SparseMatrix out(m, m);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseQuadratic::SparseQuadratic(SparseMatrix H) : H_(std::move(H)) {
  if (H_.rows() != H_.cols()) throw DimensionMismatch("quadratic operator must be square");
  H_.makeCompressed();
}

Vector SparseQuadratic::solve_principal(std::span<const Index> active, const Vector& rhs) const {
  require_size(rhs.size(), static_cast<Index>(active.size()), "principal right-hand side");
  if (active.empty()) return Vector();
  const SparseMatrix block = principal_submatrix(H_, active);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(block);
  if (ldlt.info() != Eigen::Success) throw SolverError("singular principal system");
  Vector x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) throw SolverError("singular principal system");
  return x;
}

L1Weights::L1Weights(Vector thresholds) : c(std::move(thresholds)) {
  for (Index i = 0; i < c.size(); ++i) {
    if (!(c[i] >= 0.0) || !std::isfinite(c[i])) {
      throw OutOfRange("l1 weight " + std::to_string(i) + " must be finite and nonnegative");
    }
  }
}

L1Subproblem::L1Subproblem(const QuadraticOperator& op, Vector q_, L1Weights w, Vector tilt_)
    : H(&op), q(std::move(q_)), tilt(std::move(tilt_)), weights(std::move(w)) {
  require_size(q.size(), op.size(), "linear term");
  require_size(weights.size(), op.size(), "l1 weights");
  if (tilt.size() != 0) require_size(tilt.size(), op.size(), "tilt");
}

double L1Subproblem::objective(const Vector& u) const {
  const Vector hu = H->apply(u);
  double lin = q.dot(u);
  if (tilt.size() != 0) lin += tilt.dot(u);
  return 0.5 * u.dot(hu) - lin + weights.c.dot(u.cwiseAbs());
}

namespace {

// F_tau from the smooth gradient d = H u - q. With g = d - t the three cases
// of g - clamp(g - u/tau, -c, c) are evaluated as d - (t + c), d - (t - c) and
// u/tau; grouping t with c keeps exact cancellation when t = -/+ c.
Vector residual_from_gradient(const L1Subproblem& prob, const Vector& u, const Vector& d, double tau) {
  const Index n = u.size();
  Vector F(n);
  for (Index i = 0; i < n; ++i) {
    const double t = prob.tilt_at(i);
    const double c = prob.weights.c[i];
    const double z = (d[i] - t) - u[i] / tau;
    if (z > c) {
      F[i] = d[i] - (t + c);
    } else if (z < -c) {
      F[i] = d[i] - (t - c);
    } else {
      F[i] = u[i] / tau;
    }
  }
  return F;
}

}  // namespace

Vector f_tau_residual(const L1Subproblem& prob, const Vector& u, double tau) {
  if (!(tau > 0.0)) throw OutOfRange("tau must be positive");
  require_size(u.size(), prob.size(), "iterate");
  return residual_from_gradient(prob, u, prob.smooth_gradient(u), tau);
}

Vector f_tau_residual(const Vector& u, const QuadraticOperator& H, const Vector& q,
                      const L1Weights& weights, double tau) {
  return f_tau_residual(L1Subproblem(H, q, weights), u, tau);
}

double mesh_scaled_tau(const Vector& warm, double rho, double max_patch_measure, double fallback_scale) {
  double scale = warm.size() == 0 ? 0.0 : warm.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) scale = fallback_scale;
  const double tau = 100.0 * scale / (rho * max_patch_measure);
  return std::isfinite(tau) ? std::max(tau, 1e-16) : 1e-16;
}

double power_iteration(const QuadraticOperator& H, int iterations, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vector v(H.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(gen);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector hv = H.apply(v);
    lambda = v.dot(hv);
    const double nrm = hv.norm();
    if (nrm == 0.0) return 0.0;
    v = hv / nrm;
  }
  return lambda;
}

Vector prox_grad_step(const L1Subproblem& prob, const Vector& u, double L) {
  const Vector d = prob.smooth_gradient(u);
  Vector next(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    // soft-threshold of z + t/L at c/L, with z = u - d/L; t and c are combined first.
    const double z = u[i] - d[i] / L;
    const double t = prob.tilt_at(i);
    const double c = prob.weights.c[i];
    const double shifted = z + t / L;
    if (shifted > c / L) {
      next[i] = z + (t - c) / L;
    } else if (shifted < -c / L) {
      next[i] = z + (t + c) / L;
    } else {
      next[i] = 0.0;
    }
  }
  return next;
}

ProxGradResult prox_grad_oracle(const L1Subproblem& prob, const ProxGradOptions& opts, const Vector& start) {
  double L = opts.lipschitz;
  if (L <= 0.0) L = 1.1 * power_iteration(*prob.H, 500);
  if (!(L > 0.0)) throw SolverError("proximal gradient: nonpositive Lipschitz estimate");
  ProxGradResult res;
  res.u = start.size() == 0 ? Vector::Zero(prob.size()) : start;
  for (int it = 0; it < opts.max_iter; ++it) {
    Vector next = prox_grad_step(prob, res.u, L);
    const double step = (next - res.u).lpNorm<Eigen::Infinity>();
    res.u = std::move(next);
    res.iterations = it + 1;
    if (step <= opts.tol) {
      res.converged = true;
      return res;
    }
  }
  throw SolverError("proximal gradient oracle hit its iteration cap");
}

double optimality_defect(const L1Subproblem& prob, const Vector& u) {
  const Vector d = prob.smooth_gradient(u);
  double worst = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double t = prob.tilt_at(i);
    const double c = prob.weights.c[i];
    double defect = 0.0;
    if (u[i] == 0.0) {
      defect = std::max(0.0, std::abs(d[i] - t) - c);
    } else {
      const double sc = u[i] > 0.0 ? c : -c;
      defect = std::abs(d[i] - (t - sc));
    }
    worst = std::max(worst, defect);
  }
  return worst;
}

SsnResult ssn_solve(const L1Subproblem& prob, const Vector& warm, const SsnOptions& opts) {
  if (!(opts.tau > 0.0)) throw OutOfRange("tau must be positive");
  const Index n = prob.size();
  SsnResult res;
  res.u = warm.size() == 0 ? Vector::Zero(n) : warm;
  require_size(res.u.size(), n, "warm start");

  Vector d = prob.smooth_gradient(res.u);
  Vector F = residual_from_gradient(prob, res.u, d, opts.tau);
  res.residual_norm = F.norm();
  if (res.residual_norm <= opts.tol) {
    res.status = SsnStatus::converged;
    return res;
  }

  Vector best_u = res.u;
  double best_norm = res.residual_norm;
  int non_decrease = 0;
  double lipschitz = 0.0;
  std::vector<Index> previous_active;
  std::vector<double> previous_sigma;
  bool previous_was_repeat = false;

  while (res.iterations < opts.max_newton) {
    // Active set: |g - u/tau| > c, bound sigma = sign(g - u/tau) c.
    std::vector<Index> active;
    std::vector<double> sigma;
    for (Index i = 0; i < n; ++i) {
      const double t = prob.tilt_at(i);
      const double c = prob.weights.c[i];
      const double z = (d[i] - t) - res.u[i] / opts.tau;
      if (z > c) {
        active.push_back(i);
        sigma.push_back(c);
      } else if (z < -c) {
        active.push_back(i);
        sigma.push_back(-c);
      }
    }
    const bool repeat = active == previous_active && sigma == previous_sigma;
    if (repeat && previous_was_repeat) {
      // Same active set and signs twice in a row: the Newton map has reached its
      // fixed point and further solves only reproduce round-off.
      res.status = SsnStatus::stalled;
      break;
    }
    previous_was_repeat = repeat;

    // H_AA u_A = q_A + tilt_A + sigma_A, u_I = 0, solved as a correction of the
    // current u_A so that a repeated active set refines the previous solve.
    Vector next = Vector::Zero(n);
    for (const Index i : active) next[i] = res.u[i];
    const Vector Hnext = prob.H->apply(next);
    Vector rhs(static_cast<Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Index i = active[k];
      rhs[static_cast<Index>(k)] = (prob.q[i] - Hnext[i]) + (prob.tilt_at(i) + sigma[k]);
    }
    const Vector delta = prob.H->solve_principal(active, rhs);
    for (std::size_t k = 0; k < active.size(); ++k) next[active[k]] += delta[static_cast<Index>(k)];
    ++res.iterations;
    previous_active = std::move(active);
    previous_sigma = std::move(sigma);

    res.u = std::move(next);
    d = prob.smooth_gradient(res.u);
    F = residual_from_gradient(prob, res.u, d, opts.tau);
    res.residual_norm = F.norm();
    if (res.residual_norm < best_norm) {
      best_norm = res.residual_norm;
      best_u = res.u;
      non_decrease = 0;
    } else {
      ++non_decrease;
    }
    if (res.residual_norm <= opts.tol) {
      res.status = SsnStatus::converged;
      return res;
    }

    if (non_decrease >= opts.stall_window) {
      // Proximal-gradient steps from the best iterate until ||F|| halves.
      if (lipschitz == 0.0) lipschitz = 1.1 * power_iteration(*prob.H, 300);
      res.u = best_u;
      const double target = 0.5 * best_norm;
      for (int it = 0; it < opts.fallback_max_steps; ++it) {
        res.u = prox_grad_step(prob, res.u, lipschitz);
        ++res.fallback_steps;
        d = prob.smooth_gradient(res.u);
        F = residual_from_gradient(prob, res.u, d, opts.tau);
        if (F.norm() <= target) break;
      }
      res.residual_norm = F.norm();
      if (res.residual_norm < best_norm) {
        best_norm = res.residual_norm;
        best_u = res.u;
      }
      if (res.residual_norm <= opts.tol) {
        res.status = SsnStatus::converged;
        return res;
      }
      non_decrease = 0;
      previous_active.clear();
      previous_sigma.clear();
      previous_was_repeat = false;
    }
  }
  if (res.status != SsnStatus::stalled) res.status = SsnStatus::max_newton;
  res.u = best_u;
  res.residual_norm = best_norm;
  return res;
}

}  // namespace l0dc
