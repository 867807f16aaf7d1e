#include "l0dc/l0_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace l0dc {

void validate(const L0PenaltyConfig& cfg, double domain_measure) {
  const double slack = 1e-12 * domain_measure;
  if (!(cfg.K > 0.0) || cfg.K > domain_measure + slack) {
    throw OutOfRange("K must lie in (0, " + std::to_string(domain_measure) + "], got " + std::to_string(cfg.K));
  }
  if (!(cfg.rho > 0.0) || !std::isfinite(cfg.rho)) throw OutOfRange("rho must be positive and finite");
  if (cfg.schedule_lambda && !(*cfg.schedule_lambda > 0.0 && *cfg.schedule_lambda < 1.0)) {
    throw OutOfRange("schedule lambda must lie in (0, 1)");
  }
  if (cfg.max_dc_iter < 1) throw OutOfRange("max_dc_iter must be positive");
  if (cfg.tau < 0.0) throw OutOfRange("tau must be nonnegative");
}

std::vector<double> k_schedule(double K, double domain_measure, std::optional<double> lambda) {
  if (!lambda) return {K};
  std::vector<double> out;
  double prev = domain_measure;
  while (true) {
    const double next = std::max(*lambda * prev, K);
    out.push_back(next);
    if (next == K) break;
    prev = next;
  }
  return out;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Vector penalty_thresholds(const FemSystem& system, double rho) { return rho * system.dof_values(system.patch_measure); }

// The per-node sums run over elements in the same order as the patch measures,
// so a fully selected patch reproduces the threshold c_j bit for bit.
Vector penalty_subgradient(const Vector& u, const FemSystem& system, double rho, const KSelection& selection,
                           const Vector& zero_value) {
  require_size(u.size(), system.num_dofs(), "dof vector");
  require_size(zero_value.size(), system.num_dofs(), "zero-sign values");
  require_size(selection.n_atoms, system.num_elements(), "selection");
  std::vector<bool> in(static_cast<std::size_t>(system.num_elements()), false);
  for (Index t : selection.indices) in[static_cast<std::size_t>(t)] = true;
  Vector acc = Vector::Zero(system.num_nodes());
  for (Index t = 0; t < system.num_elements(); ++t) {
    if (!in[static_cast<std::size_t>(t)]) continue;
    for (Index v : system.mesh.triangles[static_cast<std::size_t>(t)]) acc[v] += system.elem_measure[t];
  }
  Vector s(u.size());
  for (Index d = 0; d < u.size(); ++d) {
    const double a = u[d] != 0.0 ? sign(u[d]) : zero_value[d];
    s[d] = rho * acc[system.free_nodes[static_cast<std::size_t>(d)]] * a;
  }
  return s;
}

namespace {

class PenalizedModel {
 public:
  PenalizedModel(const ProblemDef& problem, const FemSystem& system, const L0PenaltyConfig& cfg)
      : problem_(problem),
        system_(system),
        cfg_(cfg),
        space_(system.element_space()),
        schedule_(k_schedule(cfg.K, system.domain_measure(), cfg.schedule_lambda)) {
    const Index n = system.num_dofs();
    c_ = penalty_thresholds(system, cfg.rho);
    max_patch_ = system.patch_measure.maxCoeff();
    zero_value_ = Vector::Zero(n);
    for (Index d = 0; d < n; ++d) {
      switch (cfg.zero_sign) {
        case ZeroSignRule::zero: break;
        case ZeroSignRule::plus: zero_value_[d] = 1.0; break;
        case ZeroSignRule::minus: zero_value_[d] = -1.0; break;
        case ZeroSignRule::sign_of_load: zero_value_[d] = sign(problem.q_smooth[d]); break;
      }
    }
  }

  const std::vector<double>& schedule() const { return schedule_; }
  double K_at(int k) const {
    return schedule_[static_cast<std::size_t>(std::min<int>(k, static_cast<int>(schedule_.size()) - 1))];
  }

  KSelection select(const Vector& w, int k) const {
    return largest_k_greedy(w, space_, K_at(k), kZeroThreshold, cfg_.fill_zero_atoms);
  }

  double gap(const Vector& u, int k) const {
    const Vector w = w_of(system_.expand(u), system_);
    return gap_outside(w, space_, select(w, k));
  }

  double penalized(const Vector& u, int k) const { return problem_.smooth_value(u) + cfg_.rho * gap(u, k); }

  Vector subgradient(const Vector& u, int k) const {
    return penalty_subgradient(u, system_, cfg_.rho, select(w_of(system_.expand(u), system_), k), zero_value_);
  }

  SubproblemSolution solve(const Vector& tilt, const Vector& warm) {
    const L1Subproblem sub(*problem_.hessian, problem_.q_smooth, L1Weights(c_), tilt);
    SsnOptions opts;
    opts.tol = cfg_.ssn_tol;
    opts.max_newton = cfg_.max_newton;
    opts.tau = cfg_.tau > 0.0 ? cfg_.tau
                              : mesh_scaled_tau(warm, cfg_.rho, max_patch_,
                                                std::numeric_limits<double>::epsilon());
    last_tau = opts.tau;
    const SsnResult r = ssn_solve(sub, warm, opts);
    last_newton = r.iterations;
    SubproblemSolution out;
    out.u = r.u;
    out.residual = r.residual_norm;
    out.inner_iterations = r.iterations;
    return out;
  }

  double last_tau = 0.0;
  int last_newton = 0;

 private:
  const ProblemDef& problem_;
  const FemSystem& system_;
  const L0PenaltyConfig& cfg_;
  DiscreteMeasureSpace space_;
  std::vector<double> schedule_;
  Vector c_;
  Vector zero_value_;
  double max_patch_ = 0.0;
};

Vector initial_iterate(const ProblemDef& problem, const L0PenaltyConfig& cfg) {
  switch (cfg.u0_policy) {
    case InitPolicy::unconstrained_solve: return unconstrained_minimizer(problem);
    case InitPolicy::zero: return Vector::Zero(problem.size());
    case InitPolicy::custom:
      require_size(cfg.u0_custom.size(), problem.size(), "initial iterate");
      return cfg.u0_custom;
  }
  return Vector::Zero(problem.size());
}

}  // namespace

FeasibilityInfo feasibility(const Vector& u_nodal, const FemSystem& system, double K) {
  const Vector w = w_of(u_nodal, system);
  const DiscreteMeasureSpace space = system.element_space();
  const GapResult g = reformulation_gap(w, space, K);
  FeasibilityInfo info;
  info.l0 = weighted_l0(w, space);
  info.gap = g.gap;
  info.w_l1 = g.l1;
  info.exact = g.exact;
  return info;
}

OptimalityReport optimality_report(const Vector& u, const ProblemDef& problem, const FemSystem& system,
                                   double rho, double K) {
  require_size(u.size(), system.num_dofs(), "dof vector");
  OptimalityReport rep;
  const Vector d = problem.hessian->apply(u) - problem.q_smooth;
  rep.pairing = d.dot(u);

  const Vector u_nodal = system.expand(u);
  const Vector w = w_of(u_nodal, system);
  const DiscreteMeasureSpace space = system.element_space();
  const KSelection sel = exact_oracle_applicable(w, space, K) ? largest_k_exact(w, space, K)
                                                              : largest_k_greedy(w, space, K);
  rep.exact_selection = sel.exact;
  std::vector<bool> in(static_cast<std::size_t>(w.size()), false);
  for (Index t : sel.indices) in[static_cast<std::size_t>(t)] = true;
  std::vector<int> total(static_cast<std::size_t>(system.num_nodes()), 0);
  std::vector<int> chosen(static_cast<std::size_t>(system.num_nodes()), 0);
  for (Index t = 0; t < system.num_elements(); ++t) {
    for (Index v : system.mesh.triangles[static_cast<std::size_t>(t)]) {
      ++total[static_cast<std::size_t>(v)];
      if (in[static_cast<std::size_t>(t)]) ++chosen[static_cast<std::size_t>(v)];
    }
  }

  rep.scaled_gradient = Vector::Zero(system.num_nodes());
  for (Index dof = 0; dof < u.size(); ++dof) {
    const Index node = system.free_nodes[static_cast<std::size_t>(dof)];
    const double g = d[dof] / system.patch_measure[node];
    rep.scaled_gradient[node] = g;
    rep.max_scaled_gradient = std::max(rep.max_scaled_gradient, std::abs(g));
    if (std::abs(u[dof]) <= kZeroThreshold) {
      rep.cond_zero = std::max(rep.cond_zero, std::abs(g));
      ++rep.n_zero;
    } else if (chosen[static_cast<std::size_t>(node)] == total[static_cast<std::size_t>(node)]) {
      rep.cond_support = std::max(rep.cond_support, std::abs(g));
      ++rep.n_support;
    } else {
      rep.cond_outside = std::max(rep.cond_outside, std::abs(g + rho * sign(u[dof])));
      ++rep.n_outside;
    }
  }
  rep.exact_penalty = rho > rep.max_scaled_gradient;
  return rep;
}

L0Solution solve_l0_penalized(const ProblemDef& problem, const FemSystem& system, const L0PenaltyConfig& cfg,
                              const std::function<void(const IterationRecord&)>& on_iteration) {
  require_size(problem.size(), system.num_dofs(), "problem dimension");
  validate(cfg, system.domain_measure());
  PenalizedModel model(problem, system, cfg);
  const auto n_sched = static_cast<int>(model.schedule().size());
  if (n_sched > cfg.max_dc_iter) {
    throw SolverError("K schedule needs " + std::to_string(n_sched) + " iterations, more than max_dc_iter = " +
                      std::to_string(cfg.max_dc_iter));
  }

  DcProblem dc;
  dc.g_solve = [&model](const Vector& tilt, const Vector& warm, double) { return model.solve(tilt, warm); };
  dc.h_subgrad = [&model](const Vector& u, int k) { return model.subgradient(u, k); };
  dc.objective = [&model](const Vector& u, int k) { return model.penalized(u, k); };
  dc.may_terminate = [n_sched](int k) { return k >= n_sched - 1; };

  DcOptions opts;
  opts.max_iter = cfg.max_dc_iter;
  opts.residual_budget = cfg.residual_budget;

  L0Solution sol;
  const Vector u0 = initial_iterate(problem, cfg);
  auto on_step = [&](const DcState& st) {
    const DcRecord& rec = st.history.back();
    IterationRecord it;
    it.k = st.k;
    it.K_k = model.K_at(st.k);
    it.objective = rec.objective;
    it.objective_before = rec.objective_before;
    it.f = problem.smooth_value(st.u);
    it.gap = model.gap(st.u, st.k);
    it.newton_iters = rec.inner_iterations;
    it.residual = rec.residual;
    it.tau = model.last_tau;
    sol.history.push_back(it);
    if (on_iteration) on_iteration(it);
  };
  const DcState st = dc_solve(dc, u0, opts, on_step);

  sol.u = st.u;
  sol.u_nodal = system.expand(st.u);
  sol.objective = problem.smooth_value(st.u);
  const FeasibilityInfo fi = feasibility(sol.u_nodal, system, cfg.K);
  sol.l0 = fi.l0;
  sol.gap = fi.gap;
  sol.w_l1 = fi.w_l1;
  sol.exact_selection = fi.exact;
  sol.dc_iters = st.solves;
  for (const auto& rec : st.history) sol.newton_iters += rec.inner_iterations;
  sol.reductions = cfg.schedule_lambda ? n_sched : 0;
  sol.status = st.status;
  sol.initial_penalized = st.initial_objective;
  sol.initial_f = problem.smooth_value(u0);
  sol.max_ascent = st.max_ascent;
  sol.diagnostics = optimality_report(st.u, problem, system, cfg.rho, cfg.K);
  if (problem.tracking_error) sol.tracking_error = problem.tracking_error(st.u);
  return sol;
}

std::vector<L0Solution> penalty_sweep(const ProblemDef& problem, const FemSystem& system,
                                      const L0PenaltyConfig& cfg, const std::vector<double>& rhos) {
  for (std::size_t i = 1; i < rhos.size(); ++i) {
    if (!(rhos[i] > rhos[i - 1])) throw OutOfRange("penalty values must be strictly increasing");
  }
  std::vector<L0Solution> out;
  L0PenaltyConfig run = cfg;
  for (double rho : rhos) {
    run.rho = rho;
    out.push_back(solve_l0_penalized(problem, system, run));
    run.u0_policy = InitPolicy::custom;
    run.u0_custom = out.back().u;
  }
  return out;
}

}  // namespace l0dc
