#include <doctest.h>

#include "l0dc/l0_solver.hpp"

using namespace l0dc;

namespace {

struct Prototype {
  FemSystem sys;
  ProblemDef problem;
  explicit Prototype(int n) : sys(assemble(build_structured_mesh(n), prototype_load)), problem(poisson_prototype(sys)) {}
};

}  // namespace

TEST_CASE("K schedule") {
  const auto s = k_schedule(0.25, 1.0, 0.9);
  CHECK(s.size() == 14);
  CHECK(s.back() == 0.25);
  CHECK(s[12] > 0.25);
  CHECK(s.front() == doctest::Approx(0.9));
  CHECK(k_schedule(0.25, 1.0, std::nullopt) == std::vector<double>{0.25});
}

TEST_CASE("configuration validation") {
  L0PenaltyConfig cfg;
  CHECK_NOTHROW(validate(cfg, 1.0));
  cfg.K = 0.0;
  CHECK_THROWS_AS(validate(cfg, 1.0), OutOfRange);
  cfg.K = 1.5;
  CHECK_THROWS_AS(validate(cfg, 1.0), OutOfRange);
  cfg.K = 0.25;
  cfg.rho = -1.0;
  CHECK_THROWS_AS(validate(cfg, 1.0), OutOfRange);
  cfg.rho = 1.0;
  cfg.schedule_lambda = 1.0;
  CHECK_THROWS_AS(validate(cfg, 1.0), OutOfRange);
}

TEST_CASE("prototype solve on a coarse mesh") {
  const Prototype p(16);
  const L0PenaltyConfig cfg;
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK(s.status == DcStatus::converged_fixed_point);
  CHECK(s.gap <= 1e-12 * s.w_l1);
  CHECK(s.l0 <= cfg.K + 1e-12);
  CHECK(s.dc_iters <= 8);
  CHECK(s.objective < 0.0);
  CHECK(s.max_ascent <= 1e-12 * (1.0 + std::abs(s.initial_penalized)));
  CHECK(std::abs(s.diagnostics.pairing) <= 1e-10 * (1.0 + std::abs(s.objective)));
  CHECK(s.diagnostics.cond_zero <= cfg.rho);
  CHECK(s.diagnostics.n_outside == 0);
  CHECK(s.diagnostics.cond_support <= 1e-6);
  CHECK(s.history.size() == static_cast<std::size_t>(s.dc_iters));
  CHECK(s.history.back().residual <= 1e-14);
}

TEST_CASE("vacuous budget returns the unconstrained minimizer") {
  const Prototype p(8);
  L0PenaltyConfig cfg;
  cfg.K = p.sys.domain_measure();
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK((s.u - unconstrained_minimizer(p.problem)).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(s.gap == 0.0);
}

TEST_CASE("zero start with zero signs degenerates to the zero solution") {
  const Prototype p(16);
  L0PenaltyConfig cfg;
  cfg.u0_policy = InitPolicy::zero;
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK(s.history.front().f == 0.0);
  CHECK(s.u.isZero());
}

TEST_CASE("nonzero sign rules move away from the zero start") {
  const Prototype p(8);
  L0PenaltyConfig cfg;
  cfg.u0_policy = InitPolicy::zero;
  cfg.zero_sign = ZeroSignRule::plus;
  cfg.fill_zero_atoms = true;
  cfg.schedule_lambda = 0.9;
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK(s.u.maxCoeff() > 0.0);
  CHECK(s.u.minCoeff() >= 0.0);
  CHECK(s.gap == 0.0);
}

TEST_CASE("small penalty leaves a positive gap") {
  const Prototype p(3);
  L0PenaltyConfig cfg;
  cfg.K = p.sys.elem_measure[0];
  cfg.rho = 1e-6;
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK(s.gap > 0.0);
  CHECK(s.l0 > cfg.K);
  CHECK_FALSE(s.diagnostics.n_outside == 0);
}

TEST_CASE("schedule reaches the target before terminating") {
  const Prototype p(16);
  L0PenaltyConfig cfg;
  cfg.schedule_lambda = 0.9;
  const L0Solution s = solve_l0_penalized(p.problem, p.sys, cfg);
  CHECK(s.reductions == 14);
  CHECK(s.dc_iters >= 14);
  CHECK(s.history.back().K_k == 0.25);
  CHECK(s.gap == 0.0);
  cfg.max_dc_iter = 10;
  CHECK_THROWS_AS(solve_l0_penalized(p.problem, p.sys, cfg), SolverError);
}

TEST_CASE("penalty sweep warm starts in increasing order") {
  const Prototype p(8);
  const auto sols = penalty_sweep(p.problem, p.sys, L0PenaltyConfig{}, {1e3, 1e6, 1e9});
  REQUIRE(sols.size() == 3);
  for (const auto& s : sols) CHECK(s.gap == 0.0);
  CHECK_THROWS_AS(penalty_sweep(p.problem, p.sys, L0PenaltyConfig{}, {1e6, 1e3}), OutOfRange);
  const auto one = penalty_sweep(p.problem, p.sys, L0PenaltyConfig{}, {1e9});
  CHECK(one[0].u == solve_l0_penalized(p.problem, p.sys, L0PenaltyConfig{}).u);
}

TEST_CASE("report at zero") {
  const Prototype p(8);
  const OptimalityReport r = optimality_report(Vector::Zero(p.problem.size()), p.problem, p.sys, 1e9, 0.25);
  CHECK(r.pairing == 0.0);
  CHECK(r.n_support == 0);
  CHECK(r.n_outside == 0);
  CHECK(r.n_zero == p.problem.size());
}

TEST_CASE("control solve") {
  const FemSystem sys = assemble(build_structured_mesh(16), prototype_load);
  const ProblemDef p = control_reduced(sys);
  const L0Solution s = solve_l0_penalized(p, sys, L0PenaltyConfig{});
  CHECK(s.gap == 0.0);
  CHECK(s.dc_iters <= 8);
  CHECK(s.tracking_error > 0.0);
}
