#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "l0dc/fem.hpp"
#include "l0dc/l0_solver.hpp"
#include "l0dc/problems.hpp"
#include "l0dc/sparsa.hpp"

namespace l0dc::cli {

namespace {

struct ConfigError : Error {
  using Error::Error;
};

struct Options {
  int n = 128;
  std::string mesh_file;
  double K = 0.25;
  double rho = 1e9;
  double lambda = 0.0;  // 0: no schedule
  std::string zero_sign = "zero";
  std::string u0 = "unconstrained";
  std::string u0_file;
  std::string config_file;
  std::uint64_t seed = 0;
  std::string csv;
  std::string history;
  std::string field;
  std::string multiplier;
  bool verify = false;
  int max_dc_iter = 500;
  double ssn_tol = 1e-14;
  double tau = 0.0;
  bool fill_zero = false;

  double alpha = 1e-7;
  double beta = -1.0;  // negative: equal to alpha
  std::string yd_file;

  double l1_beta = 0.0;
  double rel_tol = 1e-5;
  int max_iter = 20000;

  std::string problem = "poisson";
  std::string param = "rho";
  std::vector<double> values;
  int jobs = 1;
};

using Row = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void write_rows(std::ostream& out, const std::vector<Row>& rows) {
  if (rows.empty()) return;
  for (std::size_t i = 0; i < rows[0].size(); ++i) out << (i ? "," : "") << rows[0][i].first;
  out << '\n';
  for (const Row& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i].second;
    out << '\n';
  }
}

void emit(const Options& o, std::ostream& out, const std::vector<Row>& rows) {
  if (o.csv.empty()) {
    write_rows(out, rows);
    return;
  }
  std::ofstream f(o.csv);
  if (!f) throw ConfigError("cannot write " + o.csv);
  write_rows(f, rows);
}

FemSystem make_system(const Options& o, const ScalarField& load) {
  TriMesh mesh;
  try {
    mesh = o.mesh_file.empty() ? build_structured_mesh(o.n) : import_mesh(o.mesh_file);
  } catch (const MeshError& e) {
    throw ConfigError(e.what());
  }
  return assemble(mesh, load);
}

Vector read_nodal(const std::string& path, const FemSystem& sys, const char* what) {
  Vector v;
  try {
    v = import_field(path);
  } catch (const MeshError& e) {
    throw ConfigError(e.what());
  }
  if (v.size() != sys.num_nodes()) {
    throw ConfigError(std::string(what) + " in " + path + " has " + std::to_string(v.size()) +
                      " values, mesh has " + std::to_string(sys.num_nodes()) + " nodes");
  }
  return v;
}

ProblemDef make_problem(const Options& o, const FemSystem& sys, bool control) {
  if (!control) return poisson_prototype(sys);
  ControlConfig cc;
  cc.alpha = o.alpha;
  cc.beta = o.beta < 0.0 ? o.alpha : o.beta;
  if (!o.yd_file.empty()) cc.y_d_nodal = read_nodal(o.yd_file, sys, "desired state");
  try {
    return control_reduced(sys, cc);
  } catch (const OutOfRange& e) {
    throw ConfigError(e.what());
  }
}

L0PenaltyConfig make_config(const Options& o, const ProblemDef& p, const FemSystem& sys) {
  L0PenaltyConfig cfg;
  cfg.K = o.K;
  cfg.rho = o.rho;
  if (o.lambda != 0.0) cfg.schedule_lambda = o.lambda;
  if (o.zero_sign == "zero") cfg.zero_sign = ZeroSignRule::zero;
  else if (o.zero_sign == "plus") cfg.zero_sign = ZeroSignRule::plus;
  else if (o.zero_sign == "minus") cfg.zero_sign = ZeroSignRule::minus;
  else cfg.zero_sign = ZeroSignRule::sign_of_load;
  cfg.max_dc_iter = o.max_dc_iter;
  cfg.ssn_tol = o.ssn_tol;
  cfg.tau = o.tau;
  cfg.fill_zero_atoms = o.fill_zero;
  if (o.u0 == "unconstrained") {
    cfg.u0_policy = InitPolicy::unconstrained_solve;
  } else if (o.u0 == "zero") {
    cfg.u0_policy = InitPolicy::zero;
  } else if (o.u0 == "custom") {
    if (o.u0_file.empty()) throw ConfigError("--u0 custom needs --u0-file");
    cfg.u0_policy = InitPolicy::custom;
    cfg.u0_custom = sys.restrict(read_nodal(o.u0_file, sys, "initial iterate"));
  } else {
    // random: uniform in [-s, s] with s the largest entry of the unconstrained minimizer
    const Vector ref = unconstrained_minimizer(p);
    const double s = std::max(ref.lpNorm<Eigen::Infinity>(), 1e-300);
    std::mt19937_64 gen(o.seed);
    std::uniform_real_distribution<double> dist(-s, s);
    cfg.u0_policy = InitPolicy::custom;
    cfg.u0_custom.resize(p.size());
    for (Index i = 0; i < p.size(); ++i) cfg.u0_custom[i] = dist(gen);
  }
  try {
    validate(cfg, sys.domain_measure());
  } catch (const OutOfRange& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void verify_field(const Vector& u_nodal, const std::string& path, const FemSystem& sys, double K,
                  const L0Solution& sol, std::ostream& err) {
  Vector reread;
  if (path.empty()) {
    std::stringstream buf;
    write_field(buf, u_nodal);
    reread = read_field(buf);
  } else {
    reread = import_field(path);
  }
  const FeasibilityInfo fi = feasibility(reread, sys, K);
  if (fi.l0 != sol.l0 || std::abs(fi.gap - sol.gap) > 1e-12 * std::max(1.0, sol.w_l1)) {
    throw SolverError("verify: field gives l0 = " + num(fi.l0) + ", gap = " + num(fi.gap) +
                      " but the run reported l0 = " + num(sol.l0) + ", gap = " + num(sol.gap));
  }
  err << "verify: ok (l0 = " << num(fi.l0) << ", gap = " << num(fi.gap) << ")\n";
}

Row solution_row(const Options& o, bool control, const L0PenaltyConfig& cfg, const L0Solution& s) {
  Row r{{"n", o.mesh_file.empty() ? std::to_string(o.n) : "0"},
        {"f", num(s.objective)},
        {"l0", num(s.l0)},
        {"gap", num(s.gap)},
        {"dc_iters", std::to_string(s.dc_iters)},
        {"ssn_iters", std::to_string(s.newton_iters)},
        {"selection_mode", s.exact_selection ? "exact" : "greedy"},
        {"K", num(cfg.K)},
        {"rho", num(cfg.rho)}};
  if (control) {
    r.emplace_back("alpha", num(o.alpha));
    r.emplace_back("beta", num(o.beta < 0.0 ? o.alpha : o.beta));
    r.emplace_back("tracking_error", num(s.tracking_error));
  }
  if (cfg.schedule_lambda) {
    r.emplace_back("lambda", num(*cfg.schedule_lambda));
    r.emplace_back("reductions", std::to_string(s.reductions));
  }
  return r;
}

void write_history(const std::string& path, const L0Solution& s) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << "k,K_k,objective,f,gap,newton_iters,residual,tau\n";
  for (const auto& h : s.history) {
    f << h.k << ',' << num(h.K_k) << ',' << num(h.objective) << ',' << num(h.f) << ',' << num(h.gap) << ','
      << h.newton_iters << ',' << num(h.residual) << ',' << num(h.tau) << '\n';
  }
}

struct CaseResult {
  Row row;
  L0Solution solution;
};

CaseResult run_case(const Options& o, bool control, std::ostream& err) {
  const FemSystem sys = make_system(o, prototype_load);
  const ProblemDef p = make_problem(o, sys, control);
  const L0PenaltyConfig cfg = make_config(o, p, sys);
  CaseResult res;
  res.solution = solve_l0_penalized(p, sys, cfg);
  const L0Solution& s = res.solution;
  if (!o.field.empty()) export_field(o.field, s.u_nodal);
  if (!o.multiplier.empty()) export_field(o.multiplier, s.diagnostics.scaled_gradient);
  if (!o.history.empty()) write_history(o.history, s);
  if (o.verify) verify_field(s.u_nodal, o.field, sys, cfg.K, s, err);
  if (s.status != DcStatus::converged_fixed_point) {
    err << "warning: DC iteration stopped at max_dc_iter without reaching a fixed point\n";
  }
  res.row = solution_row(o, control, cfg, s);
  return res;
}

int cmd_solve(const Options& o, bool control, std::ostream& out, std::ostream& err) {
  const CaseResult r = run_case(o, control, err);
  emit(o, out, {r.row});
  return r.solution.status == DcStatus::converged_fixed_point ? kOk : kSolverFailure;
}

int cmd_sparsa(const Options& o, std::ostream& out, std::ostream& err) {
  const FemSystem sys = make_system(o, prototype_load);
  const ProblemDef p = poisson_prototype(sys);
  SparsaConfig sc;
  sc.beta = o.l1_beta;
  sc.rel_tol = o.rel_tol;
  sc.max_iter = o.max_iter;
  L1Weights w;
  try {
    w = sparsa_weights(sys, sc.beta);
  } catch (const OutOfRange& e) {
    throw ConfigError(e.what());
  }
  const SparsaResult r = sparsa_solve(*p.hessian, p.q_smooth, w, sc, unconstrained_minimizer(p));
  const Vector u_nodal = sys.expand(r.u);
  const FeasibilityInfo fi = feasibility(u_nodal, sys, o.K);
  if (!o.field.empty()) export_field(o.field, u_nodal);
  emit(o, out,
       {Row{{"n", o.mesh_file.empty() ? std::to_string(o.n) : "0"},
            {"beta", num(sc.beta)},
            {"f", num(p.smooth_value(r.u))},
            {"l0", num(fi.l0)},
            {"objective", num(r.objective)},
            {"iterations", std::to_string(r.iterations)}}});
  (void)err;
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.values.empty()) throw ConfigError("sweep needs --values");
  const bool control = o.problem == "control";
  std::vector<Row> rows(o.values.size());
  bool all_converged = true;

  if (o.param == "rho") {
    const FemSystem sys = make_system(o, prototype_load);
    const ProblemDef p = make_problem(o, sys, control);
    const L0PenaltyConfig cfg = make_config(o, p, sys);
    std::vector<L0Solution> sols;
    try {
      sols = penalty_sweep(p, sys, cfg, o.values);
    } catch (const OutOfRange& e) {
      throw ConfigError(e.what());
    }
    for (std::size_t i = 0; i < sols.size(); ++i) {
      L0PenaltyConfig c = cfg;
      c.rho = o.values[i];
      rows[i] = solution_row(o, control, c, sols[i]);
      all_converged = all_converged && sols[i].status == DcStatus::converged_fixed_point;
    }
    emit(o, out, rows);
    return all_converged ? kOk : kSolverFailure;
  }

  std::vector<Options> cases(o.values.size(), o);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Options& c = cases[i];
    c.field.clear();
    c.multiplier.clear();
    c.history.clear();
    const double v = o.values[i];
    if (o.param == "K") c.K = v;
    else if (o.param == "lambda") c.lambda = v;
    else if (o.param == "beta") c.beta = v;
    else if (o.param == "alpha") c.alpha = v;
    else c.n = static_cast<int>(v);
  }
  // Cases are independent; rows keep the order of --values.
  std::vector<std::string> failures(cases.size());
  std::vector<int> config_failure(cases.size(), 0);
  std::vector<std::ostringstream> logs(cases.size());
  std::vector<int> converged(cases.size(), 0);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < cases.size(); i += stride) {
      try {
        const CaseResult r = run_case(cases[i], control, logs[i]);
        rows[i] = r.row;
        converged[i] = r.solution.status == DcStatus::converged_fixed_point;
      } catch (const ConfigError& e) {
        failures[i] = e.what();
        config_failure[i] = 1;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const auto jobs = static_cast<std::size_t>(std::clamp<int>(o.jobs, 1, static_cast<int>(cases.size())));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    err << logs[i].str();
    if (!failures[i].empty()) {
      err << "error: " << o.param << " = " << num(o.values[i]) << ": " << failures[i] << '\n';
      return config_failure[i] ? kConfigError : kSolverFailure;
    }
    all_converged = all_converged && converged[i];
  }
  emit(o, out, rows);
  return all_converged ? kOk : kSolverFailure;
}

int cmd_verify(const Options& o, std::ostream& out) {
  if (o.field.empty()) throw ConfigError("verify needs --field");
  const FemSystem sys = make_system(o, [](double, double) { return 0.0; });
  const Vector u = read_nodal(o.field, sys, "field");
  if (!(o.K > 0.0)) throw ConfigError("K must be positive");
  const FeasibilityInfo fi = feasibility(u, sys, o.K);
  emit(o, out,
       {Row{{"K", num(o.K)},
            {"l0", num(fi.l0)},
            {"gap", num(fi.gap)},
            {"w_l1", num(fi.w_l1)},
            {"selection_mode", fi.exact ? "exact" : "greedy"},
            {"feasible", fi.l0 <= o.K + sys.element_space().budget_tolerance() ? "1" : "0"}}});
  return kOk;
}

void add_mesh_options(CLI::App* sub, Options& o) {
  sub->add_option("--n", o.n, "cells per side of the structured unit-square mesh")->capture_default_str();
  sub->add_option("--mesh", o.mesh_file, "mesh file (overrides --n)");
  sub->add_option("--K", o.K, "support budget")->capture_default_str();
  sub->add_option("--csv", o.csv, "CSV output file (default: stdout)");
}

void add_solver_options(CLI::App* sub, Options& o) {
  add_mesh_options(sub, o);
  sub->add_option("--rho", o.rho, "penalty parameter")->capture_default_str();
  sub->add_option("--schedule", o.lambda, "K schedule factor in (0,1); 0 disables");
  sub->add_option("--zero-sign", o.zero_sign, "subgradient value at zero nodes")
      ->check(CLI::IsMember({"zero", "plus", "minus", "sign_of_load"}))
      ->capture_default_str();
  sub->add_option("--u0", o.u0, "initial iterate")
      ->check(CLI::IsMember({"unconstrained", "zero", "custom", "random"}))
      ->capture_default_str();
  sub->add_option("--u0-file", o.u0_file, "nodal field used by --u0 custom");
  sub->add_option("--seed", o.seed, "seed for --u0 random")->capture_default_str();
  sub->add_option("--history", o.history, "per-iteration CSV");
  sub->add_option("--field", o.field, "solution field output");
  sub->add_option("--multiplier", o.multiplier, "scaled gradient field output");
  sub->add_flag("--verify", o.verify, "recompute l0 and gap from the written field");
  sub->add_option("--max-dc-iter", o.max_dc_iter)->capture_default_str();
  sub->add_option("--ssn-tol", o.ssn_tol)->capture_default_str();
  sub->add_option("--tau", o.tau, "fixed Newton tau; 0 uses the mesh-scaled rule")->capture_default_str();
  sub->add_flag("--fill-zero", o.fill_zero, "let the selection take zero elements");
}

void add_control_options(CLI::App* sub, Options& o) {
  sub->add_option("--alpha", o.alpha, "L2 control cost")->capture_default_str();
  sub->add_option("--beta", o.beta, "H1 control cost (default: alpha)");
  sub->add_option("--yd-file", o.yd_file, "desired state as a nodal field");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Splices "--key=value" items of the subcommand's --config file in front of the
// command-line flags, skipping keys the command line sets itself.
std::vector<std::string> with_config_file(const std::vector<std::string>& args) {
  static const std::vector<std::string> subs{"poisson", "control", "sparsa", "sweep"};
  const auto sub = std::find_if(args.begin() + std::min<std::ptrdiff_t>(1, std::ssize(args)), args.end(),
                                [](const std::string& a) { return !a.empty() && a[0] != '-'; });
  if (sub == args.end() || std::find(subs.begin(), subs.end(), *sub) == subs.end()) return args;
  std::string path;
  for (auto it = sub + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    if (it->rfind("--config=", 0) == 0) path = it->substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<std::string> extra;
  for (const CLI::ConfigItem& item : CLI::ConfigBase().from_config(in)) {
    if (item.name == "++" || item.name == "--" || item.name == "config") continue;
    if (given_on_command_line(args, item.name)) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    extra.push_back("--" + item.name + "=" + value);
  }
  std::vector<std::string> out(args.begin(), sub + 1);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), sub + 1, args.end());
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized L0-constrained optimization by a DC algorithm", "l0dc"};
  app.require_subcommand(1);
  Options o;

  auto* poisson = app.add_subcommand("poisson", "Poisson prototype with a support constraint");
  add_solver_options(poisson, o);
  poisson->add_option("--config", o.config_file, "key=value configuration file");

  auto* control = app.add_subcommand("control", "reduced optimal control with a support constraint");
  add_solver_options(control, o);
  add_control_options(control, o);
  control->add_option("--config", o.config_file, "key=value configuration file");

  auto* sparsa = app.add_subcommand("sparsa", "weighted L1 baseline solved by SpaRSA");
  add_mesh_options(sparsa, o);
  sparsa->add_option("--beta", o.l1_beta, "L1 penalty")->capture_default_str();
  sparsa->add_option("--rel-tol", o.rel_tol)->capture_default_str();
  sparsa->add_option("--max-iter", o.max_iter)->capture_default_str();
  sparsa->add_option("--field", o.field, "solution field output");
  sparsa->add_option("--config", o.config_file, "key=value configuration file");

  auto* sweep = app.add_subcommand("sweep", "one solve per parameter value");
  add_solver_options(sweep, o);
  sweep->add_option("--alpha", o.alpha, "L2 control cost")->capture_default_str();
  sweep->add_option("--beta", o.beta, "H1 control cost (default: alpha)");
  sweep->add_option("--yd-file", o.yd_file, "desired state as a nodal field");
  sweep->add_option("--problem", o.problem)->check(CLI::IsMember({"poisson", "control"}))->capture_default_str();
  sweep->add_option("--param", o.param)
      ->check(CLI::IsMember({"rho", "K", "lambda", "beta", "alpha", "n"}))
      ->capture_default_str();
  sweep->add_option("--values", o.values, "comma-separated parameter values")->delimiter(',');
  sweep->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
  sweep->add_option("--config", o.config_file, "key=value configuration file");

  auto* verify = app.add_subcommand("verify", "recompute l0 and gap of a field file");
  add_mesh_options(verify, o);
  verify->add_option("--field", o.field, "nodal field")->required();

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = with_config_file(args);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  std::vector<const char*> argp;
  for (const auto& a : args) argp.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argp.size()), argp.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    app.exit(e, err, err);
    return kConfigError;
  }

  try {
    if (*poisson) return cmd_solve(o, false, out, err);
    if (*control) return cmd_solve(o, true, out, err);
    if (*sparsa) return cmd_sparsa(o, out, err);
    if (*sweep) return cmd_sweep(o, out, err);
    return cmd_verify(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

}  // namespace l0dc::cli
