// Command-line front end: load a problem definition, solve it, emit the
// trajectory as CSV plus a diagnostic report.
//
// Exit codes: 0 success, 2 validation error, 3 solver failure, 4 invariant
// failure (a recomputed residual above its threshold, or a variation
// certification miss).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "herglotz/control.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/problem_file.hpp"
#include "herglotz/vakonomic.hpp"

namespace {

using herglotz::cli::ProblemFile;

struct CommonOpts {
  std::string file;
  std::optional<double> dt;
  std::optional<double> tol;
  std::optional<unsigned> seed;
  std::string out_path;
};

void apply_overrides(ProblemFile& pf, const CommonOpts& opts) {
  if (opts.dt) pf.dt = *opts.dt;
  if (opts.seed) pf.seed = *opts.seed;
  if (opts.tol) pf.newton_tol = *opts.tol;
  if (!opts.out_path.empty()) pf.csv_path = opts.out_path;
}

std::string csv_destination(const ProblemFile& pf) {
  return pf.csv_path.empty() ? pf.name + ".csv" : pf.csv_path;
}

int cmd_check(const CommonOpts& opts) {
  ProblemFile pf = herglotz::cli::load_problem(opts.file);
  std::cout << "ok: " << pf.name << " (" << ProblemFile::kind_name(pf.kind) << "), n=" << pf.n;
  if (pf.kind == ProblemFile::Kind::Hocp) std::cout << ", m=" << pf.m;
  if (pf.k > 0) std::cout << ", k=" << pf.k;
  std::cout << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  ProblemFile pf = herglotz::cli::load_problem(opts.file);
  apply_overrides(pf, opts);
  const herglotz::cli::RunOutcome outcome = herglotz::cli::run(pf);

  const std::string dest = csv_destination(pf);
  std::ofstream out(dest, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write CSV to '" << dest << "'\n";
    return 3;
  }
  out << outcome.csv;
  out.close();

  std::cout << outcome.report.render();
  std::cout << "csv: " << dest << "\n";
  return outcome.report.all_pass() ? 0 : 4;
}

// First-variation certification of a solved trajectory: for Lagrangian kinds
// the action is varied directly; for constrained kinds the multiplier-
// extended Lagrangian is used and the (q, mu) path is varied jointly.
int cmd_variation(const CommonOpts& opts, int count) {
  ProblemFile pf = herglotz::cli::load_problem(opts.file);
  apply_overrides(pf, opts);
  const double tol = opts.tol.value_or(1e-4);

  const herglotz::cli::RunOutcome outcome = herglotz::cli::run(pf);
  if (!outcome.report.all_pass()) {
    std::cout << outcome.report.render();
    return 4;
  }

  herglotz::ContactLagrangian lag;
  herglotz::DiscretePath path;
  if (pf.kind == ProblemFile::Kind::Hocp) {
    const herglotz::ControlProblem cp = herglotz::ControlProblem::make(
        pf.n, pf.m, pf.X_src, pf.F_src, pf.x_a, pf.x_b, pf.z0, pf.t0, pf.t1, pf.params);
    lag = herglotz::extended_lagrangian(herglotz::hocp_as_vakonomic(cp));
    path.times = outcome.path.times;
    for (std::size_t i = 0; i < outcome.path.nodes(); ++i) {
      std::vector<double> q = outcome.path.q[i];
      q.insert(q.end(), outcome.path.u[i].begin(), outcome.path.u[i].end());
      q.insert(q.end(), outcome.path.mu[i].begin(), outcome.path.mu[i].end());
      path.q.push_back(std::move(q));
    }
  } else if (pf.kind == ProblemFile::Kind::Vakonomic && pf.k > 0) {
    const herglotz::ContactLagrangian L =
        herglotz::ContactLagrangian::make(pf.n, pf.L_src, pf.params);
    herglotz::VakonomicProblem vp;
    vp.L = L;
    const std::vector<std::string> vars = L.variable_list();
    for (const std::string& src : pf.psi_src)
      vp.constraints.push_back(herglotz::Expr::parse(src, vars));
    lag = herglotz::extended_lagrangian(vp);
    path.times = outcome.path.times;
    for (std::size_t i = 0; i < outcome.path.nodes(); ++i) {
      std::vector<double> q = outcome.path.q[i];
      q.insert(q.end(), outcome.path.mu[i].begin(), outcome.path.mu[i].end());
      path.q.push_back(std::move(q));
    }
  } else {
    lag = herglotz::ContactLagrangian::make(pf.n, pf.L_src, pf.params);
    path.times = outcome.path.times;
    path.q = outcome.path.q;
  }
  path.v = herglotz::fd_velocities(path.times, path.q);

  const int dim = path.dim();
  double worst = 0.0;
  for (int trial = 0; trial < count; ++trial) {
    const herglotz::Variation dir =
        herglotz::random_variation(path.times, dim, pf.seed + static_cast<unsigned>(trial));
    const double fv = herglotz::first_variation(lag, path, pf.z0, dir);
    worst = std::max(worst, std::fabs(fv));
    std::printf("variation %2d: |dA| = %.6e\n", trial + 1, std::fabs(fv));
  }
  std::printf("max |dA| = %.6e  tol %.1e  %s\n", worst, tol, worst <= tol ? "pass" : "FAIL");
  return worst <= tol ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact (Herglotz) Lagrangian solver toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  int variation_count = 20;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("file", opts.file, "problem definition file")->required();
    sub->add_option("--dt", opts.dt, "override the integration step");
    sub->add_option("--tol", opts.tol, "override the solver/certification tolerance");
    sub->add_option("--seed", opts.seed, "seed for random variations");
    if (with_out) sub->add_option("--out", opts.out_path, "CSV output path");
  };

  CLI::App* run = app.add_subcommand("run", "solve and emit CSV + report");
  add_common(run, true);
  CLI::App* check = app.add_subcommand("check", "parse and validate only");
  add_common(check, false);
  CLI::App* variation =
      app.add_subcommand("variation", "certify a solved trajectory by random first variations");
  add_common(variation, true);
  variation->add_option("--count", variation_count, "number of random variations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(opts);
    if (check->parsed()) return cmd_check(opts);
    return cmd_variation(opts, variation_count);
  } catch (const herglotz::ProblemFileError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const herglotz::ParseError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const herglotz::Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
