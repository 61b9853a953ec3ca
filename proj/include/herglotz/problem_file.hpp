#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "herglotz/contact.hpp"

namespace herglotz::cli {

/// Validated contents of a problem-definition file (INI-style sections of
/// key = value lines; '#' and ';' start comments). All expressions are
/// parsed eagerly at load time so errors surface before solving.
struct ProblemFile {
  enum class Kind { HerglotzIvp, HerglotzBvp, Vakonomic, Hocp };

  Kind kind = Kind::HerglotzIvp;
  std::string name;  // input stem, used for defaults and report headers
  int n = 0;
  int m = 0;
  int k = 0;

  std::string L_src;
  std::string F_src;
  std::vector<std::string> X_src;
  std::vector<std::string> psi_src;
  std::vector<std::pair<std::string, double>> params;

  std::vector<double> q0, v0, q1;  // mechanics kinds
  std::vector<double> x_a, x_b;    // hocp
  double z0 = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;

  double dt = 1e-3;
  double newton_tol = 1e-10;
  int max_iter = 50;
  std::vector<double> guess_v0, guess_mu0, guess_mu_a, guess_u0;
  unsigned seed = 42;

  std::string csv_path;  // optional; defaults to "<name>.csv"

  static std::string_view kind_name(Kind k);
};

/// Loads and validates a problem file. Throws ProblemFileError with the
/// offending field path, or ParseError context for bad expressions.
ProblemFile load_problem(const std::string& path);

/// Same, from an in-memory definition (`origin` only labels error messages).
ProblemFile parse_problem(std::string_view text, const std::string& origin);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Every residual below is recomputed from the emitted trajectory, never
/// echoed from the solver.
struct RunReport {
  std::string problem;
  std::string kind;
  std::size_t grid_nodes = 0;
  double dt = 0.0;
  int newton_iterations = 0;
  std::optional<double> shooting_residual;
  std::vector<CheckResult> checks;
  double wall_ms = 0.0;

  bool all_pass() const;
  std::string render() const;
};

struct RunOutcome {
  DiscretePath path;
  RunReport report;
  std::string csv;  // full CSV text, 17 significant digits per value
};

/// Dispatches to the matching solver and assembles CSV + report.
RunOutcome run(const ProblemFile& pf);

/// CSV serialization used by `run` (column set depends on the problem kind).
std::string to_csv(const ProblemFile& pf, const DiscretePath& path);

}  // namespace herglotz::cli
