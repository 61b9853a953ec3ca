#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/numkit.hpp"

namespace herglotz {

/// Contact Lagrangian with velocity-dependent constraints psi^a(q, v, z) = 0
/// and two-point boundary data. A coordinate whose velocity appears in
/// neither the Lagrangian nor any constraint is kinematic: its equation of
/// motion degenerates to an algebraic relation, its endpoints are free
/// (natural boundary conditions hold identically) and the q_end entry must
/// be left unset. Control problems reduce to exactly this shape.
struct VakonomicProblem {
  ContactLagrangian L;
  std::vector<Expr> constraints;  // over L's variable list, independent of mu
  std::vector<double> q_start;    // kinematic entries act as initial guesses
  std::vector<std::optional<double>> q_end;
  double z0 = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;

  std::size_t k() const { return constraints.size(); }

  static VakonomicProblem make(int n, std::string_view L_src,
                               const std::vector<std::string>& psi_src,
                               std::vector<double> q_start, std::vector<double> q_end, double z0,
                               double t0, double t1,
                               std::vector<std::pair<std::string, double>> params = {});
};

struct ExtendedState {
  std::vector<double> q;
  std::vector<double> v;
  double z = 0.0;
  std::vector<double> mu;
};

struct VakonomicRates {
  std::vector<double> dq;
  std::vector<double> dv;  // zero in kinematic slots
  double dz = 0.0;
  std::vector<double> dmu;
};

/// The multiplier-extended Lagrangian L - sum_a mu_a psi^a over the n + k
/// configuration variables (q, mu). Throws on a name collision with the
/// generated mu/vmu names.
ContactLagrangian extended_lagrangian(const VakonomicProblem& p);

/// Joint solve for accelerations and multiplier rates from the constrained
/// Euler-Lagrange rows plus the differentiated constraints. Throws
/// SingularMatrixError when the bordered system degenerates.
VakonomicRates vakonomic_rhs(const VakonomicProblem& p, const ExtendedState& s);

/// RK4 on (q, v, z, mu) with the constraints index-reduced; initial state
/// must satisfy the constraints within `consistency_tol`.
DiscretePath integrate_vakonomic(const VakonomicProblem& p, const ExtendedState& s0,
                                 const OdeConfig& cfg, double consistency_tol = 1e-10);

/// max_a max_t |psi^a| recomputed over the path nodes.
double constraint_drift(const VakonomicProblem& p, const DiscretePath& path);

/// max over kinematic coordinates and nodes of |dL/dq| (the algebraic
/// stationarity residual); 0 when the problem has no kinematic coordinates.
double kinematic_residual(const VakonomicProblem& p, const DiscretePath& path);

struct BvpOptions {
  std::vector<double> v0_guess;   // size n; defaults to the endpoint chord
  std::vector<double> mu0_guess;  // size k; defaults to zero
  double dt = 1e-3;
  NewtonConfig newton{};
};

struct BvpResult {
  DiscretePath path;
  int newton_iterations = 0;
  double shooting_residual = 0.0;
  std::vector<double> v0;
  std::vector<double> mu0;
};

/// Single shooting over the free initial data (v0 on dynamic coordinates,
/// q0 on kinematic ones, mu0), with psi(s0) = 0 and the kinematic
/// stationarity relations enforced as residual rows next to the endpoint
/// conditions.
BvpResult solve_vakonomic_bvp(const VakonomicProblem& p, const BvpOptions& opt = {});

/// Runs the shooting solve from several guesses and returns the distinct
/// solutions found (failed starts are skipped; duplicates merged by their
/// initial data).
std::vector<BvpResult> solve_vakonomic_bvp_multi(
    const VakonomicProblem& p, const std::vector<BvpOptions>& guesses);

}  // namespace herglotz
