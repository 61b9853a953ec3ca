#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/numkit.hpp"
#include "herglotz/vakonomic.hpp"

namespace herglotz {

/// Optimal control problem with an implicitly defined cost: maximize z(b)
/// subject to dx/dt = X(x, u, z), dz/dt = F(x, u, z), x(a) = x_a, x(b) = x_b,
/// z(a) = z0. Maximization is the built-in convention; encode minimization
/// by negating F. Packed expression layout: [x(n), u(m), z, params...].
struct ControlProblem {
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  std::vector<Expr> X;
  Expr F;
  std::vector<double> x_start, x_target;
  double z0 = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<std::pair<std::string, double>> params;

  static ControlProblem make(int n, int m, const std::vector<std::string>& X_src,
                             std::string_view F_src, std::vector<double> x_a,
                             std::vector<double> x_b, double z0, double t0, double t1,
                             std::vector<std::pair<std::string, double>> params = {});

  std::vector<std::string> variable_list() const;
  std::size_t x_index(int i) const { return static_cast<std::size_t>(i); }
  std::size_t u_index(int a) const { return static_cast<std::size_t>(n + a); }
  std::size_t z_index() const { return static_cast<std::size_t>(n + m); }
  std::size_t packed_size() const;
  void pack(std::span<const double> x, std::span<const double> u, double z,
            std::vector<double>& out) const;
};

struct ControlState {
  std::vector<double> x;
  std::vector<double> mu;  // costate
  double z = 0.0;
  std::vector<double> u;   // warm start for the stationarity solve
};

struct ControlRates {
  std::vector<double> dx;
  std::vector<double> dmu;
  double dz = 0.0;
  std::vector<double> u;  // the control consistent with stationarity at s
};

/// The same problem posed variationally: configuration (x, u), Lagrangian
/// F(x, u, z), constraints psi^i = X^i - dx^i/dt. The control coordinates
/// come out kinematic with free endpoints.
VakonomicProblem hocp_as_vakonomic(const ControlProblem& cp);

/// Solves the stationarity system dF/du_a - mu_j dX^j/du_a = 0 for u.
std::vector<double> stationarity_solve(const ControlProblem& cp, std::span<const double> x,
                                       std::span<const double> mu, double z,
                                       std::span<const double> u_guess,
                                       const NewtonConfig& newton = {});

/// Adjoint-form right-hand side (maximization convention):
///   dx^i/dt  = X^i
///   dmu_i/dt = mu_i dF/dz - mu_j dX^j/dx^i + dF/dx^i - dX^j/dz mu_i mu_j
///   dz/dt    = F
/// with u re-solved from stationarity, warm-started from s.u.
ControlRates control_rhs(const ControlProblem& cp, const ControlState& s);

struct HocpOptions {
  std::vector<double> mu_a_guess;  // size n; defaults to zero
  std::vector<double> u_guess;     // size m; warm start at t0, defaults to zero
  double dt = 1e-3;
  NewtonConfig newton{};
};

struct HocpResult {
  DiscretePath path;  // q = x, mu = costate, u = control, z; no v block
  int newton_iterations = 0;
  double shooting_residual = 0.0;
};

/// Single shooting over the initial costate mu(a).
HocpResult solve_hocp(const ControlProblem& cp, const HocpOptions& opt = {});

/// max over grid nodes and control components of the stationarity residual,
/// recomputed from the path.
double stationarity_residual(const ControlProblem& cp, const DiscretePath& path);

}  // namespace herglotz
