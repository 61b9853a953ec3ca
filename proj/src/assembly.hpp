#pragma once

// Shared right-hand-side assembly for contact Euler-Lagrange systems with
// velocity constraints. Used by herglotz_rhs (no constraints) and
// vakonomic_rhs / the vakonomic integrator (constraints + multipliers).

#include <span>
#include <string>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/errors.hpp"

namespace herglotz::detail {

inline constexpr double kMaxCondition = 1e12;

struct AssemblyResult {
  std::vector<double> vel;  // nc: dq/dt (echoes v for dynamic coords, solved for kinematic)
  std::vector<double> acc;  // nc: dv/dt (zero in kinematic slots; their v is not a state)
  std::vector<double> dmu;  // k
  double dz = 0.0;
};

// System layout:
//   lag  — Lagrangian over nc real coordinates followed by k multiplier
//          coordinates mu_a (the extended Lagrangian L - mu_a psi^a when
//          k > 0, the plain Lagrangian when k == 0);
//   psi  — k constraint expressions rebound to lag's packed variable list
//          (no dependence on the multipliers or their velocities);
//   dyn/alg — partition of the real coordinates. A coordinate is kinematic
//          (alg) when neither the Lagrangian nor any constraint depends on
//          its velocity; its Euler-Lagrange row degenerates to the algebraic
//          relation dL/dq = 0, which is differentiated once and solved for
//          the coordinate's velocity instead of an acceleration.
struct ConstrainedSystem {
  const ContactLagrangian* lag = nullptr;
  std::vector<Expr> psi;
  int nc = 0;
  int k = 0;
  std::vector<int> dyn;
  std::vector<int> alg;
  std::string label = "mass matrix";  // used in singularity diagnostics

  static ConstrainedSystem build(const ContactLagrangian& lag, std::vector<Expr> psi, int nc,
                                 bool allow_kinematic);

  // q: nc values, v: nc values (kinematic entries ignored), mu: k values.
  AssemblyResult rates(std::span<const double> q, std::span<const double> v, double z,
                       std::span<const double> mu) const;

  // Constraint values psi^a(q, v, z); for kinematic problems `v` entries of
  // kinematic coordinates are irrelevant (the constraints cannot see them).
  std::vector<double> constraint_values(std::span<const double> q, std::span<const double> v,
                                        double z, std::span<const double> mu) const;

  // dL/dq for the kinematic coordinates (stationarity-style consistency
  // conditions); empty when there are none.
  std::vector<double> kinematic_residuals(std::span<const double> q, std::span<const double> v,
                                          double z, std::span<const double> mu) const;

 private:
  std::vector<double> packed_point(std::span<const double> q, std::span<const double> v, double z,
                                   std::span<const double> mu) const;
};

}  // namespace herglotz::detail
