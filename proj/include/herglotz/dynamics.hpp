#pragma once

#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/numkit.hpp"

namespace herglotz {

struct ContactState {
  std::vector<double> q;
  std::vector<double> v;
  double z = 0.0;
};

struct ContactRates {
  std::vector<double> dq;
  std::vector<double> dv;
  double dz = 0.0;
};

/// Right-hand side of the contact Euler-Lagrange equations
///   d/dt (dL/dv_i) - dL/dq_i = (dL/dv_i)(dL/dz),   dz/dt = L,
/// made explicit by solving the mass-matrix system
///   M dv = dL/dq - (d2L/dv dq) v - (d2L/dv dz) L + (dL/dv)(dL/dz).
/// Throws SingularMatrixError when the mass matrix condition estimate
/// exceeds 1e12.
ContactRates herglotz_rhs(const ContactLagrangian& L, const ContactState& s);

/// RK4 integration of the state (q, v, z); dz/dt = L holds along the output
/// by construction.
DiscretePath integrate_herglotz(const ContactLagrangian& L, const ContactState& s0,
                                const OdeConfig& cfg);

/// Lagrange multiplier of the action constraint along a trajectory,
/// normalized by its terminal condition lambda(t_N) = 1.
struct MultiplierCurve {
  std::vector<double> times;
  std::vector<double> lambda;
};

/// Solves d lambda/dt = -lambda dL/dz backward from lambda(t_N) = 1 along
/// the path ((q, v, z) interpolated linearly between nodes).
MultiplierCurve multiplier_evolution(const ContactLagrangian& L, const DiscretePath& path);

}  // namespace herglotz
