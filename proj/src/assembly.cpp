#include "assembly.hpp"

#include <algorithm>

#include "herglotz/numkit.hpp"

namespace herglotz::detail {

ConstrainedSystem ConstrainedSystem::build(const ContactLagrangian& lag, std::vector<Expr> psi,
                                           int nc, bool allow_kinematic) {
  ConstrainedSystem sys;
  sys.lag = &lag;
  sys.psi = std::move(psi);
  sys.nc = nc;
  sys.k = static_cast<int>(sys.psi.size());
  if (lag.n != nc + sys.k)
    throw DimensionError("ConstrainedSystem: Lagrangian must carry one coordinate per "
                         "multiplier beyond the real configuration");
  for (int j = 0; j < nc; ++j) {
    bool kinematic = allow_kinematic && sys.k > 0;
    if (kinematic) {
      const std::string& vname = lag.vel_names[static_cast<std::size_t>(j)];
      if (lag.L.depends_on(vname)) kinematic = false;
      for (const Expr& c : sys.psi)
        if (c.depends_on(vname)) kinematic = false;
    }
    (kinematic ? sys.alg : sys.dyn).push_back(j);
  }
  sys.label = (sys.k == 0 && sys.alg.empty()) ? "mass matrix" : "bordered matrix";
  return sys;
}

std::vector<double> ConstrainedSystem::packed_point(std::span<const double> q,
                                                    std::span<const double> v, double z,
                                                    std::span<const double> mu) const {
  if (q.size() != static_cast<std::size_t>(nc) || v.size() != static_cast<std::size_t>(nc))
    throw DimensionError("ConstrainedSystem: state dimension mismatch");
  if (mu.size() != static_cast<std::size_t>(k))
    throw DimensionError("ConstrainedSystem: multiplier dimension mismatch");
  std::vector<double> x(lag->packed_size(), 0.0);
  for (int i = 0; i < nc; ++i) {
    x[lag->coord_index(i)] = q[i];
    x[lag->vel_index(i)] = v[i];
  }
  for (int a = 0; a < k; ++a) x[lag->coord_index(nc + a)] = mu[a];
  x[lag->z_index()] = z;
  for (std::size_t p = 0; p < lag->params.size(); ++p)
    x[lag->z_index() + 1 + p] = lag->params[p].second;
  return x;
}

std::vector<double> ConstrainedSystem::constraint_values(std::span<const double> q,
                                                         std::span<const double> v, double z,
                                                         std::span<const double> mu) const {
  const std::vector<double> x = packed_point(q, v, z, mu);
  std::vector<double> out(psi.size());
  for (std::size_t a = 0; a < psi.size(); ++a) out[a] = psi[a].eval(x);
  return out;
}

std::vector<double> ConstrainedSystem::kinematic_residuals(std::span<const double> q,
                                                           std::span<const double> v, double z,
                                                           std::span<const double> mu) const {
  ExprFrame lf(lag->L, packed_point(q, v, z, mu));
  std::vector<double> out;
  out.reserve(alg.size());
  for (int a : alg) out.push_back(lf.first(lag->coord_index(a)));
  return out;
}

AssemblyResult ConstrainedSystem::rates(std::span<const double> q, std::span<const double> v,
                                        double z, std::span<const double> mu) const {
  const std::vector<double> point = packed_point(q, v, z, mu);
  ExprFrame lf(lag->L, point);
  std::vector<ExprFrame> cf;
  cf.reserve(psi.size());
  for (const Expr& c : psi) cf.emplace_back(c, point);

  const int nd = static_cast<int>(dyn.size());
  const int na = static_cast<int>(alg.size());
  const int dim = nd + k + na;

  const double zdot = lf.value();
  const double dL_dz = lf.first(lag->z_index());

  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> b(dim, 0.0);
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * dim + c]; };

  // Dynamic rows: d/dt (dL/dv_i) - dL/dq_i = (dL/dv_i)(dL/dz), with the time
  // derivative expanded in the unknown accelerations, multiplier rates and
  // kinematic velocities.
  for (int r = 0; r < nd; ++r) {
    const int i = dyn[r];
    const std::size_t vi = lag->vel_index(i);
    for (int c = r; c < nd; ++c) {
      const double mass = lf.second(vi, lag->vel_index(dyn[c]));
      at(r, c) = mass;
      at(c, r) = mass;
    }
    for (int alpha = 0; alpha < k; ++alpha) at(r, nd + alpha) = -cf[alpha].first(vi);
    for (int c = 0; c < na; ++c) at(r, nd + k + c) = lf.second(vi, lag->coord_index(alg[c]));

    double rhs = lf.first(lag->coord_index(i)) + lf.first(vi) * dL_dz;
    for (int d : dyn) rhs -= lf.second(vi, lag->coord_index(d)) * v[d];
    rhs -= lf.second(vi, lag->z_index()) * zdot;
    b[r] = rhs;
  }

  // Constraint rows: d/dt psi^a = 0.
  for (int alpha = 0; alpha < k; ++alpha) {
    const int r = nd + alpha;
    for (int c = 0; c < nd; ++c) at(r, c) = cf[alpha].first(lag->vel_index(dyn[c]));
    for (int c = 0; c < na; ++c) at(r, nd + k + c) = cf[alpha].first(lag->coord_index(alg[c]));
    double rhs = -cf[alpha].first(lag->z_index()) * zdot;
    for (int d : dyn) rhs -= cf[alpha].first(lag->coord_index(d)) * v[d];
    b[r] = rhs;
  }

  // Kinematic rows: the coordinate's Euler-Lagrange equation reduces to
  // dL/dq_a = 0; its time derivative closes the system in that coordinate's
  // velocity.
  for (int c0 = 0; c0 < na; ++c0) {
    const int r = nd + k + c0;
    const std::size_t qa = lag->coord_index(alg[c0]);
    for (int c = 0; c < nd; ++c) at(r, c) = lf.second(qa, lag->vel_index(dyn[c]));
    for (int alpha = 0; alpha < k; ++alpha) at(r, nd + alpha) = -cf[alpha].first(qa);
    for (int c = 0; c < na; ++c) at(r, nd + k + c) = lf.second(qa, lag->coord_index(alg[c]));
    double rhs = -lf.second(qa, lag->z_index()) * zdot;
    for (int d : dyn) rhs -= lf.second(qa, lag->coord_index(d)) * v[d];
    b[r] = rhs;
  }

  LuFactor lu(std::move(a), static_cast<std::size_t>(dim));
  const double cond = lu.cond_inf();
  if (lu.singular() || cond > kMaxCondition)
    throw SingularMatrixError("singular " + label + " (condition estimate " +
                                  std::to_string(cond) + ")",
                              cond);
  const std::vector<double> sol = lu.solve(b);

  AssemblyResult res;
  res.vel.assign(nc, 0.0);
  res.acc.assign(nc, 0.0);
  res.dmu.assign(k, 0.0);
  res.dz = zdot;
  for (int r = 0; r < nd; ++r) {
    res.vel[dyn[r]] = v[dyn[r]];
    res.acc[dyn[r]] = sol[r];
  }
  for (int alpha = 0; alpha < k; ++alpha) res.dmu[alpha] = sol[nd + alpha];
  for (int c = 0; c < na; ++c) res.vel[alg[c]] = sol[nd + k + c];
  return res;
}

}  // namespace herglotz::detail
