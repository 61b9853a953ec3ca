#include "herglotz/vakonomic.hpp"

#include <algorithm>
#include <cmath>

#include "assembly.hpp"
#include "herglotz/errors.hpp"

namespace herglotz {

namespace {

constexpr double kMuBlowup = 1e8;

// Extended system plus the ODE-state bookkeeping shared by the integrator
// and the shooting solver. ODE state layout: [q(nc), v_dyn(nd), z, mu(k)].
struct VakonomicSystem {
  ContactLagrangian ext;
  std::vector<Expr> psi_ext;
  detail::ConstrainedSystem sys;
  int nc = 0, k = 0;

  explicit VakonomicSystem(const VakonomicProblem& p) : ext(extended_lagrangian(p)) {
    nc = p.L.n;
    k = static_cast<int>(p.k());
    const std::vector<std::string> vars = ext.variable_list();
    psi_ext.reserve(p.constraints.size());
    for (const Expr& c : p.constraints) psi_ext.push_back(c.rebind(vars));
    sys = detail::ConstrainedSystem::build(ext, psi_ext, nc, /*allow_kinematic=*/true);
  }

  int nd() const { return static_cast<int>(sys.dyn.size()); }
  std::size_t state_size() const { return static_cast<std::size_t>(nc + nd() + 1 + k); }

  std::vector<double> pack_state(const ExtendedState& s) const {
    std::vector<double> y(state_size());
    std::copy(s.q.begin(), s.q.end(), y.begin());
    for (int d = 0; d < nd(); ++d) y[nc + d] = s.v[sys.dyn[d]];
    y[nc + nd()] = s.z;
    std::copy(s.mu.begin(), s.mu.end(), y.begin() + nc + nd() + 1);
    return y;
  }

  // Full velocity vector from an ODE state; kinematic entries zero (they do
  // not influence any expression).
  void unpack(std::span<const double> y, std::vector<double>& q, std::vector<double>& v,
              double& z, std::vector<double>& mu) const {
    q.assign(y.begin(), y.begin() + nc);
    v.assign(nc, 0.0);
    for (int d = 0; d < nd(); ++d) v[sys.dyn[d]] = y[nc + d];
    z = y[nc + nd()];
    mu.assign(y.begin() + nc + nd() + 1, y.end());
  }

  void rhs(double, std::span<const double> y, std::span<double> dy) const {
    std::vector<double> q, v, mu;
    double z;
    unpack(y, q, v, z, mu);
    if (inf_norm(mu) > kMuBlowup)
      throw Error("vakonomic multipliers exceeded 1e8; the extremal looks abnormal "
                  "(lambda_0 -> 0), which is outside the supported normal case");
    const detail::AssemblyResult r = sys.rates(q, v, z, mu);
    std::copy(r.vel.begin(), r.vel.end(), dy.begin());
    for (int d = 0; d < nd(); ++d) dy[nc + d] = r.acc[sys.dyn[d]];
    dy[nc + nd()] = r.dz;
    std::copy(r.dmu.begin(), r.dmu.end(), dy.begin() + nc + nd() + 1);
  }

  DiscretePath integrate(const ExtendedState& s0, const OdeConfig& cfg) const {
    const OdeTrajectory traj =
        rk4_integrate([this](double t, std::span<const double> y,
                             std::span<double> dy) { rhs(t, y, dy); },
                      pack_state(s0), cfg);
    DiscretePath path;
    path.times = traj.times;
    const std::size_t m = traj.times.size();
    path.q.reserve(m);
    path.v.reserve(m);
    path.z.reserve(m);
    path.mu.reserve(m);
    std::vector<double> q, v, mu;
    double z;
    for (const auto& y : traj.states) {
      unpack(y, q, v, z, mu);
      if (!sys.alg.empty()) {
        // Kinematic velocities are derived, not stored; recover them so the
        // emitted path carries a full velocity block.
        const detail::AssemblyResult r = sys.rates(q, v, z, mu);
        for (int a : sys.alg) v[a] = r.vel[a];
      }
      path.q.push_back(q);
      path.v.push_back(v);
      path.z.push_back(z);
      path.mu.push_back(mu);
    }
    return path;
  }
};

void check_consistency(const VakonomicSystem& vs, const ExtendedState& s0, double tol) {
  const std::vector<double> psi0 = vs.sys.constraint_values(s0.q, s0.v, s0.z, s0.mu);
  if (inf_norm(psi0) > tol)
    throw Error("integrate_vakonomic: inconsistent initial state, max|psi| = " +
                std::to_string(inf_norm(psi0)) + " > " + std::to_string(tol));
  const std::vector<double> station = vs.sys.kinematic_residuals(s0.q, s0.v, s0.z, s0.mu);
  if (inf_norm(station) > 1e-8)
    throw Error("integrate_vakonomic: initial state violates the kinematic stationarity "
                "relations, max residual = " +
                std::to_string(inf_norm(station)));
}

void validate_state(const VakonomicProblem& p, const ExtendedState& s) {
  if (s.q.size() != static_cast<std::size_t>(p.L.n) ||
      s.v.size() != static_cast<std::size_t>(p.L.n))
    throw DimensionError("vakonomic: state dimension does not match the problem");
  if (s.mu.size() != p.k())
    throw DimensionError("vakonomic: multiplier dimension does not match the constraints");
}

// Damped Gauss-Newton on the shooting residual. Some multiplier directions
// are pure gauge (classical problems where mu cancels out of the (q, v)
// flow): their Jacobian column is integration roundoff scaled by 1/fd_h, and
// a plain Newton step diverges along them. Columns far below the dominant
// column norm are frozen at the current guess; the rest is a least-squares
// Newton step, which coincides with the ordinary one when nothing is frozen.
template <class G>
NewtonResult gauss_newton_solve(G&& g, std::span<const double> x0, const NewtonConfig& cfg) {
  constexpr double kFreezeRatio = 1e-4;
  const auto two_norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  const std::size_t p = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> r = g(std::span<const double>(x));
  const std::size_t rows = r.size();
  double rn = inf_norm(r);
  double rn2 = two_norm(r);
  std::vector<double> best_x = x;
  double best_rn = rn;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    if (rn <= cfg.abs_tol) return {x, rn, iter};

    std::vector<double> jac(rows * p);
    std::vector<double> xw = x;
    for (std::size_t j = 0; j < p; ++j) {
      const double xj = xw[j];
      xw[j] = xj + cfg.fd_h;
      const std::vector<double> rp = g(std::span<const double>(xw));
      xw[j] = xj - cfg.fd_h;
      const std::vector<double> rm = g(std::span<const double>(xw));
      xw[j] = xj;
      for (std::size_t i = 0; i < rows; ++i)
        jac[i * p + j] = (rp[i] - rm[i]) / (2.0 * cfg.fd_h);
    }

    std::vector<double> col_norm(p, 0.0);
    double max_col = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < rows; ++i)
        col_norm[j] = std::max(col_norm[j], std::fabs(jac[i * p + j]));
      max_col = std::max(max_col, col_norm[j]);
    }
    if (max_col <= 0.0)
      throw SingularMatrixError("shooting: zero Jacobian, no descent direction");
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < p; ++j)
      if (col_norm[j] > kFreezeRatio * max_col) active.push_back(j);

    const std::size_t na = active.size();
    std::vector<double> normal(na * na, 0.0);
    std::vector<double> rhs(na, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t a = 0; a < na; ++a) {
        rhs[a] -= jac[i * p + active[a]] * r[i];
        for (std::size_t b = 0; b < na; ++b)
          normal[a * na + b] += jac[i * p + active[a]] * jac[i * p + active[b]];
      }
    double scale = 0.0;
    for (std::size_t a = 0; a < na; ++a) scale = std::max(scale, normal[a * na + a]);
    const double levenberg = 1e-12 * scale;
    for (std::size_t a = 0; a < na; ++a) normal[a * na + a] += levenberg;
    const std::vector<double> reduced = lu_solve(std::move(normal), na, rhs);
    std::vector<double> step(p, 0.0);
    for (std::size_t a = 0; a < na; ++a) step[active[a]] = reduced[a];

    // The Gauss-Newton step descends the residual 2-norm; backtrack on that
    // norm (convergence is still declared in the sup-norm).
    double alpha = cfg.damping;
    bool improved = false;
    std::vector<double> x_next(p), r_next;
    double rn2_next = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t a = 0; a < p; ++a) x_next[a] = x[a] + alpha * step[a];
      r_next = g(std::span<const double>(x_next));
      rn2_next = two_norm(r_next);
      if (rn2_next < rn2) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved)
      throw NewtonError("shooting: no residual decrease after backtracking (residual " +
                            std::to_string(best_rn) + ")",
                        best_x, best_rn, iter);
    x = std::move(x_next);
    r = std::move(r_next);
    rn = inf_norm(r);
    rn2 = rn2_next;
    if (rn < best_rn) {
      best_rn = rn;
      best_x = x;
    }
  }
  if (rn <= cfg.abs_tol) return {x, rn, cfg.max_iter};
  throw NewtonError("shooting: max iterations (" + std::to_string(cfg.max_iter) +
                        ") exceeded, best residual " + std::to_string(best_rn),
                    best_x, best_rn, cfg.max_iter);
}

}  // namespace

VakonomicProblem VakonomicProblem::make(int n, std::string_view L_src,
                                        const std::vector<std::string>& psi_src,
                                        std::vector<double> q_start, std::vector<double> q_end,
                                        double z0, double t0, double t1,
                                        std::vector<std::pair<std::string, double>> params) {
  VakonomicProblem p;
  p.L = ContactLagrangian::make(n, L_src, std::move(params));
  const std::vector<std::string> vars = p.L.variable_list();
  for (const std::string& src : psi_src) p.constraints.push_back(Expr::parse(src, vars));
  if (q_start.size() != static_cast<std::size_t>(n) || q_end.size() != static_cast<std::size_t>(n))
    throw DimensionError("VakonomicProblem: boundary data must have n components");
  p.q_start = std::move(q_start);
  p.q_end.assign(q_end.begin(), q_end.end());
  p.z0 = z0;
  p.t0 = t0;
  p.t1 = t1;
  return p;
}

ContactLagrangian extended_lagrangian(const VakonomicProblem& p) {
  const int k = static_cast<int>(p.k());

  std::vector<std::string> coords = p.L.coord_names;
  std::vector<std::string> vels = p.L.vel_names;
  std::vector<std::string> taken = p.L.variable_list();
  for (int a = 1; a <= k; ++a) {
    for (const std::string& generated : {"mu" + std::to_string(a), "vmu" + std::to_string(a)}) {
      if (std::find(taken.begin(), taken.end(), generated) != taken.end())
        throw Error("extended_lagrangian: name collision with generated variable '" + generated +
                    "'");
    }
    coords.push_back("mu" + std::to_string(a));
    vels.push_back("vmu" + std::to_string(a));
  }

  // Variable list of the extended Lagrangian: [q.., mu.. | v.., vmu.. | z | params].
  std::vector<std::string> ext_vars;
  ext_vars.insert(ext_vars.end(), coords.begin(), coords.end());
  ext_vars.insert(ext_vars.end(), vels.begin(), vels.end());
  ext_vars.push_back("z");
  for (const auto& [name, value] : p.L.params) ext_vars.push_back(name);

  Expr total = p.L.L.rebind(ext_vars);
  for (int a = 0; a < k; ++a) {
    const Expr mu_a = Expr::variable("mu" + std::to_string(a + 1), ext_vars);
    total = total - mu_a * p.constraints[static_cast<std::size_t>(a)].rebind(ext_vars);
  }
  return ContactLagrangian::make_named(std::move(coords), std::move(vels), total, p.L.params);
}

VakonomicRates vakonomic_rhs(const VakonomicProblem& p, const ExtendedState& s) {
  validate_state(p, s);
  const VakonomicSystem vs(p);
  const detail::AssemblyResult r = vs.sys.rates(s.q, s.v, s.z, s.mu);
  return {r.vel, r.acc, r.dz, r.dmu};
}

DiscretePath integrate_vakonomic(const VakonomicProblem& p, const ExtendedState& s0,
                                 const OdeConfig& cfg, double consistency_tol) {
  validate_state(p, s0);
  const VakonomicSystem vs(p);
  check_consistency(vs, s0, consistency_tol);
  return vs.integrate(s0, cfg);
}

double constraint_drift(const VakonomicProblem& p, const DiscretePath& path) {
  path.validate();
  const std::vector<std::string> vars = p.L.variable_list();
  std::vector<double> packed(p.L.packed_size());
  double drift = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    p.L.pack(path.q[i], path.v[i], path.z.empty() ? 0.0 : path.z[i], packed);
    for (const Expr& c : p.constraints) drift = std::max(drift, std::fabs(c.eval(packed)));
  }
  return drift;
}

double kinematic_residual(const VakonomicProblem& p, const DiscretePath& path) {
  const VakonomicSystem vs(p);
  if (vs.sys.alg.empty()) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    const std::vector<double> res = vs.sys.kinematic_residuals(
        path.q[i], path.v[i], path.z.empty() ? 0.0 : path.z[i], path.mu[i]);
    worst = std::max(worst, inf_norm(res));
  }
  return worst;
}

BvpResult solve_vakonomic_bvp(const VakonomicProblem& p, const BvpOptions& opt) {
  const VakonomicSystem vs(p);
  const int nc = vs.nc;
  const int k = vs.k;
  const int nd = vs.nd();
  const int na = static_cast<int>(vs.sys.alg.size());
  if (p.q_start.size() != static_cast<std::size_t>(nc) ||
      p.q_end.size() != static_cast<std::size_t>(nc))
    throw DimensionError("solve_vakonomic_bvp: boundary data must have one entry per coordinate");
  for (int j : vs.sys.dyn)
    if (!p.q_end[static_cast<std::size_t>(j)])
      throw DimensionError("solve_vakonomic_bvp: endpoint for dynamic coordinate '" +
                           p.L.coord_names[static_cast<std::size_t>(j)] + "' must be fixed");
  for (int j : vs.sys.alg)
    if (p.q_end[static_cast<std::size_t>(j)])
      throw DimensionError("solve_vakonomic_bvp: kinematic coordinate '" +
                           p.L.coord_names[static_cast<std::size_t>(j)] +
                           "' has free endpoints; drop its q_end entry");

  if (!opt.v0_guess.empty() && opt.v0_guess.size() != static_cast<std::size_t>(nc))
    throw DimensionError("solve_vakonomic_bvp: v0 guess must have n components");
  if (!opt.mu0_guess.empty() && opt.mu0_guess.size() != static_cast<std::size_t>(k))
    throw DimensionError("solve_vakonomic_bvp: mu0 guess must have k components");

  const double horizon = p.t1 - p.t0;
  // Unknowns: [v0 on dynamic coords, q0 on kinematic coords, mu0].
  std::vector<double> unknowns;
  unknowns.reserve(static_cast<std::size_t>(nd + na + k));
  for (int j : vs.sys.dyn) {
    double guess = opt.v0_guess.empty()
                       ? (*p.q_end[static_cast<std::size_t>(j)] - p.q_start[static_cast<std::size_t>(j)]) / horizon
                       : opt.v0_guess[static_cast<std::size_t>(j)];
    unknowns.push_back(guess);
  }
  for (int j : vs.sys.alg) unknowns.push_back(p.q_start[static_cast<std::size_t>(j)]);
  for (int a = 0; a < k; ++a)
    unknowns.push_back(opt.mu0_guess.empty() ? 0.0 : opt.mu0_guess[static_cast<std::size_t>(a)]);

  OdeConfig cfg{opt.dt, p.t0, p.t1};
  auto make_state = [&](std::span<const double> x) {
    ExtendedState s;
    s.q = p.q_start;
    s.v.assign(nc, 0.0);
    for (int d = 0; d < nd; ++d) s.v[vs.sys.dyn[d]] = x[d];
    for (int a = 0; a < na; ++a) s.q[vs.sys.alg[a]] = x[nd + a];
    s.z = p.z0;
    s.mu.assign(x.begin() + nd + na, x.end());
    return s;
  };

  // Residual rows: psi(s0), kinematic stationarity at t0, fixed endpoints.
  auto residual = [&](std::span<const double> x) {
    const ExtendedState s0 = make_state(x);
    std::vector<double> r = vs.sys.constraint_values(s0.q, s0.v, s0.z, s0.mu);
    const std::vector<double> station = vs.sys.kinematic_residuals(s0.q, s0.v, s0.z, s0.mu);
    r.insert(r.end(), station.begin(), station.end());
    const DiscretePath path = vs.integrate(s0, cfg);
    for (int j : vs.sys.dyn)
      r.push_back(path.q.back()[static_cast<std::size_t>(j)] -
                  *p.q_end[static_cast<std::size_t>(j)]);
    return r;
  };

  const NewtonResult root = gauss_newton_solve(residual, unknowns, opt.newton);

  const ExtendedState s0 = make_state(root.x);
  BvpResult result;
  result.path = vs.integrate(s0, cfg);
  result.newton_iterations = root.iterations;
  result.shooting_residual = root.residual_inf;
  result.v0 = result.path.v.front();
  result.mu0 = s0.mu;
  return result;
}

std::vector<BvpResult> solve_vakonomic_bvp_multi(const VakonomicProblem& p,
                                                 const std::vector<BvpOptions>& guesses) {
  std::vector<BvpResult> found;
  for (const BvpOptions& opt : guesses) {
    BvpResult r;
    try {
      r = solve_vakonomic_bvp(p, opt);
    } catch (const Error&) {
      continue;
    }
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const BvpResult& other) {
      double d = 0.0;
      for (std::size_t i = 0; i < r.v0.size(); ++i) d = std::max(d, std::fabs(r.v0[i] - other.v0[i]));
      for (std::size_t i = 0; i < r.mu0.size(); ++i)
        d = std::max(d, std::fabs(r.mu0[i] - other.mu0[i]));
      return d <= 1e-6;
    });
    if (!duplicate) found.push_back(std::move(r));
  }
  return found;
}

}  // namespace herglotz
