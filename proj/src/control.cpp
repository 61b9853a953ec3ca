#include "herglotz/control.hpp"

#include <algorithm>
#include <cmath>

#include "herglotz/errors.hpp"

namespace herglotz {

ControlProblem ControlProblem::make(int n, int m, const std::vector<std::string>& X_src,
                                    std::string_view F_src, std::vector<double> x_a,
                                    std::vector<double> x_b, double z0, double t0, double t1,
                                    std::vector<std::pair<std::string, double>> params) {
  if (n < 1 || m < 1) throw DimensionError("ControlProblem: need n >= 1 and m >= 1");
  if (X_src.size() != static_cast<std::size_t>(n))
    throw DimensionError("ControlProblem: expected one vector-field component per state");
  if (x_a.size() != static_cast<std::size_t>(n) || x_b.size() != static_cast<std::size_t>(n))
    throw DimensionError("ControlProblem: boundary data must have n components");
  ControlProblem cp;
  cp.n = n;
  cp.m = m;
  cp.params = std::move(params);
  const std::vector<std::string> vars = cp.variable_list();
  for (const std::string& src : X_src) cp.X.push_back(Expr::parse(src, vars));
  cp.F = Expr::parse(F_src, vars);
  cp.x_start = std::move(x_a);
  cp.x_target = std::move(x_b);
  cp.z0 = z0;
  cp.t0 = t0;
  cp.t1 = t1;
  return cp;
}

std::vector<std::string> ControlProblem::variable_list() const {
  std::vector<std::string> vars;
  for (int i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
  for (int a = 1; a <= m; ++a) vars.push_back("u" + std::to_string(a));
  vars.push_back("z");
  for (const auto& [name, value] : params) vars.push_back(name);
  return vars;
}

std::size_t ControlProblem::packed_size() const {
  return static_cast<std::size_t>(n + m) + 1 + params.size();
}

void ControlProblem::pack(std::span<const double> x, std::span<const double> u, double z,
                          std::vector<double>& out) const {
  if (x.size() != static_cast<std::size_t>(n) || u.size() != static_cast<std::size_t>(m))
    throw DimensionError("ControlProblem: state/control dimension mismatch");
  out.resize(packed_size());
  std::copy(x.begin(), x.end(), out.begin());
  std::copy(u.begin(), u.end(), out.begin() + n);
  out[z_index()] = z;
  for (std::size_t p = 0; p < params.size(); ++p) out[z_index() + 1 + p] = params[p].second;
}

VakonomicProblem hocp_as_vakonomic(const ControlProblem& cp) {
  // Configuration (x1..xn, u1..um) with generated velocity names vx*/vu*;
  // Lagrangian F, one constraint X^i - vx_i per state equation.
  std::vector<std::string> coords;
  std::vector<std::string> vels;
  for (int i = 1; i <= cp.n; ++i) {
    coords.push_back("x" + std::to_string(i));
    vels.push_back("vx" + std::to_string(i));
  }
  for (int a = 1; a <= cp.m; ++a) {
    coords.push_back("u" + std::to_string(a));
    vels.push_back("vu" + std::to_string(a));
  }
  const std::vector<std::string> user_vars = cp.variable_list();
  for (const std::string& v : vels)
    if (std::find(user_vars.begin(), user_vars.end(), v) != user_vars.end())
      throw Error("hocp_as_vakonomic: name collision with generated velocity '" + v + "'");

  std::vector<std::string> vak_vars;
  vak_vars.insert(vak_vars.end(), coords.begin(), coords.end());
  vak_vars.insert(vak_vars.end(), vels.begin(), vels.end());
  vak_vars.push_back("z");
  for (const auto& [name, value] : cp.params) vak_vars.push_back(name);

  VakonomicProblem p;
  p.L = ContactLagrangian::make_named(coords, vels, cp.F.rebind(vak_vars), cp.params);
  for (int i = 0; i < cp.n; ++i) {
    const Expr vx = Expr::variable("vx" + std::to_string(i + 1), vak_vars);
    p.constraints.push_back(cp.X[static_cast<std::size_t>(i)].rebind(vak_vars) - vx);
  }
  p.q_start = cp.x_start;
  p.q_start.insert(p.q_start.end(), static_cast<std::size_t>(cp.m), 0.0);
  p.q_end.assign(cp.x_target.begin(), cp.x_target.end());
  p.q_end.resize(static_cast<std::size_t>(cp.n + cp.m), std::nullopt);
  p.z0 = cp.z0;
  p.t0 = cp.t0;
  p.t1 = cp.t1;
  return p;
}

std::vector<double> stationarity_solve(const ControlProblem& cp, std::span<const double> x,
                                       std::span<const double> mu, double z,
                                       std::span<const double> u_guess,
                                       const NewtonConfig& newton) {
  if (mu.size() != static_cast<std::size_t>(cp.n))
    throw DimensionError("stationarity_solve: costate dimension mismatch");
  if (u_guess.size() != static_cast<std::size_t>(cp.m))
    throw DimensionError("stationarity_solve: control guess dimension mismatch");

  std::vector<double> packed;
  auto residual = [&](std::span<const double> u) {
    cp.pack(x, u, z, packed);
    ExprFrame ff(cp.F, packed);
    std::vector<ExprFrame> xf;
    xf.reserve(cp.X.size());
    for (const Expr& e : cp.X) xf.emplace_back(e, packed);
    std::vector<double> r(static_cast<std::size_t>(cp.m));
    for (int a = 0; a < cp.m; ++a) {
      double s = ff.first(cp.u_index(a));
      for (int j = 0; j < cp.n; ++j) s -= mu[j] * xf[static_cast<std::size_t>(j)].first(cp.u_index(a));
      r[static_cast<std::size_t>(a)] = s;
    }
    return r;
  };
  return newton_solve(residual, u_guess, newton).x;
}

ControlRates control_rhs(const ControlProblem& cp, const ControlState& s) {
  std::vector<double> u_warm = s.u;
  if (u_warm.empty()) u_warm.assign(static_cast<std::size_t>(cp.m), 0.0);
  const std::vector<double> u = stationarity_solve(cp, s.x, s.mu, s.z, u_warm);

  std::vector<double> packed;
  cp.pack(s.x, u, s.z, packed);
  ExprFrame ff(cp.F, packed);
  std::vector<ExprFrame> xf;
  xf.reserve(cp.X.size());
  for (const Expr& e : cp.X) xf.emplace_back(e, packed);

  ControlRates out;
  out.u = u;
  out.dz = ff.value();
  out.dx.resize(static_cast<std::size_t>(cp.n));
  for (int j = 0; j < cp.n; ++j) out.dx[static_cast<std::size_t>(j)] = xf[static_cast<std::size_t>(j)].value();

  const double dF_dz = ff.first(cp.z_index());
  std::vector<double> dX_dz(static_cast<std::size_t>(cp.n));
  for (int j = 0; j < cp.n; ++j)
    dX_dz[static_cast<std::size_t>(j)] = xf[static_cast<std::size_t>(j)].first(cp.z_index());

  out.dmu.resize(static_cast<std::size_t>(cp.n));
  for (int i = 0; i < cp.n; ++i) {
    double rate = s.mu[static_cast<std::size_t>(i)] * dF_dz + ff.first(cp.x_index(i));
    for (int j = 0; j < cp.n; ++j) {
      rate -= s.mu[static_cast<std::size_t>(j)] * xf[static_cast<std::size_t>(j)].first(cp.x_index(i));
      rate -= dX_dz[static_cast<std::size_t>(j)] * s.mu[static_cast<std::size_t>(i)] *
              s.mu[static_cast<std::size_t>(j)];
    }
    out.dmu[static_cast<std::size_t>(i)] = rate;
  }
  return out;
}

namespace {

// Integrates (x, mu, z) with the control warm-started through the RK stages;
// records x, mu, z and the node-consistent control at every grid point.
DiscretePath integrate_control(const ControlProblem& cp, std::span<const double> mu_a,
                               std::span<const double> u0, const OdeConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cp.n);
  std::vector<double> y(2 * n + 1);
  std::copy(cp.x_start.begin(), cp.x_start.end(), y.begin());
  std::copy(mu_a.begin(), mu_a.end(), y.begin() + n);
  y[2 * n] = cp.z0;

  std::vector<double> u_warm(u0.begin(), u0.end());
  auto rhs = [&](double, std::span<const double> yy, std::span<double> dy) {
    ControlState s;
    s.x.assign(yy.begin(), yy.begin() + n);
    s.mu.assign(yy.begin() + n, yy.begin() + 2 * n);
    s.z = yy[2 * n];
    s.u = u_warm;
    const ControlRates r = control_rhs(cp, s);
    u_warm = r.u;
    std::copy(r.dx.begin(), r.dx.end(), dy.begin());
    std::copy(r.dmu.begin(), r.dmu.end(), dy.begin() + n);
    dy[2 * n] = r.dz;
  };

  DiscretePath path;
  const std::vector<double> grid = ode_grid(cfg);
  path.times = grid;
  path.q.reserve(grid.size());
  path.mu.reserve(grid.size());
  path.u.reserve(grid.size());
  path.z.reserve(grid.size());

  auto record = [&](std::span<const double> yy) {
    std::vector<double> x(yy.begin(), yy.begin() + n);
    std::vector<double> mu(yy.begin() + n, yy.begin() + 2 * n);
    const std::vector<double> u_node = stationarity_solve(cp, x, mu, yy[2 * n], u_warm);
    u_warm = u_node;
    path.q.push_back(std::move(x));
    path.mu.push_back(std::move(mu));
    path.u.push_back(u_node);
    path.z.push_back(yy[2 * n]);
  };

  record(y);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    rk4_step(rhs, grid[i], grid[i + 1] - grid[i], y, std::span<double>(y));
    record(y);
  }
  return path;
}

}  // namespace

HocpResult solve_hocp(const ControlProblem& cp, const HocpOptions& opt) {
  std::vector<double> mu_guess = opt.mu_a_guess;
  if (mu_guess.empty()) mu_guess.assign(static_cast<std::size_t>(cp.n), 0.0);
  if (mu_guess.size() != static_cast<std::size_t>(cp.n))
    throw DimensionError("solve_hocp: mu_a guess must have n components");
  std::vector<double> u0 = opt.u_guess;
  if (u0.empty()) u0.assign(static_cast<std::size_t>(cp.m), 0.0);
  const OdeConfig cfg{opt.dt, cp.t0, cp.t1};

  auto residual = [&](std::span<const double> mu_a) {
    const DiscretePath path = integrate_control(cp, mu_a, u0, cfg);
    std::vector<double> r(static_cast<std::size_t>(cp.n));
    for (int i = 0; i < cp.n; ++i)
      r[static_cast<std::size_t>(i)] =
          path.q.back()[static_cast<std::size_t>(i)] - cp.x_target[static_cast<std::size_t>(i)];
    return r;
  };
  const NewtonResult root = newton_solve(residual, mu_guess, opt.newton);

  HocpResult result;
  result.path = integrate_control(cp, root.x, u0, cfg);
  result.newton_iterations = root.iterations;
  result.shooting_residual = root.residual_inf;
  return result;
}

double stationarity_residual(const ControlProblem& cp, const DiscretePath& path) {
  path.validate();
  if (path.mu.empty() || path.u.empty() || path.z.empty())
    throw DimensionError("stationarity_residual: path must carry mu, u and z");
  std::vector<double> packed;
  double worst = 0.0;
  for (std::size_t node = 0; node < path.nodes(); ++node) {
    cp.pack(path.q[node], path.u[node], path.z[node], packed);
    ExprFrame ff(cp.F, packed);
    std::vector<ExprFrame> xf;
    xf.reserve(cp.X.size());
    for (const Expr& e : cp.X) xf.emplace_back(e, packed);
    for (int a = 0; a < cp.m; ++a) {
      double s = ff.first(cp.u_index(a));
      for (int j = 0; j < cp.n; ++j)
        s -= path.mu[node][static_cast<std::size_t>(j)] * xf[static_cast<std::size_t>(j)].first(cp.u_index(a));
      worst = std::max(worst, std::fabs(s));
    }
  }
  return worst;
}

}  // namespace herglotz
