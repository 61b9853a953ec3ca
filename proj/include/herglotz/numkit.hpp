#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "herglotz/errors.hpp"

namespace herglotz {

/// Central finite differences.
struct FdConfig {
  double h = 1e-6;
};

/// Nested central differences for second partials. Both steps sit at 1e-4:
/// the quotient divides by outer_h*inner_h, so a 1e-6 inner step would leave
/// a rounding floor near 1e-6 in the result, too coarse for the gradient
/// checks the solvers are held to.
struct SecondFdConfig {
  double outer_h = 1e-4;
  double inner_h = 1e-4;
};

/// Fixed-step classical Runge-Kutta 4.
struct OdeConfig {
  double dt = 1e-3;
  double t0 = 0.0;
  double t1 = 1.0;
};

struct NewtonConfig {
  double abs_tol = 1e-10;
  int max_iter = 50;
  double damping = 1.0;  // initial step scale, halved while the residual grows
  double fd_h = 1e-6;    // step for the finite-difference Jacobian
};

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

/// Central difference in coordinate `i`, perturbing `x` in place and
/// restoring it bitwise before returning.
template <class F>
double fd_partial_inplace(F&& f, std::span<double> x, std::size_t i, double h) {
  const double xi = x[i];
  x[i] = xi + h;
  const double fp = f(std::span<const double>(x.data(), x.size()));
  x[i] = xi - h;
  const double fm = f(std::span<const double>(x.data(), x.size()));
  x[i] = xi;
  return (fp - fm) / (2.0 * h);
}

/// (f(x + h e_i) - f(x - h e_i)) / (2h).
template <class F>
double fd_partial(F&& f, std::span<const double> x, std::size_t i, FdConfig cfg = {}) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("FdConfig.h must be positive");
  std::vector<double> w(x.begin(), x.end());
  return fd_partial_inplace(f, w, i, cfg.h);
}

/// d^2 f / dx_i dx_j as a central difference (step outer_h in x_i) of the
/// central-difference first partial in x_j (step inner_h).
template <class F>
double fd_second_partial_inplace(F&& f, std::span<double> x, std::size_t i, std::size_t j,
                                 SecondFdConfig cfg = {}) {
  const double xi = x[i];
  x[i] = xi + cfg.outer_h;
  const double gp = fd_partial_inplace(f, x, j, cfg.inner_h);
  x[i] = xi - cfg.outer_h;
  const double gm = fd_partial_inplace(f, x, j, cfg.inner_h);
  x[i] = xi;
  return (gp - gm) / (2.0 * cfg.outer_h);
}

template <class F>
double fd_second_partial(F&& f, std::span<const double> x, std::size_t i, std::size_t j,
                         SecondFdConfig cfg = {}) {
  std::vector<double> w(x.begin(), x.end());
  return fd_second_partial_inplace(f, w, i, j, cfg);
}

/// Time grid for OdeConfig: uniform steps of dt, with the final step
/// shortened to land exactly on t1. When (t1-t0)/dt is an integer to within
/// rounding, nodes are placed at exact fractions of the span so the endpoint
/// is hit without a stub step.
std::vector<double> ode_grid(const OdeConfig& cfg);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // one state per node
};

namespace detail {
template <class Rhs>
void rk4_eval(Rhs&& rhs, double t, std::span<const double> y, std::span<double> dy) {
  try {
    rhs(t, y, dy);
  } catch (const Error& e) {
    throw OdeError("rhs evaluation failed at t=" + std::to_string(t) + ": " + e.what(), t);
  }
}
}  // namespace detail

/// One classical RK4 step from (t, y) over dt into `out` (out may alias y).
template <class Rhs>
void rk4_step(Rhs&& rhs, double t, double dt, std::span<const double> y, std::span<double> out) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  detail::rk4_eval(rhs, t, y, std::span<double>(k1));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  detail::rk4_eval(rhs, t + 0.5 * dt, tmp, std::span<double>(k2));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  detail::rk4_eval(rhs, t + 0.5 * dt, tmp, std::span<double>(k3));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  detail::rk4_eval(rhs, t + dt, tmp, std::span<double>(k4));
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Integrates rhs(t, y, dydt) over cfg's grid; returns every node.
template <class Rhs>
OdeTrajectory rk4_integrate(Rhs&& rhs, std::span<const double> y0, const OdeConfig& cfg) {
  OdeTrajectory traj;
  traj.times = ode_grid(cfg);
  traj.states.reserve(traj.times.size());
  traj.states.emplace_back(y0.begin(), y0.end());
  std::vector<double> y(y0.begin(), y0.end());
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    rk4_step(rhs, traj.times[i], dt, y, std::span<double>(y));
    traj.states.push_back(y);
  }
  return traj;
}

/// Dense LU with partial pivoting (row-major). Systems here stay small
/// (<= ~20 unknowns), so the explicit-inverse condition estimate is cheap.
class LuFactor {
 public:
  LuFactor(std::vector<double> a, std::size_t n);

  bool singular() const { return singular_; }
  double cond_inf() const;  // ||A||_inf * ||A^-1||_inf, inf when singular
  std::vector<double> solve(std::span<const double> b) const;

 private:
  std::vector<double> lu_;
  std::vector<std::size_t> perm_;
  std::size_t n_;
  double norm_a_ = 0.0;
  bool singular_ = false;
};

std::vector<double> lu_solve(std::vector<double> a, std::size_t n, std::span<const double> b);

struct NewtonResult {
  std::vector<double> x;
  double residual_inf = 0.0;
  int iterations = 0;
};

/// Damped Newton on g(x) = 0 with a finite-difference Jacobian; accepts x
/// once ||g(x)||_inf <= abs_tol. Backtracks by halving until the residual
/// decreases. Throws SingularMatrixError / NewtonError (with best iterate).
template <class G>
NewtonResult newton_solve(G&& g, std::span<const double> x0, const NewtonConfig& cfg = {}) {
  if (!(cfg.abs_tol > 0.0)) throw std::invalid_argument("NewtonConfig.abs_tol must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("NewtonConfig.max_iter must be >= 1");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw std::invalid_argument("NewtonConfig.damping must lie in (0, 1]");

  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> r = g(std::span<const double>(x));
  if (r.size() != n)
    throw DimensionError("newton_solve: residual dimension " + std::to_string(r.size()) +
                         " does not match " + std::to_string(n) + " unknowns");
  double rn = inf_norm(r);
  std::vector<double> best_x = x;
  double best_rn = rn;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    if (rn <= cfg.abs_tol) return {x, rn, iter};

    std::vector<double> jac(n * n);
    std::vector<double> xw = x;
    for (std::size_t j = 0; j < n; ++j) {
      const double xj = xw[j];
      xw[j] = xj + cfg.fd_h;
      std::vector<double> rp = g(std::span<const double>(xw));
      xw[j] = xj - cfg.fd_h;
      std::vector<double> rm = g(std::span<const double>(xw));
      xw[j] = xj;
      for (std::size_t i = 0; i < n; ++i) jac[i * n + j] = (rp[i] - rm[i]) / (2.0 * cfg.fd_h);
    }
    LuFactor lu(std::move(jac), n);
    if (lu.singular())
      throw SingularMatrixError("newton_solve: singular Jacobian at iteration " +
                                std::to_string(iter));
    std::vector<double> neg_r(n);
    for (std::size_t i = 0; i < n; ++i) neg_r[i] = -r[i];
    const std::vector<double> step = lu.solve(neg_r);

    double alpha = cfg.damping;
    bool improved = false;
    std::vector<double> x_next(n), r_next;
    double rn_next = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_next[i] = x[i] + alpha * step[i];
      r_next = g(std::span<const double>(x_next));
      rn_next = inf_norm(r_next);
      if (rn_next < rn) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved)
      throw NewtonError("newton_solve: no residual decrease after backtracking (residual " +
                            std::to_string(best_rn) + ")",
                        best_x, best_rn, iter);
    x = std::move(x_next);
    r = std::move(r_next);
    rn = rn_next;
    if (rn < best_rn) {
      best_rn = rn;
      best_x = x;
    }
  }
  if (rn <= cfg.abs_tol) return {x, rn, cfg.max_iter};
  throw NewtonError("newton_solve: max iterations (" + std::to_string(cfg.max_iter) +
                        ") exceeded, best residual " + std::to_string(best_rn),
                    best_x, best_rn, cfg.max_iter);
}

}  // namespace herglotz
