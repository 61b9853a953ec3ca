#include "herglotz/dynamics.hpp"

#include <cmath>

#include "assembly.hpp"
#include "herglotz/errors.hpp"

namespace herglotz {

ContactRates herglotz_rhs(const ContactLagrangian& L, const ContactState& s) {
  const auto sys = detail::ConstrainedSystem::build(L, {}, L.n, /*allow_kinematic=*/false);
  const detail::AssemblyResult r = sys.rates(s.q, s.v, s.z, {});
  return {r.vel, r.acc, r.dz};
}

DiscretePath integrate_herglotz(const ContactLagrangian& L, const ContactState& s0,
                                const OdeConfig& cfg) {
  const auto sys = detail::ConstrainedSystem::build(L, {}, L.n, /*allow_kinematic=*/false);
  const std::size_t n = static_cast<std::size_t>(L.n);
  if (s0.q.size() != n || s0.v.size() != n)
    throw DimensionError("integrate_herglotz: initial state dimension mismatch");

  std::vector<double> y0(2 * n + 1);
  std::copy(s0.q.begin(), s0.q.end(), y0.begin());
  std::copy(s0.v.begin(), s0.v.end(), y0.begin() + n);
  y0[2 * n] = s0.z;

  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    const auto r = sys.rates(y.subspan(0, n), y.subspan(n, n), y[2 * n], {});
    std::copy(r.vel.begin(), r.vel.end(), dy.begin());
    std::copy(r.acc.begin(), r.acc.end(), dy.begin() + n);
    dy[2 * n] = r.dz;
  };
  const OdeTrajectory traj = rk4_integrate(rhs, y0, cfg);

  DiscretePath path;
  path.times = traj.times;
  path.q.reserve(traj.times.size());
  path.v.reserve(traj.times.size());
  path.z.reserve(traj.times.size());
  for (const auto& y : traj.states) {
    path.q.emplace_back(y.begin(), y.begin() + n);
    path.v.emplace_back(y.begin() + n, y.begin() + 2 * n);
    path.z.push_back(y[2 * n]);
  }
  return path;
}

MultiplierCurve multiplier_evolution(const ContactLagrangian& L, const DiscretePath& path) {
  path.validate();
  if (path.v.empty() || path.z.empty())
    throw DimensionError("multiplier_evolution: path must carry q, v and z");
  if (path.dim() != L.n)
    throw DimensionError("multiplier_evolution: path/Lagrangian dimension mismatch");

  const std::size_t m = path.nodes();
  std::vector<double> packed(L.packed_size());
  std::vector<double> qs, vs;

  // -dL/dz along the path, with (q, v, z) interpolated linearly.
  auto rate = [&](std::size_t interval, double t) {
    path.sample_linear(t, qs, vs);
    const double t0 = path.times[interval];
    const double t1 = path.times[interval + 1];
    const double w = (t - t0) / (t1 - t0);
    const double zz = (1.0 - w) * path.z[interval] + w * path.z[interval + 1];
    L.pack(qs, vs, zz, packed);
    ExprFrame frame(L.L, packed);
    return -frame.first(L.z_index());
  };

  MultiplierCurve curve;
  curve.times = path.times;
  curve.lambda.assign(m, 1.0);
  // Backward from the terminal normalization lambda(t_N) = 1.
  for (std::size_t kk = m - 1; kk-- > 0;) {
    const double t_hi = path.times[kk + 1];
    const double h = path.times[kk] - t_hi;  // negative
    const double lam = curve.lambda[kk + 1];
    const double k1 = rate(kk, t_hi) * lam;
    const double k2 = rate(kk, t_hi + 0.5 * h) * (lam + 0.5 * h * k1);
    const double k3 = rate(kk, t_hi + 0.5 * h) * (lam + 0.5 * h * k2);
    const double k4 = rate(kk, t_hi + h) * (lam + h * k3);
    curve.lambda[kk] = lam + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return curve;
}

}  // namespace herglotz
