#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/numkit.hpp"

using namespace herglotz;

namespace {

// Closed-form underdamped solution of q'' + g q' + w^2 q = 0 with q(0) = q0,
// q'(0) = 0.
double damped_q(double t, double w, double g, double q0) {
  const double wbar = std::sqrt(w * w - g * g / 4.0);
  return q0 * std::exp(-g * t / 2.0) *
         (std::cos(wbar * t) + g / (2.0 * wbar) * std::sin(wbar * t));
}

const ContactLagrangian& oscillator() {
  static const ContactLagrangian L =
      ContactLagrangian::make(1, "v1^2/2 - w^2*q1^2/2 - g*z", {{"w", 1.0}, {"g", 0.1}});
  return L;
}

}  // namespace

TEST_CASE("herglotz_rhs matches hand-expanded cases") {
  // L = v^2/2 - g z: acceleration is v dL/dz = -g v.
  const ContactLagrangian free_damped =
      ContactLagrangian::make(1, "v1^2/2 - g*z", {{"g", 0.5}});
  const ContactRates r1 = herglotz_rhs(free_damped, {{0.0}, {1.0}, 0.0});
  CHECK(r1.dq[0] == 1.0);
  CHECK(std::fabs(r1.dv[0] + 0.5) <= 1e-7);
  CHECK(std::fabs(r1.dz - 0.5) <= 1e-12);

  // z-independent L: plain Euler-Lagrange, dv = -q.
  const ContactLagrangian plain = ContactLagrangian::make(1, "v1^2/2 - q1^2/2");
  const ContactRates r2 = herglotz_rhs(plain, {{0.7}, {0.3}, 0.0});
  CHECK(std::fabs(r2.dv[0] + 0.7) <= 1e-7);

  // Damped oscillator: dv = -w^2 q - g v.
  const ContactLagrangian osc =
      ContactLagrangian::make(1, "v1^2/2 - w^2*q1^2/2 - g*z", {{"w", 1.3}, {"g", 0.2}});
  const ContactRates r3 = herglotz_rhs(osc, {{0.4}, {-0.2}, 0.3});
  CHECK(std::fabs(r3.dv[0] - (-1.3 * 1.3 * 0.4 - 0.2 * (-0.2))) <= 1e-6);
}

TEST_CASE("herglotz_rhs rejects singular mass matrices") {
  const ContactLagrangian degenerate = ContactLagrangian::make(1, "q1*z");
  CHECK_THROWS_AS((void)herglotz_rhs(degenerate, {{1.0}, {1.0}, 1.0}), SingularMatrixError);
}

TEST_CASE("damped oscillator matches the closed form to 1e-6") {
  const DiscretePath path = integrate_herglotz(oscillator(), {{1.0}, {0.0}, 0.0},
                                               {1e-3, 0.0, 10.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i)
    worst = std::max(worst, std::fabs(path.q[i][0] - damped_q(path.times[i], 1.0, 0.1, 1.0)));
  CHECK(worst <= 1e-6);

  // dz/dt = L holds along the trajectory (interior central differences).
  double zres = 0.0;
  for (std::size_t i = 1; i + 1 < path.nodes(); ++i) {
    const double fd = (path.z[i + 1] - path.z[i - 1]) / (path.times[i + 1] - path.times[i - 1]);
    zres = std::max(zres, std::fabs(fd - oscillator().value(path.q[i], path.v[i], path.z[i])));
  }
  CHECK(zres <= 1e-6);

  // Velocities match the finite-difference slope of q at O(dt^2).
  const auto slopes = fd_velocities(path.times, path.q);
  double vres = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i)
    vres = std::max(vres, std::fabs(slopes[i][0] - path.v[i][0]));
  CHECK(vres <= 1e-6);

  // Energy dissipates at rate g v^2: |dE/dt + g v^2| small pointwise.
  double eres = 0.0;
  std::vector<double> energy(path.nodes());
  for (std::size_t i = 0; i < path.nodes(); ++i)
    energy[i] = 0.5 * path.v[i][0] * path.v[i][0] + 0.5 * path.q[i][0] * path.q[i][0];
  for (std::size_t i = 1; i + 1 < path.nodes(); ++i) {
    const double fd = (energy[i + 1] - energy[i - 1]) / (path.times[i + 1] - path.times[i - 1]);
    eres = std::max(eres, std::fabs(fd + 0.1 * path.v[i][0] * path.v[i][0]));
  }
  CHECK(eres <= 1e-6);
}

TEST_CASE("free particle integrates exactly up to RK4 rounding") {
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2");
  const DiscretePath path = integrate_herglotz(L, {{0.0}, {1.0}, 0.0}, {1e-2, 0.0, 1.0});
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    CHECK(std::fabs(path.q[i][0] - path.times[i]) <= 1e-12);
    CHECK(std::fabs(path.z[i] - 0.5 * path.times[i]) <= 1e-12);
  }
}

TEST_CASE("action_z reproduces the integrator's own z") {
  // Free particle: linear interpolation is exact, so the agreement is tight.
  const ContactLagrangian free_L = ContactLagrangian::make(1, "v1^2/2");
  const DiscretePath fp = integrate_herglotz(free_L, {{0.0}, {1.0}, 0.0}, {1e-3, 0.0, 1.0});
  const DiscretePath fp_z = action_z(free_L, fp, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < fp.nodes(); ++i)
    worst = std::max(worst, std::fabs(fp_z.z[i] - fp.z[i]));
  CHECK(worst <= 1e-8);

  // Oscillator: the mid-stage linear interpolation contributes ~4e-2 * dt^2
  // per unit time, so dt = 2.5e-4 keeps the gap under 1e-8 on [0, 1] while
  // dt = 1e-3 over [0, 10] sits at a few 1e-8.
  const DiscretePath osc1 = integrate_herglotz(oscillator(), {{1.0}, {0.0}, 0.0},
                                               {2.5e-4, 0.0, 1.0});
  const DiscretePath osc1_z = action_z(oscillator(), osc1, 0.0);
  worst = 0.0;
  for (std::size_t i = 0; i < osc1.nodes(); ++i)
    worst = std::max(worst, std::fabs(osc1_z.z[i] - osc1.z[i]));
  CHECK(worst <= 1e-8);

  const DiscretePath osc10 = integrate_herglotz(oscillator(), {{1.0}, {0.0}, 0.0},
                                                {1e-3, 0.0, 10.0});
  const DiscretePath osc10_z = action_z(oscillator(), osc10, 0.0);
  worst = 0.0;
  for (std::size_t i = 0; i < osc10.nodes(); ++i)
    worst = std::max(worst, std::fabs(osc10_z.z[i] - osc10.z[i]));
  CHECK(worst <= 1e-7);
}

TEST_CASE("z-independent L reduces to plain Euler-Lagrange bitwise") {
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2 - q1^2/2");
  const DiscretePath hz = integrate_herglotz(L, {{1.0}, {0.0}, 0.0}, {1e-3, 0.0, 10.0});

  // Test-local Euler-Lagrange integration with the same primitives:
  // M dv = dL/dq - (d2L/dv dq) v.
  std::vector<double> packed;
  auto el_rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    L.pack(std::span<const double>(&y[0], 1), std::span<const double>(&y[1], 1), 0.0, packed);
    ExprFrame f(L.L, packed);
    const double mass = f.second(L.vel_index(0), L.vel_index(0));
    const double rhs = f.first(L.coord_index(0)) + f.first(L.vel_index(0)) * f.first(L.z_index())
                       - f.second(L.vel_index(0), L.coord_index(0)) * y[1]
                       - f.second(L.vel_index(0), L.z_index()) * f.value();
    dy[0] = y[1];
    dy[1] = lu_solve({mass}, 1, std::vector<double>{rhs})[0];
  };
  const OdeTrajectory el = rk4_integrate(el_rhs, std::vector<double>{1.0, 0.0},
                                         {1e-3, 0.0, 10.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < hz.nodes(); ++i) {
    worst = std::max(worst, std::fabs(hz.q[i][0] - el.states[i][0]));
    worst = std::max(worst, std::fabs(hz.v[i][0] - el.states[i][1]));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("criticality: the integrated trajectory is a critical point") {
  const DiscretePath path = integrate_herglotz(oscillator(), {{1.0}, {0.0}, 0.0},
                                               {1e-3, 0.0, 10.0});
  double worst = 0.0;
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    const Variation dir = random_variation(path.times, 1, seed);
    worst = std::max(worst, std::fabs(first_variation(oscillator(), path, 0.0, dir)));
  }
  CHECK(worst <= 1e-4);

  // A straight line between the same endpoints is not a critical point.
  DiscretePath line;
  line.times = path.times;
  const double qT = path.q.back()[0];
  line.q.assign(path.nodes(), std::vector<double>(1));
  for (std::size_t i = 0; i < line.times.size(); ++i)
    line.q[i][0] = 1.0 + (qT - 1.0) * line.times[i] / 10.0;
  line.v = fd_velocities(line.times, line.q);
  double best = 0.0;
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    const Variation dir = random_variation(line.times, 1, seed);
    best = std::max(best, std::fabs(first_variation(oscillator(), line, 0.0, dir)));
  }
  CHECK(best >= 1e-2);
}

TEST_CASE("multiplier evolution follows the closed form") {
  // dL/dz = -g constant: lambda(t) = exp(g (t - t1)).
  const ContactLagrangian L =
      ContactLagrangian::make(1, "v1^2/2 - g*z", {{"g", 0.5}});
  const DiscretePath path = integrate_herglotz(L, {{0.0}, {1.0}, 0.0}, {1e-3, 0.0, 1.0});
  const MultiplierCurve lam = multiplier_evolution(L, path);
  CHECK(lam.lambda.back() == 1.0);  // terminal normalization, exact
  double worst = 0.0;
  for (std::size_t i = 0; i < lam.times.size(); ++i)
    worst = std::max(worst, std::fabs(lam.lambda[i] - std::exp(0.5 * (lam.times[i] - 1.0))));
  CHECK(worst <= 1e-8);
  CHECK(std::fabs(lam.lambda.front() - std::exp(-0.5)) <= 1e-8);
  for (double l : lam.lambda) CHECK(l > 0.0);
}

TEST_CASE("z-independent Lagrangians have constant multiplier") {
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2 - q1^2/2");
  const DiscretePath path = integrate_herglotz(L, {{1.0}, {0.0}, 0.0}, {1e-2, 0.0, 2.0});
  const MultiplierCurve lam = multiplier_evolution(L, path);
  for (double l : lam.lambda) CHECK(l == 1.0);
}

TEST_CASE("multiplier positivity on the damped oscillator") {
  const DiscretePath path = integrate_herglotz(oscillator(), {{1.0}, {0.0}, 0.0},
                                               {1e-3, 0.0, 10.0});
  const MultiplierCurve lam = multiplier_evolution(oscillator(), path);
  for (double l : lam.lambda) CHECK(l > 0.0);
  // g = 0.1: lambda(0) = exp(-1).
  CHECK(std::fabs(lam.lambda.front() - std::exp(-1.0)) <= 1e-7);
}
