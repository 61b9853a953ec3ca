#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/errors.hpp"

using namespace herglotz;

namespace {

// Uniform grid path with q(t) given componentwise by a callable.
template <class Fq, class Fv>
DiscretePath make_path(double t0, double t1, std::size_t steps, int dim, Fq&& fq, Fv&& fv) {
  DiscretePath p;
  for (std::size_t i = 0; i <= steps; ++i)
    p.times.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(steps));
  for (double t : p.times) {
    std::vector<double> q(dim), v(dim);
    for (int c = 0; c < dim; ++c) {
      q[static_cast<std::size_t>(c)] = fq(t, c);
      v[static_cast<std::size_t>(c)] = fv(t, c);
    }
    p.q.push_back(q);
    p.v.push_back(v);
  }
  return p;
}

}  // namespace

TEST_CASE("action_z with zero Lagrangian keeps z constant") {
  const ContactLagrangian L = ContactLagrangian::make(1, "0");
  const DiscretePath path = make_path(0.0, 1.0, 50, 1, [](double t, int) { return t * t; },
                                      [](double t, int) { return 2.0 * t; });
  const DiscretePath with_z = action_z(L, path, 5.0);
  for (double z : with_z.z) CHECK(z == 5.0);
  CHECK(contact_action(L, path, 5.0) == 0.0);
}

TEST_CASE("action_z on L = z reproduces the exponential") {
  const ContactLagrangian L = ContactLagrangian::make(1, "z");
  const DiscretePath path = make_path(0.0, 1.0, 1000, 1, [](double, int) { return 0.3; },
                                      [](double, int) { return 0.0; });
  const DiscretePath with_z = action_z(L, path, 1.0);
  CHECK(std::fabs(with_z.z.back() - std::exp(1.0)) <= 1e-8);
}

TEST_CASE("z-independent L: action equals the quadrature of L along the path") {
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2");
  const std::size_t steps = 1000;
  const double dt = 1.0 / static_cast<double>(steps);
  const DiscretePath path = make_path(0.0, 1.0, steps, 1, [](double t, int) { return t; },
                                      [](double, int) { return 1.0; });
  CHECK(std::fabs(contact_action(L, path, 0.0) - 0.5) <= 1e-8);

  // Curved path, trapezoid quadrature anchor within 10*dt^2.
  const DiscretePath curved = make_path(0.0, 1.0, steps, 1,
                                        [](double t, int) { return std::sin(t); },
                                        [](double t, int) { return std::cos(t); });
  double trapezoid = 0.0;
  for (std::size_t i = 0; i + 1 < curved.nodes(); ++i) {
    const double la = curved.v[i][0] * curved.v[i][0] / 2.0;
    const double lb = curved.v[i + 1][0] * curved.v[i + 1][0] / 2.0;
    trapezoid += 0.5 * (la + lb) * (curved.times[i + 1] - curved.times[i]);
  }
  CHECK(std::fabs(contact_action(L, curved, 0.0) - trapezoid) <= 10.0 * dt * dt);
}

TEST_CASE("contact action differs from the z(t1)-anchored form by exactly z0") {
  const ContactLagrangian L =
      ContactLagrangian::make(1, "v1^2/2 - g*q1^2 - g*z", {{"g", 0.37}});
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = coef(rng), b = coef(rng), z0 = 3.0 * coef(rng);
    const DiscretePath path =
        make_path(0.0, 1.0, 200, 1, [&](double t, int) { return a * t + b * t * t; },
                  [&](double t, int) { return a + 2.0 * b * t; });
    const double action = contact_action(L, path, z0);
    const double action0 = action_z(L, path, z0).z.back();  // z(t1)
    CHECK(action == action0 - z0);  // bitwise, by construction
  }
}

TEST_CASE("first_variation of the zero direction is exactly zero") {
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2 - q1^2/2");
  const DiscretePath path = make_path(0.0, 1.0, 100, 1, [](double t, int) { return t; },
                                      [](double, int) { return 1.0; });
  Variation dir;
  dir.dq.assign(path.nodes(), std::vector<double>(1, 0.0));
  CHECK(first_variation(L, path, 0.0, dir) == 0.0);
}

TEST_CASE("first_variation is linear in the direction") {
  const ContactLagrangian L =
      ContactLagrangian::make(1, "v1^2/2 - w^2*q1^2/2 - g*z", {{"w", 1.0}, {"g", 0.1}});
  const DiscretePath path = make_path(0.0, 1.0, 200, 1, [](double t, int) { return t * t; },
                                      [](double t, int) { return 2.0 * t; });
  const Variation dir = random_variation(path.times, 1, 7);
  Variation doubled = dir;
  Variation negated = dir;
  for (std::size_t i = 0; i < dir.dq.size(); ++i) {
    doubled.dq[i][0] *= 2.0;
    negated.dq[i][0] *= -1.0;
  }
  const double fv = first_variation(L, path, 0.0, dir);
  CHECK(std::fabs(first_variation(L, path, 0.0, doubled) - 2.0 * fv) <= 1e-9);
  CHECK(std::fabs(first_variation(L, path, 0.0, negated) + fv) <= 1e-9);
}

TEST_CASE("variations must vanish at the endpoints") {
  const DiscretePath path = make_path(0.0, 1.0, 10, 1, [](double t, int) { return t; },
                                      [](double, int) { return 1.0; });
  Variation bad;
  bad.dq.assign(path.nodes(), std::vector<double>(1, 0.0));
  bad.dq.back()[0] = 1e-3;
  const ContactLagrangian L = ContactLagrangian::make(1, "v1^2/2");
  CHECK_THROWS_AS((void)first_variation(L, path, 0.0, bad), DimensionError);
}

TEST_CASE("random_variation is endpoint-vanishing with unit sup-norm") {
  const DiscretePath path = make_path(0.0, 2.0, 64, 2, [](double t, int c) { return t + c; },
                                      [](double, int) { return 1.0; });
  for (std::uint32_t seed = 1; seed <= 10; ++seed) {
    const Variation dir = random_variation(path.times, 2, seed);
    dir.validate(path.nodes(), 2);
    double norm = 0.0;
    for (const auto& d : dir.dq)
      for (double x : d) norm = std::max(norm, std::fabs(x));
    CHECK(norm == doctest::Approx(1.0));
  }
}

TEST_CASE("fd_velocities reproduces smooth slopes at O(dt^2)") {
  const std::size_t steps = 100;
  const DiscretePath path = make_path(0.0, 1.0, steps, 1,
                                      [](double t, int) { return std::sin(t); },
                                      [](double, int) { return 0.0; });
  const auto v = fd_velocities(path.times, path.q);
  double worst = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i)
    worst = std::max(worst, std::fabs(v[i][0] - std::cos(path.times[i])));
  CHECK(worst <= 2e-4);  // dt^2 = 1e-4 scale, one-sided ends included
}

TEST_CASE("interpolation and validation edge cases") {
  DiscretePath p;
  p.times = {0.0, 1.0};
  p.q = {{0.0}, {2.0}};
  p.v = {{2.0}, {2.0}};
  p.validate();
  std::vector<double> q, v;
  p.sample_linear(0.5, q, v);
  CHECK(q[0] == doctest::Approx(1.0));

  DiscretePath bad = p;
  bad.times = {1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  DiscretePath short_path;
  short_path.times = {0.0};
  short_path.q = {{0.0}};
  CHECK_THROWS_AS(short_path.validate(), DimensionError);
}
