#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/vakonomic.hpp"

using namespace herglotz;

namespace {

// Classical vakonomic particle: flat metric, one bilinear constraint. The
// constraint integrates to q2 = q2(0) + (q1^2 - q1(0)^2)/2, which fixes the
// reachable endpoints.
VakonomicProblem classical_particle() {
  return VakonomicProblem::make(2, "(v1^2 + v2^2)/2", {"v2 - q1*v1"}, {0.0, 0.0}, {1.0, 0.5},
                                0.0, 0.0, 1.0);
}

}  // namespace

TEST_CASE("extended_lagrangian adjoins multipliers") {
  const VakonomicProblem p = classical_particle();
  const ContactLagrangian ext = extended_lagrangian(p);
  CHECK(ext.n == 3);
  CHECK(ext.coord_names == std::vector<std::string>{"q1", "q2", "mu1"});
  CHECK(ext.vel_names == std::vector<std::string>{"v1", "v2", "vmu1"});
  // L - mu1 * (v2 - q1 v1) at a concrete point.
  const double val = ext.value(std::vector<double>{0.3, 0.0, 0.4},
                               std::vector<double>{0.7, 0.2, 9.9}, 0.0);
  const double want = (0.7 * 0.7 + 0.2 * 0.2) / 2.0 - 0.4 * (0.2 - 0.3 * 0.7);
  CHECK(std::fabs(val - want) <= 1e-14);
  CHECK_FALSE(ext.L.depends_on("vmu1"));

  // dL/dmu_a = -psi^a, checked by finite differences.
  std::vector<double> packed;
  ext.pack(std::vector<double>{0.3, 0.0, 0.4}, std::vector<double>{0.7, 0.2, 0.0}, 0.0, packed);
  ExprFrame frame(ext.L, packed);
  const double dmu = frame.first(ext.coord_index(2));
  CHECK(std::fabs(dmu - (-(0.2 - 0.3 * 0.7))) <= 1e-9);
}

TEST_CASE("extended_lagrangian with k=0 is the Lagrangian itself") {
  const VakonomicProblem p =
      VakonomicProblem::make(1, "v1^2/2 - q1^2/2", {}, {0.0}, {1.0}, 0.0, 0.0, 1.0);
  const ContactLagrangian ext = extended_lagrangian(p);
  CHECK(ext.n == 1);
  CHECK(ext.value(std::vector<double>{0.3}, std::vector<double>{0.9}, 0.0) ==
        p.L.value(std::vector<double>{0.3}, std::vector<double>{0.9}, 0.0));
}

TEST_CASE("extended_lagrangian rejects colliding names") {
  VakonomicProblem p = classical_particle();
  p.L = ContactLagrangian::make(2, "(v1^2 + v2^2)/2 + mu1", {{"mu1", 1.0}});
  CHECK_THROWS_AS((void)extended_lagrangian(p), Error);
}

TEST_CASE("vakonomic_rhs matches the hand-expanded classical equations") {
  VakonomicProblem p = classical_particle();
  p.q_start = {0.3, 0.1};
  p.q_end = {std::optional<double>(1.0), std::optional<double>(0.555)};
  const double q1 = 0.3, v1 = 0.7, mu = 0.4;
  const ExtendedState s{{q1, 0.1}, {v1, q1 * v1}, 0.0, {mu}};
  const VakonomicRates r = vakonomic_rhs(p, s);

  const double dv2 = v1 * v1 / (1.0 + q1 * q1);
  CHECK(std::fabs(r.dv[0] - (-q1 * dv2)) <= 1e-6);
  CHECK(std::fabs(r.dv[1] - dv2) <= 1e-6);
  CHECK(std::fabs(r.dmu[0] - dv2) <= 1e-6);
  CHECK(std::fabs(r.dz - ((v1 * v1 + q1 * v1 * q1 * v1) / 2.0)) <= 1e-12);
  CHECK(r.dq[0] == v1);

  // d/dt psi = 0 is a row of the linear solve: recompute it explicitly.
  const ContactLagrangian& L = p.L;
  std::vector<double> packed;
  L.pack(s.q, s.v, s.z, packed);
  ExprFrame cf(p.constraints[0], packed);
  double dpsi = cf.first(L.z_index()) * r.dz;
  for (int i = 0; i < 2; ++i) {
    dpsi += cf.first(L.coord_index(i)) * r.dq[i];
    dpsi += cf.first(L.vel_index(i)) * r.dv[i];
  }
  CHECK(std::fabs(dpsi) <= 1e-10);
}

TEST_CASE("k=0 vakonomic integration coincides with integrate_herglotz bitwise") {
  const char* src = "v1^2/2 - 0.1*z - q1^2/2";
  const VakonomicProblem p = VakonomicProblem::make(1, src, {}, {1.0}, {0.5}, 0.0, 0.0, 1.0);
  const ContactLagrangian L = ContactLagrangian::make(1, src);
  const DiscretePath hz = integrate_herglotz(L, {{1.0}, {0.3}, 0.0}, {1e-3, 0.0, 1.0});
  const DiscretePath vk = integrate_vakonomic(p, {{1.0}, {0.3}, 0.0, {}}, {1e-3, 0.0, 1.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < hz.nodes(); ++i) {
    worst = std::max(worst, std::fabs(hz.q[i][0] - vk.q[i][0]));
    worst = std::max(worst, std::fabs(hz.v[i][0] - vk.v[i][0]));
    worst = std::max(worst, std::fabs(hz.z[i] - vk.z[i]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("integrate_vakonomic enforces initial consistency and preserves psi") {
  const VakonomicProblem p = classical_particle();
  CHECK_THROWS_AS(
      (void)integrate_vakonomic(p, {{0.0, 0.0}, {1.0, 0.5}, 0.0, {0.0}}, {1e-3, 0.0, 1.0}),
      Error);

  const DiscretePath path =
      integrate_vakonomic(p, {{0.0, 0.0}, {1.0, 0.0}, 0.0, {0.0}}, {1e-3, 0.0, 1.0});
  CHECK(constraint_drift(p, path) <= 1e-6);
  // q2 = q1^2/2 along the flow (the constraint is integrable).
  double worst = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i)
    worst = std::max(worst, std::fabs(path.q[i][1] - path.q[i][0] * path.q[i][0] / 2.0));
  CHECK(worst <= 1e-8);
}

TEST_CASE("constraint drift grows no faster than 1e-5 per unit time") {
  VakonomicProblem p = classical_particle();
  p.t1 = 5.0;
  p.q_end = {std::optional<double>(1.0), std::optional<double>(0.5)};  // unused by the IVP
  const DiscretePath path =
      integrate_vakonomic(p, {{0.0, 0.0}, {0.4, 0.0}, 0.0, {0.1}}, {1e-3, 0.0, 5.0});
  CHECK(constraint_drift(p, path) <= 1e-5 * 5.0);
}

TEST_CASE("unconstrained BVP: free particle hits the endpoints on a line") {
  const VakonomicProblem p =
      VakonomicProblem::make(1, "v1^2/2", {}, {0.0}, {1.0}, 0.0, 0.0, 1.0);
  const BvpResult r = solve_vakonomic_bvp(p);
  CHECK(std::fabs(r.v0[0] - 1.0) <= 1e-8);
  CHECK(std::fabs(r.path.q.back()[0] - 1.0) <= 1e-8);
  for (std::size_t i = 0; i < r.path.nodes(); ++i)
    CHECK(std::fabs(r.path.q[i][0] - r.path.times[i]) <= 1e-8);
}

TEST_CASE("unconstrained damped-oscillator BVP matches the analytic slope") {
  const double w = 1.0, g = 0.1, T = 1.0, q0 = 1.0, qT = 0.5;
  const VakonomicProblem p = VakonomicProblem::make(
      1, "v1^2/2 - w^2*q1^2/2 - g*z", {}, {q0}, {qT}, 0.0, 0.0, T, {{"w", w}, {"g", g}});
  const BvpResult r = solve_vakonomic_bvp(p);

  // q(t) = e^{-g t/2} (A cos wb t + B sin wb t) through both endpoints.
  const double wb = std::sqrt(w * w - g * g / 4.0);
  const double A = q0;
  const double B = (qT * std::exp(g * T / 2.0) - A * std::cos(wb * T)) / std::sin(wb * T);
  const double v0_analytic = -g / 2.0 * A + wb * B;
  CHECK(std::fabs(r.v0[0] - v0_analytic) <= 1e-6);
  CHECK(std::fabs(r.path.q.back()[0] - qT) <= 1e-8);
}

TEST_CASE("classical vakonomic BVP hits endpoints with negligible drift") {
  const VakonomicProblem p = classical_particle();
  BvpOptions opt;
  opt.v0_guess = {1.0, 0.0};
  const BvpResult r = solve_vakonomic_bvp(p, opt);
  CHECK(std::fabs(r.path.q.back()[0] - 1.0) <= 1e-8);
  CHECK(std::fabs(r.path.q.back()[1] - 0.5) <= 1e-8);
  CHECK(constraint_drift(p, r.path) <= 1e-6);
  CHECK(r.shooting_residual <= 1e-10);
  // Arclength parametrization: s(q) = (q sqrt(1+q^2) + asinh(q))/2 is linear
  // in t for the reduced geodesic.
  const double s_total = (std::sqrt(2.0) + std::asinh(1.0)) / 2.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < r.path.nodes(); i += 100) {
    const double q = r.path.q[i][0];
    const double s = (q * std::sqrt(1.0 + q * q) + std::asinh(q)) / 2.0;
    worst = std::max(worst, std::fabs(s - s_total * r.path.times[i]));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("multiplier-ratio consistency ties the extended multipliers back") {
  // z-dependent variant so lambda_0 is non-trivial.
  const double g = 0.3;
  const VakonomicProblem p =
      VakonomicProblem::make(2, "(v1^2 + v2^2)/2 - g*z", {"v2 - q1*v1"}, {0.0, 0.0},
                             {1.0, 0.5}, 0.0, 0.0, 1.0, {{"g", g}});
  BvpOptions opt;
  opt.v0_guess = {1.0, 0.0};
  const BvpResult r = solve_vakonomic_bvp(p, opt);

  // lambda_0 from the extended Lagrangian along the (q, mu) path.
  const ContactLagrangian ext = extended_lagrangian(p);
  DiscretePath ext_path;
  ext_path.times = r.path.times;
  for (std::size_t i = 0; i < r.path.nodes(); ++i) {
    std::vector<double> q = r.path.q[i];
    q.push_back(r.path.mu[i][0]);
    std::vector<double> v = r.path.v[i];
    v.push_back(0.0);  // the extended Lagrangian never sees vmu
    ext_path.q.push_back(std::move(q));
    ext_path.v.push_back(std::move(v));
  }
  ext_path.z = r.path.z;
  const MultiplierCurve lam0 = multiplier_evolution(ext, ext_path);
  CHECK(lam0.lambda.back() == 1.0);
  // dL_mu/dz = -g is constant here, so lambda_0 = e^{g (t-1)}.
  double worst = 0.0;
  for (std::size_t i = 0; i < lam0.times.size(); ++i)
    worst = std::max(worst, std::fabs(lam0.lambda[i] - std::exp(g * (lam0.times[i] - 1.0))));
  CHECK(worst <= 1e-6);

  // With lambda_1 = mu lambda_0, the combined multiplier rows
  //   d/dt (lambda_a dphi^a/dqdot_i) - lambda_a dphi^a/dq_i = 0
  // hold along the trajectory (phi^0 = zdot - L, phi^1 = psi).
  const ContactLagrangian& L = p.L;
  const std::size_t m = r.path.nodes();
  std::vector<std::vector<double>> P(m, std::vector<double>(2));
  std::vector<std::vector<double>> R(m, std::vector<double>(2));
  std::vector<double> packed;
  for (std::size_t i = 0; i < m; ++i) {
    L.pack(r.path.q[i], r.path.v[i], r.path.z[i], packed);
    ExprFrame lf(L.L, packed);
    ExprFrame cf(p.constraints[0], packed);
    const double l0 = lam0.lambda[i];
    const double l1 = r.path.mu[i][0] * l0;
    for (int c = 0; c < 2; ++c) {
      P[i][static_cast<std::size_t>(c)] =
          -l0 * lf.first(L.vel_index(c)) + l1 * cf.first(L.vel_index(c));
      R[i][static_cast<std::size_t>(c)] =
          -l0 * lf.first(L.coord_index(c)) + l1 * cf.first(L.coord_index(c));
    }
  }
  double residual = 0.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double h2 = r.path.times[i + 1] - r.path.times[i - 1];
    for (std::size_t c = 0; c < 2; ++c)
      residual = std::max(residual, std::fabs((P[i + 1][c] - P[i - 1][c]) / h2 - R[i][c]));
  }
  CHECK(residual <= 1e-5);
}

TEST_CASE("degenerate constraints are rejected") {
  // psi independent of every velocity: the bordered matrix loses rank.
  const VakonomicProblem p =
      VakonomicProblem::make(2, "(v1^2 + v2^2)/2", {"q1 - 1"}, {0.0, 0.0}, {1.0, 0.5}, 0.0,
                             0.0, 1.0);
  const ExtendedState s{{0.5, 0.0}, {1.0, 0.0}, 0.0, {0.0}};
  CHECK_THROWS_AS((void)vakonomic_rhs(p, s), SingularMatrixError);
}

TEST_CASE("multiplier blow-up is reported as an abnormal extremal") {
  const VakonomicProblem p = classical_particle();
  const ExtendedState s{{0.0, 0.0}, {1.0, 0.0}, 0.0, {2e8}};
  CHECK_THROWS_WITH_AS(
      (void)integrate_vakonomic(p, s, {1e-3, 0.0, 1.0}),
      doctest::Contains("abnormal"), Error);
}

TEST_CASE("boundary validation catches misplaced endpoint data") {
  VakonomicProblem p = classical_particle();
  p.q_end[0].reset();  // dynamic coordinate must be pinned
  CHECK_THROWS_AS((void)solve_vakonomic_bvp(p), DimensionError);

  const VakonomicProblem q = classical_particle();
  const ExtendedState bad{{0.0, 0.0}, {1.0, 0.0}, 0.0, {0.0, 0.0}};  // k=1, two multipliers
  CHECK_THROWS_AS((void)vakonomic_rhs(q, bad), DimensionError);
}

TEST_CASE("infeasible endpoints fail with the best residual attached") {
  // The integrable constraint pins q2(1) = 0.5 for these q1 endpoints; a
  // target of 0.9 is unreachable and the shooting must report its best try.
  VakonomicProblem p = classical_particle();
  p.q_end[1] = 0.9;
  BvpOptions opt;
  opt.v0_guess = {1.0, 0.0};
  opt.newton.max_iter = 12;
  try {
    (void)solve_vakonomic_bvp(p, opt);
    FAIL("expected NewtonError");
  } catch (const NewtonError& e) {
    CHECK(e.best_iterate.size() == 3);
    CHECK(e.best_residual > 0.1);   // stuck near the feasibility gap of 0.4
    CHECK(e.best_residual < 0.45);
  }
}

TEST_CASE("multiple guesses report distinct solutions once") {
  const VakonomicProblem p =
      VakonomicProblem::make(1, "v1^2/2", {}, {0.0}, {1.0}, 0.0, 0.0, 1.0);
  BvpOptions a;
  a.v0_guess = {0.5};
  BvpOptions b;
  b.v0_guess = {2.0};
  const std::vector<BvpResult> found = solve_vakonomic_bvp_multi(p, {a, b});
  CHECK(found.size() == 1);  // same root from both starts
  CHECK(std::fabs(found[0].v0[0] - 1.0) <= 1e-8);
}
