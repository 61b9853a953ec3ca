#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "herglotz/contact.hpp"
#include "herglotz/control.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"
#include "herglotz/vakonomic.hpp"

namespace py = pybind11;
using namespace herglotz;

namespace {

std::vector<std::pair<std::string, double>> params_from_dict(const py::dict& d) {
  std::vector<std::pair<std::string, double>> out;
  for (auto item : d) out.emplace_back(item.first.cast<std::string>(), item.second.cast<double>());
  return out;
}

Variation variation_from(const std::vector<std::vector<double>>& dq) {
  Variation dir;
  dir.dq = dq;
  return dir;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contact (Herglotz) Lagrangian mechanics: expression language, "
            "Herglotz/vakonomic integrators and indirect optimal control";

  // Exception translation: base first so the derived registrations below
  // take precedence (translators run newest-first).
  auto base = py::register_exception<Error>(m, "HerglotzError");
  py::register_exception<ParseError>(m, "ExprParseError", base);
  py::register_exception<EvalError>(m, "ExprEvalError", base);
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", base);
  py::register_exception<NewtonError>(m, "NewtonFailure", base);
  py::register_exception<OdeError>(m, "OdeFailure", base);
  py::register_exception<DimensionError>(m, "DimensionMismatch", base);
  py::register_exception<ProblemFileError>(m, "ProblemFileError", base);

  py::class_<Expr>(m, "Expr")
      .def_static(
          "parse",
          [](const std::string& source, const std::vector<std::string>& vars) {
            return Expr::parse(source, vars);
          },
          py::arg("source"), py::arg("variables"),
          "Parse an expression over the given variable list.")
      .def(
          "eval",
          [](const Expr& e, const py::dict& env) {
            Env bindings;
            for (auto item : env)
              bindings[item.first.cast<std::string>()] = item.second.cast<double>();
            return e.eval(bindings);
          },
          py::arg("env"), "Evaluate with name -> value bindings.")
      .def(
          "eval_packed",
          [](const Expr& e, const std::vector<double>& values) { return e.eval(values); },
          py::arg("values"), "Evaluate with values aligned to the variable order.")
      .def("pretty", &Expr::pretty)
      .def_property_readonly("variables", &Expr::variables)
      .def("__repr__", [](const Expr& e) { return "Expr(\"" + e.pretty() + "\")"; });

  py::class_<ContactLagrangian>(m, "ContactLagrangian")
      .def_readonly("n", &ContactLagrangian::n)
      .def_property_readonly("coord_names",
                             [](const ContactLagrangian& L) { return L.coord_names; })
      .def_property_readonly("vel_names", [](const ContactLagrangian& L) { return L.vel_names; })
      .def(
          "value",
          [](const ContactLagrangian& L, const std::vector<double>& q,
             const std::vector<double>& v, double z) { return L.value(q, v, z); },
          py::arg("q"), py::arg("v"), py::arg("z"))
      .def("__repr__", [](const ContactLagrangian& L) {
        return "ContactLagrangian(n=" + std::to_string(L.n) + ", L=\"" + L.L.pretty() + "\")";
      });

  m.def(
      "contact_lagrangian",
      [](int n, const std::string& source, const py::dict& params) {
        return ContactLagrangian::make(n, source, params_from_dict(params));
      },
      py::arg("n"), py::arg("source"), py::arg("params") = py::dict(),
      "L(q1..qn, v1..vn, z) with optional named constants.");

  py::class_<DiscretePath>(m, "DiscretePath")
      .def_readonly("times", &DiscretePath::times)
      .def_readonly("q", &DiscretePath::q)
      .def_readonly("v", &DiscretePath::v)
      .def_readonly("z", &DiscretePath::z)
      .def_readonly("mu", &DiscretePath::mu)
      .def_readonly("u", &DiscretePath::u)
      .def_property_readonly("nodes", &DiscretePath::nodes)
      .def("__len__", &DiscretePath::nodes);

  py::class_<MultiplierCurve>(m, "MultiplierCurve")
      .def_readonly("times", &MultiplierCurve::times)
      .def_readonly("lambdas", &MultiplierCurve::lambda);

  m.def(
      "integrate_herglotz",
      [](const ContactLagrangian& L, const std::vector<double>& q0,
         const std::vector<double>& v0, double z0, double t0, double t1, double dt) {
        return integrate_herglotz(L, {q0, v0, z0}, {dt, t0, t1});
      },
      py::arg("L"), py::arg("q0"), py::arg("v0"), py::arg("z0") = 0.0, py::arg("t0") = 0.0,
      py::arg("t1") = 1.0, py::arg("dt") = 1e-3);

  m.def(
      "herglotz_rhs",
      [](const ContactLagrangian& L, const std::vector<double>& q, const std::vector<double>& v,
         double z) {
        const ContactRates r = herglotz_rhs(L, {q, v, z});
        return py::make_tuple(r.dq, r.dv, r.dz);
      },
      py::arg("L"), py::arg("q"), py::arg("v"), py::arg("z") = 0.0,
      "Returns (dq, dv, dz) of the contact Euler-Lagrange equations.");

  m.def("multiplier_evolution", &multiplier_evolution, py::arg("L"), py::arg("path"));

  m.def(
      "action_z",
      [](const ContactLagrangian& L, const DiscretePath& path, double z0) {
        return action_z(L, path, z0);
      },
      py::arg("L"), py::arg("path"), py::arg("z0") = 0.0);
  m.def(
      "contact_action",
      [](const ContactLagrangian& L, const DiscretePath& path, double z0) {
        return contact_action(L, path, z0);
      },
      py::arg("L"), py::arg("path"), py::arg("z0") = 0.0);
  m.def(
      "first_variation",
      [](const ContactLagrangian& L, const DiscretePath& path, double z0,
         const std::vector<std::vector<double>>& dq, double eps) {
        return first_variation(L, path, z0, variation_from(dq), eps);
      },
      py::arg("L"), py::arg("path"), py::arg("z0"), py::arg("direction"), py::arg("eps") = 1e-5);
  m.def(
      "random_variation",
      [](const std::vector<double>& times, int dim, std::uint32_t seed, int modes) {
        return random_variation(times, dim, seed, modes).dq;
      },
      py::arg("times"), py::arg("dim"), py::arg("seed"), py::arg("modes") = 5,
      "Smooth endpoint-vanishing direction, unit sup-norm.");

  py::class_<VakonomicProblem>(m, "VakonomicProblem")
      .def_property_readonly("k", &VakonomicProblem::k)
      .def_readonly("L", &VakonomicProblem::L)
      .def_readonly("q_start", &VakonomicProblem::q_start)
      .def_readonly("q_end", &VakonomicProblem::q_end)
      .def_readonly("z0", &VakonomicProblem::z0)
      .def_readonly("t0", &VakonomicProblem::t0)
      .def_readonly("t1", &VakonomicProblem::t1);

  m.def(
      "vakonomic_problem",
      [](int n, const std::string& L_src, const std::vector<std::string>& psi,
         const std::vector<double>& q_start, const std::vector<double>& q_end, double z0,
         double t0, double t1, const py::dict& params) {
        return VakonomicProblem::make(n, L_src, psi, q_start, q_end, z0, t0, t1,
                                      params_from_dict(params));
      },
      py::arg("n"), py::arg("L"), py::arg("constraints"), py::arg("q_start"), py::arg("q_end"),
      py::arg("z0") = 0.0, py::arg("t0") = 0.0, py::arg("t1") = 1.0,
      py::arg("params") = py::dict());

  m.def("extended_lagrangian", &extended_lagrangian, py::arg("problem"),
        "L - sum_a mu_a psi^a over the (q, mu) configuration.");

  m.def(
      "vakonomic_rhs",
      [](const VakonomicProblem& p, const std::vector<double>& q, const std::vector<double>& v,
         double z, const std::vector<double>& mu) {
        const VakonomicRates r = vakonomic_rhs(p, {q, v, z, mu});
        return py::make_tuple(r.dq, r.dv, r.dz, r.dmu);
      },
      py::arg("problem"), py::arg("q"), py::arg("v"), py::arg("z"), py::arg("mu"));

  m.def(
      "integrate_vakonomic",
      [](const VakonomicProblem& p, const std::vector<double>& q0, const std::vector<double>& v0,
         double z0, const std::vector<double>& mu0, double dt) {
        return integrate_vakonomic(p, {q0, v0, z0, mu0}, {dt, p.t0, p.t1});
      },
      py::arg("problem"), py::arg("q0"), py::arg("v0"), py::arg("z0"), py::arg("mu0"),
      py::arg("dt") = 1e-3);

  m.def("constraint_drift", &constraint_drift, py::arg("problem"), py::arg("path"),
        "max |psi| recomputed over the path nodes.");

  py::class_<BvpResult>(m, "BvpResult")
      .def_readonly("path", &BvpResult::path)
      .def_readonly("newton_iterations", &BvpResult::newton_iterations)
      .def_readonly("shooting_residual", &BvpResult::shooting_residual)
      .def_readonly("v0", &BvpResult::v0)
      .def_readonly("mu0", &BvpResult::mu0);

  m.def(
      "solve_vakonomic_bvp",
      [](const VakonomicProblem& p, const std::optional<std::vector<double>>& v0_guess,
         const std::optional<std::vector<double>>& mu0_guess, double dt, double tol,
         int max_iter) {
        BvpOptions opt;
        if (v0_guess) opt.v0_guess = *v0_guess;
        if (mu0_guess) opt.mu0_guess = *mu0_guess;
        opt.dt = dt;
        opt.newton.abs_tol = tol;
        opt.newton.max_iter = max_iter;
        return solve_vakonomic_bvp(p, opt);
      },
      py::arg("problem"), py::arg("v0_guess") = py::none(), py::arg("mu0_guess") = py::none(),
      py::arg("dt") = 1e-3, py::arg("tol") = 1e-10, py::arg("max_iter") = 50);

  py::class_<ControlProblem>(m, "ControlProblem")
      .def_readonly("n", &ControlProblem::n)
      .def_readonly("m", &ControlProblem::m)
      .def_readonly("x_start", &ControlProblem::x_start)
      .def_readonly("x_target", &ControlProblem::x_target)
      .def_readonly("z0", &ControlProblem::z0)
      .def_readonly("t0", &ControlProblem::t0)
      .def_readonly("t1", &ControlProblem::t1);

  m.def(
      "control_problem",
      [](int n, int m_, const std::vector<std::string>& X, const std::string& F,
         const std::vector<double>& x_a, const std::vector<double>& x_b, double z0, double t0,
         double t1, const py::dict& params) {
        return ControlProblem::make(n, m_, X, F, x_a, x_b, z0, t0, t1, params_from_dict(params));
      },
      py::arg("n"), py::arg("m"), py::arg("X"), py::arg("F"), py::arg("x_a"), py::arg("x_b"),
      py::arg("z0") = 0.0, py::arg("t0") = 0.0, py::arg("t1") = 1.0,
      py::arg("params") = py::dict(),
      "Maximize z(t1) with dx/dt = X(x, u, z), dz/dt = F(x, u, z).");

  m.def("hocp_as_vakonomic", &hocp_as_vakonomic, py::arg("problem"),
        "The same problem as a constrained variational principle on (x, u).");

  m.def(
      "stationarity_solve",
      [](const ControlProblem& cp, const std::vector<double>& x, const std::vector<double>& mu,
         double z, const std::optional<std::vector<double>>& u_guess) {
        std::vector<double> guess =
            u_guess ? *u_guess : std::vector<double>(static_cast<std::size_t>(cp.m), 0.0);
        return stationarity_solve(cp, x, mu, z, guess);
      },
      py::arg("problem"), py::arg("x"), py::arg("mu"), py::arg("z") = 0.0,
      py::arg("u_guess") = py::none());

  m.def(
      "control_rhs",
      [](const ControlProblem& cp, const std::vector<double>& x, const std::vector<double>& mu,
         double z, const std::optional<std::vector<double>>& u_warm) {
        ControlState s;
        s.x = x;
        s.mu = mu;
        s.z = z;
        if (u_warm) s.u = *u_warm;
        const ControlRates r = control_rhs(cp, s);
        return py::make_tuple(r.dx, r.dmu, r.dz, r.u);
      },
      py::arg("problem"), py::arg("x"), py::arg("mu"), py::arg("z") = 0.0,
      py::arg("u_warm") = py::none(), "Returns (dx, dmu, dz, u).");

  py::class_<HocpResult>(m, "HocpResult")
      .def_readonly("path", &HocpResult::path)
      .def_readonly("newton_iterations", &HocpResult::newton_iterations)
      .def_readonly("shooting_residual", &HocpResult::shooting_residual);

  m.def(
      "solve_hocp",
      [](const ControlProblem& cp, const std::optional<std::vector<double>>& mu_a_guess,
         double dt, double tol, int max_iter) {
        HocpOptions opt;
        if (mu_a_guess) opt.mu_a_guess = *mu_a_guess;
        opt.dt = dt;
        opt.newton.abs_tol = tol;
        opt.newton.max_iter = max_iter;
        return solve_hocp(cp, opt);
      },
      py::arg("problem"), py::arg("mu_a_guess") = py::none(), py::arg("dt") = 1e-3,
      py::arg("tol") = 1e-10, py::arg("max_iter") = 50);

  m.def("stationarity_residual", &stationarity_residual, py::arg("problem"), py::arg("path"),
        "max stationarity residual recomputed over the path nodes.");
}
