#include "herglotz/problem_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "herglotz/control.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/vakonomic.hpp"

namespace herglotz::cli {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// section -> key -> value, with duplicate keys rejected.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini(std::string_view text, const std::string& origin) {
  IniData data;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::size_t comment = raw.find_first_of("#;");
    if (comment != std::string_view::npos) raw = raw.substr(0, comment);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty())
        throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty())
      throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    if (!data[section].emplace(key, value).second)
      throw ProblemFileError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                             "' in [" + section + "]");
  }
  return data;
}

double parse_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* last = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), last, v);
  if (ec != std::errc{} || p != last)
    throw ProblemFileError(field + ": not a number: '" + t + "'", field);
  return v;
}

long parse_int(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  long v = 0;
  const char* last = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), last, v);
  if (ec != std::errc{} || p != last)
    throw ProblemFileError(field + ": not an integer: '" + t + "'", field);
  return v;
}

std::vector<double> parse_vector(const std::string& text, const std::string& field,
                                 std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, field));
  if (out.size() != expected)
    throw ProblemFileError(field + ": expected " + std::to_string(expected) +
                               " comma-separated values, got " + std::to_string(out.size()),
                           field);
  return out;
}

struct IniView {
  const IniData& data;
  const std::string origin;

  const std::string* find(const std::string& section, const std::string& key) const {
    auto s = data.find(section);
    if (s == data.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
  }
  std::string require(const std::string& section, const std::string& key,
                      const std::string& why) const {
    const std::string* v = find(section, key);
    if (!v) throw ProblemFileError(section + "." + key + " required " + why, section + "." + key);
    return *v;
  }
};

std::vector<std::string> collect_indexed(const IniView& ini, const std::string& section,
                                         const std::string& prefix) {
  std::vector<std::string> out;
  for (int i = 1;; ++i) {
    const std::string* v = ini.find(section, prefix + std::to_string(i));
    if (!v) break;
    out.push_back(*v);
  }
  return out;
}

std::vector<std::pair<std::string, double>> collect_params(const IniView& ini) {
  std::vector<std::pair<std::string, double>> params;
  auto s = ini.data.find("params");
  if (s == ini.data.end()) return params;
  for (const auto& [key, value] : s->second)
    params.emplace_back(key, parse_double(value, "params." + key));
  return params;
}

void validate_expressions(const ProblemFile& pf) {
  auto wrap = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const ParseError& e) {
      throw ProblemFileError("expressions." + field + ": " + e.what(), "expressions." + field);
    }
  };
  if (pf.kind == ProblemFile::Kind::Hocp) {
    const ControlProblem probe = [&] {
      ControlProblem cp;
      cp.n = pf.n;
      cp.m = pf.m;
      cp.params = pf.params;
      return cp;
    }();
    const std::vector<std::string> vars = probe.variable_list();
    for (int i = 0; i < pf.n; ++i)
      wrap("X" + std::to_string(i + 1),
           [&] { (void)Expr::parse(pf.X_src[static_cast<std::size_t>(i)], vars); });
    wrap("F", [&] { (void)Expr::parse(pf.F_src, vars); });
    return;
  }
  std::vector<std::string> vars;
  for (int i = 1; i <= pf.n; ++i) vars.push_back("q" + std::to_string(i));
  for (int i = 1; i <= pf.n; ++i) vars.push_back("v" + std::to_string(i));
  vars.push_back("z");
  for (const auto& [name, value] : pf.params) vars.push_back(name);
  wrap("L", [&] { (void)Expr::parse(pf.L_src, vars); });
  for (int a = 0; a < pf.k; ++a)
    wrap("psi" + std::to_string(a + 1),
         [&] { (void)Expr::parse(pf.psi_src[static_cast<std::size_t>(a)], vars); });
}

}  // namespace

std::string_view ProblemFile::kind_name(Kind k) {
  switch (k) {
    case Kind::HerglotzIvp: return "herglotz_ivp";
    case Kind::HerglotzBvp: return "herglotz_bvp";
    case Kind::Vakonomic: return "vakonomic";
    case Kind::Hocp: return "hocp";
  }
  return "?";
}

ProblemFile parse_problem(std::string_view text, const std::string& origin) {
  const IniData data = parse_ini(text, origin);
  const IniView ini{data, origin};

  ProblemFile pf;
  pf.name = origin;
  const std::string kind = ini.require("problem", "kind", "to select a solver");
  if (kind == "herglotz_ivp") pf.kind = ProblemFile::Kind::HerglotzIvp;
  else if (kind == "herglotz_bvp") pf.kind = ProblemFile::Kind::HerglotzBvp;
  else if (kind == "vakonomic") pf.kind = ProblemFile::Kind::Vakonomic;
  else if (kind == "hocp") pf.kind = ProblemFile::Kind::Hocp;
  else
    throw ProblemFileError(
        "problem.kind: expected herglotz_ivp | herglotz_bvp | vakonomic | hocp, got '" + kind +
            "'",
        "problem.kind");

  pf.n = static_cast<int>(parse_int(ini.require("problem", "n", "for every kind"), "problem.n"));
  if (pf.n < 1) throw ProblemFileError("problem.n must be >= 1", "problem.n");
  pf.params = collect_params(ini);

  const bool hocp = pf.kind == ProblemFile::Kind::Hocp;
  if (hocp) {
    pf.m = static_cast<int>(parse_int(ini.require("problem", "m", "for kind=hocp"), "problem.m"));
    if (pf.m < 1) throw ProblemFileError("problem.m must be >= 1 for kind=hocp", "problem.m");
    pf.X_src = collect_indexed(ini, "expressions", "X");
    if (static_cast<int>(pf.X_src.size()) != pf.n)
      throw ProblemFileError("expressions: expected X1..X" + std::to_string(pf.n) +
                                 " vector-field components, found " +
                                 std::to_string(pf.X_src.size()),
                             "expressions.X1");
    pf.F_src = ini.require("expressions", "F", "for kind=hocp");
  } else {
    pf.L_src = ini.require("expressions", "L", "for Lagrangian kinds");
    pf.psi_src = collect_indexed(ini, "expressions", "psi");
    pf.k = static_cast<int>(pf.psi_src.size());
    if (pf.kind != ProblemFile::Kind::Vakonomic && pf.k > 0)
      throw ProblemFileError("expressions.psi1: constraints are only valid for kind=vakonomic",
                             "expressions.psi1");
  }

  // Boundary data.
  const std::size_t nn = static_cast<std::size_t>(pf.n);
  if (hocp) {
    pf.x_a = parse_vector(ini.require("boundary", "x_a", "for kind=hocp"), "boundary.x_a", nn);
    pf.x_b = parse_vector(ini.require("boundary", "x_b", "for kind=hocp"), "boundary.x_b", nn);
  } else {
    pf.q0 = parse_vector(ini.require("boundary", "q0", "for Lagrangian kinds"), "boundary.q0", nn);
    if (pf.kind == ProblemFile::Kind::HerglotzIvp) {
      pf.v0 = parse_vector(ini.require("boundary", "v0", "for kind=herglotz_ivp"), "boundary.v0",
                           nn);
    } else {
      pf.q1 = parse_vector(ini.require("boundary", "q1", "for two-point kinds"), "boundary.q1",
                           nn);
    }
  }
  if (const std::string* v = ini.find("boundary", "z0")) pf.z0 = parse_double(*v, "boundary.z0");
  if (const std::string* v = ini.find("boundary", "t0")) pf.t0 = parse_double(*v, "boundary.t0");
  if (const std::string* v = ini.find("boundary", "t1")) pf.t1 = parse_double(*v, "boundary.t1");
  if (!(pf.t1 > pf.t0)) throw ProblemFileError("boundary: t1 must exceed t0", "boundary.t1");

  // Numeric configuration.
  if (const std::string* v = ini.find("numeric", "dt")) pf.dt = parse_double(*v, "numeric.dt");
  if (!(pf.dt > 0.0)) throw ProblemFileError("numeric.dt must be positive", "numeric.dt");
  if (const std::string* v = ini.find("numeric", "newton_tol"))
    pf.newton_tol = parse_double(*v, "numeric.newton_tol");
  if (const std::string* v = ini.find("numeric", "max_iter"))
    pf.max_iter = static_cast<int>(parse_int(*v, "numeric.max_iter"));
  if (const std::string* v = ini.find("numeric", "seed"))
    pf.seed = static_cast<unsigned>(parse_int(*v, "numeric.seed"));
  if (const std::string* v = ini.find("numeric", "guess_v0"))
    pf.guess_v0 = parse_vector(*v, "numeric.guess_v0", nn);
  if (const std::string* v = ini.find("numeric", "guess_mu0"))
    pf.guess_mu0 = parse_vector(*v, "numeric.guess_mu0", static_cast<std::size_t>(pf.k));
  if (const std::string* v = ini.find("numeric", "guess_mu_a"))
    pf.guess_mu_a = parse_vector(*v, "numeric.guess_mu_a", nn);
  if (const std::string* v = ini.find("numeric", "guess_u0"))
    pf.guess_u0 = parse_vector(*v, "numeric.guess_u0", static_cast<std::size_t>(pf.m));

  if (const std::string* v = ini.find("output", "csv")) pf.csv_path = *v;

  validate_expressions(pf);
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError("cannot open problem file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string stem = path;
  if (const std::size_t slash = stem.find_last_of("/\\"); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (const std::size_t dot = stem.find_last_of('.'); dot != std::string::npos)
    stem = stem.substr(0, dot);
  ProblemFile pf = parse_problem(buffer.str(), path);
  pf.name = stem;
  return pf;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, p);
}

void append_columns(std::string& header, const std::string& prefix, int count) {
  for (int i = 1; i <= count; ++i) header += "," + prefix + std::to_string(i);
}

}  // namespace

std::string to_csv(const ProblemFile& pf, const DiscretePath& path) {
  const bool hocp = pf.kind == ProblemFile::Kind::Hocp;
  std::string out = "t";
  if (hocp) {
    append_columns(out, "x", pf.n);
    append_columns(out, "mu", pf.n);
    append_columns(out, "u", pf.m);
  } else {
    append_columns(out, "q", pf.n);
    append_columns(out, "v", pf.n);
    append_columns(out, "mu", pf.k);
  }
  out += ",z\n";
  for (std::size_t node = 0; node < path.nodes(); ++node) {
    out += format_value(path.times[node]);
    for (double x : path.q[node]) out += "," + format_value(x);
    if (!hocp)
      for (double x : path.v[node]) out += "," + format_value(x);
    if (!path.mu.empty())
      for (double x : path.mu[node]) out += "," + format_value(x);
    if (hocp)
      for (double x : path.u[node]) out += "," + format_value(x);
    out += "," + format_value(path.z[node]);
    out += "\n";
  }
  return out;
}

bool RunReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string RunReport::render() const {
  std::string out;
  out += "problem: " + problem + " (" + kind + ")\n";
  out += "grid: " + std::to_string(grid_nodes) + " nodes, dt = " + format_value(dt) + "\n";
  out += "newton iterations: " + std::to_string(newton_iterations) + "\n";
  if (shooting_residual)
    out += "shooting residual: " + format_value(*shooting_residual) + "\n";
  out += "checks (recomputed from the emitted trajectory):\n";
  for (const CheckResult& c : checks) {
    out += "  " + c.name;
    if (c.name.size() < 28) out += std::string(28 - c.name.size(), ' ');
    out += " " + format_value(c.value) + "  tol " + format_value(c.tol) + "  " +
           (c.pass ? "pass" : "FAIL") + "\n";
  }
  out += std::string("status: ") + (all_pass() ? "ok" : "invariant failure") + "\n";
  out += "wall time: " + format_value(wall_ms) + " ms\n";
  return out;
}

namespace {

// Invariant thresholds enforced on every run; residuals recomputed from the
// emitted trajectory.
constexpr double kZdotTol = 1e-6;
constexpr double kDriftTol = 1e-6;
constexpr double kEndpointTol = 1e-8;
constexpr double kStationarityTol = 1e-8;

// max over interior nodes of |central-difference dz/dt - rate(node)|.
double zdot_residual(const DiscretePath& path, const std::vector<double>& rate) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < path.nodes(); ++i) {
    const double fd = (path.z[i + 1] - path.z[i - 1]) / (path.times[i + 1] - path.times[i - 1]);
    worst = std::max(worst, std::fabs(fd - rate[i]));
  }
  return worst;
}

RunOutcome run_lagrangian(const ProblemFile& pf) {
  RunOutcome out;
  const ContactLagrangian L = ContactLagrangian::make(pf.n, pf.L_src, pf.params);

  if (pf.kind == ProblemFile::Kind::HerglotzIvp) {
    out.path = integrate_herglotz(L, {pf.q0, pf.v0, pf.z0}, {pf.dt, pf.t0, pf.t1});
  } else {
    VakonomicProblem vp;
    vp.L = L;
    const std::vector<std::string> vars = L.variable_list();
    for (const std::string& src : pf.psi_src) vp.constraints.push_back(Expr::parse(src, vars));
    vp.q_start = pf.q0;
    vp.q_end.assign(pf.q1.begin(), pf.q1.end());
    vp.z0 = pf.z0;
    vp.t0 = pf.t0;
    vp.t1 = pf.t1;

    BvpOptions opt;
    opt.v0_guess = pf.guess_v0;
    opt.mu0_guess = pf.guess_mu0;
    opt.dt = pf.dt;
    opt.newton.abs_tol = pf.newton_tol;
    opt.newton.max_iter = pf.max_iter;
    BvpResult r = solve_vakonomic_bvp(vp, opt);
    out.path = std::move(r.path);
    out.report.newton_iterations = r.newton_iterations;
    out.report.shooting_residual = r.shooting_residual;
  }

  // Rate along the emitted path: L - sum_a mu_a psi^a (plain L when k = 0).
  std::vector<std::string> vars = L.variable_list();
  std::vector<Expr> psi;
  for (const std::string& src : pf.psi_src) psi.push_back(Expr::parse(src, vars));
  std::vector<double> packed;
  std::vector<double> rate(out.path.nodes());
  std::vector<double> drift_by_node(out.path.nodes(), 0.0);
  for (std::size_t i = 0; i < out.path.nodes(); ++i) {
    L.pack(out.path.q[i], out.path.v[i], out.path.z[i], packed);
    double r = L.L.eval(packed);
    for (std::size_t a = 0; a < psi.size(); ++a) {
      const double c = psi[a].eval(packed);
      drift_by_node[i] = std::max(drift_by_node[i], std::fabs(c));
      r -= out.path.mu[i][a] * c;
    }
    rate[i] = r;
  }
  const double zres = zdot_residual(out.path, rate);
  out.report.checks.push_back({"max |dz/dt - L|", zres, kZdotTol, zres <= kZdotTol});
  if (pf.kind != ProblemFile::Kind::HerglotzIvp) {
    double endpoint = 0.0;
    for (int i = 0; i < pf.n; ++i)
      endpoint = std::max(endpoint,
                          std::fabs(out.path.q.back()[static_cast<std::size_t>(i)] -
                                    pf.q1[static_cast<std::size_t>(i)]));
    out.report.checks.push_back({"max |q(t1) - q1|", endpoint, kEndpointTol,
                                 endpoint <= kEndpointTol});
  }
  if (pf.k > 0) {
    const double drift = *std::max_element(drift_by_node.begin(), drift_by_node.end());
    out.report.checks.push_back({"max |psi|", drift, kDriftTol, drift <= kDriftTol});
  }
  return out;
}

RunOutcome run_hocp(const ProblemFile& pf) {
  RunOutcome out;
  const ControlProblem cp = ControlProblem::make(pf.n, pf.m, pf.X_src, pf.F_src, pf.x_a, pf.x_b,
                                                 pf.z0, pf.t0, pf.t1, pf.params);
  HocpOptions opt;
  opt.mu_a_guess = pf.guess_mu_a;
  opt.u_guess = pf.guess_u0;
  opt.dt = pf.dt;
  opt.newton.abs_tol = pf.newton_tol;
  opt.newton.max_iter = pf.max_iter;
  HocpResult r = solve_hocp(cp, opt);
  out.path = std::move(r.path);
  out.report.newton_iterations = r.newton_iterations;
  out.report.shooting_residual = r.shooting_residual;

  std::vector<double> packed;
  std::vector<double> rate(out.path.nodes());
  for (std::size_t i = 0; i < out.path.nodes(); ++i) {
    cp.pack(out.path.q[i], out.path.u[i], out.path.z[i], packed);
    rate[i] = cp.F.eval(packed);
  }
  const double zres = zdot_residual(out.path, rate);
  out.report.checks.push_back({"max |dz/dt - F|", zres, kZdotTol, zres <= kZdotTol});

  double endpoint = 0.0;
  for (int i = 0; i < pf.n; ++i)
    endpoint = std::max(endpoint, std::fabs(out.path.q.back()[static_cast<std::size_t>(i)] -
                                            pf.x_b[static_cast<std::size_t>(i)]));
  out.report.checks.push_back({"max |x(t1) - x_b|", endpoint, kEndpointTol,
                               endpoint <= kEndpointTol});

  // The control constraints psi^i = X^i - dx^i/dt, with dx/dt recomputed by
  // central differences on the grid.
  double drift = 0.0;
  for (std::size_t i = 1; i + 1 < out.path.nodes(); ++i) {
    cp.pack(out.path.q[i], out.path.u[i], out.path.z[i], packed);
    for (int j = 0; j < pf.n; ++j) {
      const double fd = (out.path.q[i + 1][static_cast<std::size_t>(j)] -
                         out.path.q[i - 1][static_cast<std::size_t>(j)]) /
                        (out.path.times[i + 1] - out.path.times[i - 1]);
      drift = std::max(drift, std::fabs(cp.X[static_cast<std::size_t>(j)].eval(packed) - fd));
    }
  }
  out.report.checks.push_back({"max |psi| (X - dx/dt)", drift, kDriftTol, drift <= kDriftTol});

  const double stat = stationarity_residual(cp, out.path);
  out.report.checks.push_back({"max stationarity residual", stat, kStationarityTol,
                               stat <= kStationarityTol});
  return out;
}

}  // namespace

RunOutcome run(const ProblemFile& pf) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out = pf.kind == ProblemFile::Kind::Hocp ? run_hocp(pf) : run_lagrangian(pf);
  out.report.problem = pf.name;
  out.report.kind = std::string(ProblemFile::kind_name(pf.kind));
  out.report.grid_nodes = out.path.nodes();
  out.report.dt = pf.dt;
  out.csv = to_csv(pf, out.path);
  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace herglotz::cli
