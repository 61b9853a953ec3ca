#include "herglotz/contact.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "herglotz/errors.hpp"

namespace herglotz {

std::vector<std::string> ContactLagrangian::variable_list() const {
  std::vector<std::string> vars;
  vars.reserve(packed_size());
  vars.insert(vars.end(), coord_names.begin(), coord_names.end());
  vars.insert(vars.end(), vel_names.begin(), vel_names.end());
  vars.push_back("z");
  for (const auto& [name, value] : params) vars.push_back(name);
  return vars;
}

ContactLagrangian ContactLagrangian::make(int n, std::string_view source,
                                          std::vector<std::pair<std::string, double>> params) {
  if (n < 1) throw DimensionError("ContactLagrangian: n must be >= 1");
  ContactLagrangian lag;
  lag.n = n;
  for (int i = 1; i <= n; ++i) {
    lag.coord_names.push_back("q" + std::to_string(i));
    lag.vel_names.push_back("v" + std::to_string(i));
  }
  lag.params = std::move(params);
  lag.L = Expr::parse(source, lag.variable_list());
  return lag;
}

ContactLagrangian ContactLagrangian::make_named(std::vector<std::string> coords,
                                                std::vector<std::string> velocities,
                                                const Expr& expr,
                                                std::vector<std::pair<std::string, double>> params) {
  if (coords.empty() || coords.size() != velocities.size())
    throw DimensionError("ContactLagrangian: coordinate/velocity name lists must match");
  ContactLagrangian lag;
  lag.n = static_cast<int>(coords.size());
  lag.coord_names = std::move(coords);
  lag.vel_names = std::move(velocities);
  lag.params = std::move(params);
  lag.L = expr.rebind(lag.variable_list());
  return lag;
}

void ContactLagrangian::pack(std::span<const double> q, std::span<const double> v, double z,
                             std::vector<double>& out) const {
  if (q.size() != static_cast<std::size_t>(n) || v.size() != static_cast<std::size_t>(n))
    throw DimensionError("ContactLagrangian: state dimension mismatch");
  out.resize(packed_size());
  std::copy(q.begin(), q.end(), out.begin());
  std::copy(v.begin(), v.end(), out.begin() + n);
  out[z_index()] = z;
  for (std::size_t p = 0; p < params.size(); ++p) out[z_index() + 1 + p] = params[p].second;
}

double ContactLagrangian::value(std::span<const double> q, std::span<const double> v,
                                double z) const {
  std::vector<double> packed;
  pack(q, v, z, packed);
  return L.eval(packed);
}

void DiscretePath::validate() const {
  const std::size_t m = times.size();
  if (m < 2) throw DimensionError("DiscretePath: need at least two grid nodes");
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (!(times[i] < times[i + 1]))
      throw DimensionError("DiscretePath: time grid must be strictly increasing");
  if (q.size() != m) throw DimensionError("DiscretePath: q length mismatch");
  if (!v.empty() && v.size() != m) throw DimensionError("DiscretePath: v length mismatch");
  const std::size_t dim = q.front().size();
  for (std::size_t i = 0; i < m; ++i) {
    if (q[i].size() != dim) throw DimensionError("DiscretePath: inconsistent state dimensions");
    if (!v.empty() && v[i].size() != dim)
      throw DimensionError("DiscretePath: inconsistent velocity dimensions");
  }
  if (!z.empty() && z.size() != m) throw DimensionError("DiscretePath: z length mismatch");
  if (!mu.empty() && mu.size() != m) throw DimensionError("DiscretePath: mu length mismatch");
  if (!u.empty() && u.size() != m) throw DimensionError("DiscretePath: u length mismatch");
}

void DiscretePath::sample_linear(double t, std::vector<double>& q_out,
                                 std::vector<double>& v_out) const {
  const std::size_t m = times.size();
  std::size_t k = 0;
  if (t >= times.back()) {
    k = m - 2;
  } else if (t > times.front()) {
    k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) -
                                 times.begin()) -
        1;
  }
  const double h = times[k + 1] - times[k];
  const double w = std::clamp((t - times[k]) / h, 0.0, 1.0);
  const std::size_t dim = q[k].size();
  q_out.resize(dim);
  v_out.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    q_out[i] = (1.0 - w) * q[k][i] + w * q[k + 1][i];
    v_out[i] = (1.0 - w) * v[k][i] + w * v[k + 1][i];
  }
}

void Variation::validate(std::size_t nodes, int dim) const {
  if (dq.size() != nodes) throw DimensionError("Variation: node count mismatch");
  for (const auto& d : dq)
    if (d.size() != static_cast<std::size_t>(dim))
      throw DimensionError("Variation: dimension mismatch");
  for (double x : dq.front())
    if (x != 0.0) throw DimensionError("Variation must vanish at the initial endpoint");
  for (double x : dq.back())
    if (x != 0.0) throw DimensionError("Variation must vanish at the final endpoint");
}

std::vector<std::vector<double>> fd_velocities(std::span<const double> times,
                                               const std::vector<std::vector<double>>& q) {
  const std::size_t m = times.size();
  const std::size_t dim = q.front().size();
  std::vector<std::vector<double>> v(m, std::vector<double>(dim));
  if (m == 2) {
    const double h = times[1] - times[0];
    for (std::size_t i = 0; i < dim; ++i) v[0][i] = v[1][i] = (q[1][i] - q[0][i]) / h;
    return v;
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const double h2 = times[k + 1] - times[k - 1];
    for (std::size_t i = 0; i < dim; ++i) v[k][i] = (q[k + 1][i] - q[k - 1][i]) / h2;
  }
  // Three-point one-sided stencils keep the endpoints at O(dt^2) too
  // (assumes locally uniform spacing, which the integrators produce).
  const double h0 = times[1] - times[0];
  const double hN = times[m - 1] - times[m - 2];
  for (std::size_t i = 0; i < dim; ++i) {
    v[0][i] = (-3.0 * q[0][i] + 4.0 * q[1][i] - q[2][i]) / (2.0 * h0);
    v[m - 1][i] = (3.0 * q[m - 1][i] - 4.0 * q[m - 2][i] + q[m - 3][i]) / (2.0 * hN);
  }
  return v;
}

DiscretePath action_z(const ContactLagrangian& L, const DiscretePath& path, double z0) {
  path.validate();
  if (path.v.empty()) throw DimensionError("action_z: path carries no velocities");
  if (path.dim() != L.n) throw DimensionError("action_z: path/Lagrangian dimension mismatch");

  DiscretePath out = path;
  const std::size_t m = path.nodes();
  out.z.assign(m, z0);

  std::vector<double> packed(L.packed_size());
  std::vector<double> qs, vs;
  auto rhs = [&](double t, double zz) {
    path.sample_linear(t, qs, vs);
    L.pack(qs, vs, zz, packed);
    try {
      return L.L.eval(packed);
    } catch (const Error& e) {
      throw OdeError("action_z: expression failed at t=" + std::to_string(t) + ": " + e.what(),
                     t);
    }
  };

  double zacc = z0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double t = path.times[k];
    const double h = path.times[k + 1] - path.times[k];
    const double k1 = rhs(t, zacc);
    const double k2 = rhs(t + 0.5 * h, zacc + 0.5 * h * k1);
    const double k3 = rhs(t + 0.5 * h, zacc + 0.5 * h * k2);
    const double k4 = rhs(t + h, zacc + h * k3);
    zacc += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.z[k + 1] = zacc;
  }
  return out;
}

double contact_action(const ContactLagrangian& L, const DiscretePath& path, double z0) {
  const DiscretePath with_z = action_z(L, path, z0);
  return with_z.z.back() - with_z.z.front();
}

double first_variation(const ContactLagrangian& L, const DiscretePath& path, double z0,
                       const Variation& dir, double eps) {
  path.validate();
  dir.validate(path.nodes(), path.dim());
  if (!(eps > 0.0)) throw std::invalid_argument("first_variation: eps must be positive");

  auto perturbed = [&](double s) {
    DiscretePath p = path;
    for (std::size_t k = 0; k < p.nodes(); ++k)
      for (std::size_t i = 0; i < p.q[k].size(); ++i) p.q[k][i] += s * dir.dq[k][i];
    p.v = fd_velocities(p.times, p.q);
    return p;
  };
  const double a_plus = contact_action(L, perturbed(eps), z0);
  const double a_minus = contact_action(L, perturbed(-eps), z0);
  return (a_plus - a_minus) / (2.0 * eps);
}

Variation random_variation(std::span<const double> times, int dim, std::uint32_t seed,
                           int modes) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  const std::size_t m = times.size();
  const double t0 = times.front();
  const double span = times.back() - t0;

  Variation dir;
  dir.dq.assign(m, std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  double norm = 0.0;
  for (int c = 0; c < dim; ++c) {
    std::vector<double> coeff(static_cast<std::size_t>(modes));
    for (double& a : coeff) a = amp(rng);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const double s = (times[i] - t0) / span;
      double value = 0.0;
      for (int mo = 0; mo < modes; ++mo)
        value += coeff[static_cast<std::size_t>(mo)] *
                 std::sin(static_cast<double>(mo + 1) * 3.14159265358979323846 * s);
      dir.dq[i][static_cast<std::size_t>(c)] = value;
      norm = std::max(norm, std::fabs(value));
    }
  }
  if (norm > 0.0)
    for (std::size_t i = 1; i + 1 < m; ++i)
      for (double& x : dir.dq[i]) x /= norm;
  return dir;
}

}  // namespace herglotz
