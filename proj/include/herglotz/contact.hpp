#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "herglotz/expr.hpp"
#include "herglotz/numkit.hpp"

namespace herglotz {

/// Lagrangian L(q, v, z) over an n-dimensional configuration space. The
/// expression may also reference named constant parameters. Packed argument
/// layout: [coords(n), velocities(n), z, params...].
struct ContactLagrangian {
  int n = 0;
  Expr L;
  std::vector<std::string> coord_names;  // size n
  std::vector<std::string> vel_names;    // size n
  std::vector<std::pair<std::string, double>> params;

  /// Standard names q1..qn / v1..vn.
  static ContactLagrangian make(int n, std::string_view source,
                                std::vector<std::pair<std::string, double>> params = {});

  /// Custom coordinate/velocity names (extended Lagrangians).
  static ContactLagrangian make_named(std::vector<std::string> coords,
                                      std::vector<std::string> velocities, const Expr& expr,
                                      std::vector<std::pair<std::string, double>> params);

  std::size_t packed_size() const { return 2 * static_cast<std::size_t>(n) + 1 + params.size(); }
  std::size_t coord_index(int i) const { return static_cast<std::size_t>(i); }
  std::size_t vel_index(int i) const { return static_cast<std::size_t>(n + i); }
  std::size_t z_index() const { return static_cast<std::size_t>(2 * n); }

  /// Full variable list in packed order.
  std::vector<std::string> variable_list() const;

  void pack(std::span<const double> q, std::span<const double> v, double z,
            std::vector<double>& out) const;

  double value(std::span<const double> q, std::span<const double> v, double z) const;
};

/// Derivative access for one expression at a packed evaluation point. Holds
/// the point as mutable scratch; not shareable across threads.
class ExprFrame {
 public:
  ExprFrame(const Expr& e, std::vector<double> packed)
      : expr_(&e), x_(std::move(packed)) {}

  std::span<double> packed() { return x_; }
  std::span<const double> packed() const { return x_; }
  void set(std::size_t idx, double value) { x_[idx] = value; }

  double value() const { return expr_->eval(x_); }
  double first(std::size_t i, double h = FdConfig{}.h) {
    return fd_partial_inplace([this](std::span<const double> p) { return expr_->eval(p); },
                              std::span<double>(x_), i, h);
  }
  double second(std::size_t i, std::size_t j, SecondFdConfig cfg = {}) {
    return fd_second_partial_inplace(
        [this](std::span<const double> p) { return expr_->eval(p); }, std::span<double>(x_), i, j,
        cfg);
  }

 private:
  const Expr* expr_;
  std::vector<double> x_;
};

/// Sampled trajectory on a strictly increasing time grid. z, mu and u are
/// optional blocks (empty when absent). q/v entries are per-node vectors.
struct DiscretePath {
  std::vector<double> times;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> v;
  std::vector<double> z;                // optional
  std::vector<std::vector<double>> mu;  // optional
  std::vector<std::vector<double>> u;   // optional (control problems)

  std::size_t nodes() const { return times.size(); }
  int dim() const { return q.empty() ? 0 : static_cast<int>(q.front().size()); }

  /// Checks grid monotonicity and block lengths; throws DimensionError.
  void validate() const;

  /// Linear interpolation of (q, v) at time t (clamped to the grid range).
  void sample_linear(double t, std::vector<double>& q_out, std::vector<double>& v_out) const;
};

/// Direction of path perturbation; vanishes at both endpoints.
struct Variation {
  std::vector<std::vector<double>> dq;  // one vector per node

  void validate(std::size_t nodes, int dim) const;
};

/// Velocities from the position samples: centered differences at interior
/// nodes, second-order one-sided stencils at the endpoints.
std::vector<std::vector<double>> fd_velocities(std::span<const double> times,
                                               const std::vector<std::vector<double>>& q);

/// Action as a function of time: solves dz/dt = L(q(t), v(t), z), z(t0) = z0
/// along the path (one RK4 step per grid interval, (q, v) interpolated
/// linearly within each interval). Returns a copy of the path with z filled.
DiscretePath action_z(const ContactLagrangian& L, const DiscretePath& path, double z0);

/// z(t_N) - z(t_0) of the action operator along the path.
double contact_action(const ContactLagrangian& L, const DiscretePath& path, double z0);

/// Central-difference directional derivative of the contact action:
/// (A(q + eps dq) - A(q - eps dq)) / (2 eps), velocities recomputed from the
/// perturbed positions by finite differences. dir is expected normalized to
/// unit sup-norm for the default eps.
double first_variation(const ContactLagrangian& L, const DiscretePath& path, double z0,
                       const Variation& dir, double eps = 1e-5);

/// Random endpoint-vanishing variation: a random combination of the first
/// few Fourier sine modes over the grid, normalized to unit sup-norm. Smooth
/// directions probe the variational principle at the path's resolution;
/// node-wise white noise only measures the quadrature's high-frequency
/// response and certifies nothing.
Variation random_variation(std::span<const double> times, int dim, std::uint32_t seed,
                           int modes = 5);

}  // namespace herglotz
