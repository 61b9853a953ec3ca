#include "herglotz/numkit.hpp"

#include <cmath>
#include <limits>

namespace herglotz {

std::vector<double> ode_grid(const OdeConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("OdeConfig.dt must be positive");
  if (!(cfg.t1 > cfg.t0)) throw std::invalid_argument("OdeConfig requires t1 > t0");
  const double span = cfg.t1 - cfg.t0;
  const double steps = span / cfg.dt;
  const double rounded = std::round(steps);
  std::vector<double> grid;
  if (rounded >= 1.0 && std::fabs(rounded * cfg.dt - span) <= 1e-9 * span) {
    const std::size_t n = static_cast<std::size_t>(rounded);
    grid.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      grid.push_back(cfg.t0 + span * (static_cast<double>(i) / static_cast<double>(n)));
    grid.back() = cfg.t1;
  } else {
    const std::size_t n = static_cast<std::size_t>(std::ceil(steps));
    grid.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) grid.push_back(cfg.t0 + static_cast<double>(i) * cfg.dt);
    grid.push_back(cfg.t1);
    if (grid.size() >= 2 && grid[grid.size() - 2] >= cfg.t1) grid.erase(grid.end() - 2);
  }
  return grid;
}

LuFactor::LuFactor(std::vector<double> a, std::size_t n) : lu_(std::move(a)), perm_(n), n_(n) {
  if (lu_.size() != n * n) throw DimensionError("LuFactor: matrix size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_sum += std::fabs(lu_[i * n + j]);
    norm_a_ = std::max(norm_a_, row_sum);
  }
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double pmag = std::fabs(lu_[perm_[col] * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double mag = std::fabs(lu_[perm_[r] * n + col]);
      if (mag > pmag) {
        pmag = mag;
        pivot = r;
      }
    }
    if (pmag < std::numeric_limits<double>::min()) {
      singular_ = true;
      return;
    }
    std::swap(perm_[col], perm_[pivot]);
    const double diag = lu_[perm_[col] * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double& factor = lu_[perm_[r] * n + col];
      factor /= diag;
      for (std::size_t j = col + 1; j < n; ++j)
        lu_[perm_[r] * n + j] -= factor * lu_[perm_[col] * n + j];
    }
  }
}

std::vector<double> LuFactor::solve(std::span<const double> b) const {
  if (singular_) throw SingularMatrixError("LuFactor::solve on singular matrix");
  if (b.size() != n_) throw DimensionError("LuFactor::solve: rhs size mismatch");
  std::vector<double> y(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_[perm_[i] * n_ + j] * y[j];
    y[i] = s;
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_[perm_[ii] * n_ + j] * y[j];
    y[ii] = s / lu_[perm_[ii] * n_ + ii];
  }
  return y;
}

double LuFactor::cond_inf() const {
  if (singular_) return std::numeric_limits<double>::infinity();
  // ||A^-1||_inf from explicit inverse columns.
  std::vector<double> row_sums(n_, 0.0);
  std::vector<double> e(n_, 0.0);
  for (std::size_t col = 0; col < n_; ++col) {
    e[col] = 1.0;
    const std::vector<double> inv_col = solve(e);
    e[col] = 0.0;
    for (std::size_t i = 0; i < n_; ++i) row_sums[i] += std::fabs(inv_col[i]);
  }
  double norm_inv = 0.0;
  for (double s : row_sums) norm_inv = std::max(norm_inv, s);
  return norm_a_ * norm_inv;
}

std::vector<double> lu_solve(std::vector<double> a, std::size_t n, std::span<const double> b) {
  LuFactor lu(std::move(a), n);
  if (lu.singular()) throw SingularMatrixError("lu_solve: singular matrix");
  return lu.solve(b);
}

}  // namespace herglotz
