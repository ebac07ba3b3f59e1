#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qel/grid.hpp"

namespace qel {

using GridPtr = std::shared_ptr<const MeridionalGrid>;

inline GridPtr make_grid(double r_min, double r_max, double z_min, double z_max, int n_r, int n_z) {
  return std::make_shared<const MeridionalGrid>(r_min, r_max, z_min, z_max, n_r, n_z);
}

/// Axis-aligned window in (r, z).
struct Box {
  double r_lo, r_hi, z_lo, z_hi;
  bool contains(double r, double z) const {
    return r >= r_lo && r <= r_hi && z >= z_lo && z <= z_hi;
  }
};

namespace detail {

// Cubic Lagrange weights for nodes 0..3 at local coordinate t.
inline std::array<double, 4> lagrange4(double t) {
  const double t0 = t, t1 = t - 1.0, t2 = t - 2.0, t3 = t - 3.0;
  return {-t1 * t2 * t3 / 6.0, t0 * t2 * t3 / 2.0, -t0 * t1 * t3 / 2.0, t0 * t1 * t2 / 6.0};
}

// First node of the 4-point stencil containing fractional coordinate s.
inline int stencil_start(double s, int n) {
  const int i = static_cast<int>(std::floor(s)) - 1;
  return std::clamp(i, 0, n - 4);
}

}  // namespace detail

/// Grid-sampled scalar. The grid is shared by reference; values are row-major
/// with r as the slow index.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}
  ScalarField(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size())
      throw std::invalid_argument("field value count does not match grid");
  }

  template <class F>
  static ScalarField from_function(GridPtr grid, F&& f) {
    ScalarField out(grid);
    for (int i = 0; i < grid->n_r(); ++i)
      for (int j = 0; j < grid->n_z(); ++j) out.at(i, j) = f(grid->r(i), grid->z(j));
    return out;
  }

  const MeridionalGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double at(int i, int j) const { return values_[grid_->index(i, j)]; }
  double& at(int i, int j) { return values_[grid_->index(i, j)]; }

  const std::optional<Box>& support() const { return support_; }
  void set_support(std::optional<Box> box) { support_ = box; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Tensor-cubic Lagrange interpolant inside the hull; 0 outside the hull or
  /// outside a declared support window.
  double sample(double r, double z) const {
    const MeridionalGrid& g = *grid_;
    if (!g.contains(r, z)) return 0.0;
    if (support_ && !support_->contains(r, z)) return 0.0;
    // snap coordinates that are nodes up to roundoff, so nodes reproduce exactly
    auto snap = [](double c) { return std::abs(c - std::round(c)) < 1e-10 ? std::round(c) : c; };
    const double sr = snap(g.r_coord(r)), sz = snap(g.z_coord(z));
    const int i0 = detail::stencil_start(sr, g.n_r());
    const int j0 = detail::stencil_start(sz, g.n_z());
    const auto wr = detail::lagrange4(sr - i0);
    const auto wz = detail::lagrange4(sz - j0);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double* row = values_.data() + g.index(i0 + a, j0);
      acc += wr[a] * (wz[0] * row[0] + wz[1] * row[1] + wz[2] * row[2] + wz[3] * row[3]);
    }
    return acc;
  }

  ScalarField& operator+=(const ScalarField& o) {
    check_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  void check_same_grid(const ScalarField& o) const {
    if (grid_ != o.grid_ && !(*grid_ == *o.grid_))
      throw std::invalid_argument("fields live on different grids");
  }

  GridPtr grid_;
  std::vector<double> values_;
  std::optional<Box> support_;
};

enum class Axis { r, z };

namespace detail {

// Fourth-order first derivative along a strided line of n samples. Written in
// differences so a constant line differentiates to exactly zero.
inline void diff4_line(const double* in, double* out, int n, std::ptrdiff_t stride, double h) {
  const double c = 1.0 / (12.0 * h);
  auto f = [&](int k) { return in[k * stride]; };
  auto d = [&](int k, int base) { return f(k) - f(base); };
  out[0] = c * (48.0 * d(1, 0) - 36.0 * d(2, 0) + 16.0 * d(3, 0) - 3.0 * d(4, 0));
  out[stride] = c * (-3.0 * d(0, 1) + 18.0 * d(2, 1) - 6.0 * d(3, 1) + d(4, 1));
  for (int k = 2; k < n - 2; ++k)
    out[k * stride] = c * (8.0 * (f(k + 1) - f(k - 1)) - (f(k + 2) - f(k - 2)));
  const int m = n - 1;
  out[(m - 1) * stride] = -c * (-3.0 * d(m, m - 1) + 18.0 * d(m - 2, m - 1) - 6.0 * d(m - 3, m - 1) +
                                d(m - 4, m - 1));
  out[m * stride] = -c * (48.0 * d(m - 1, m) - 36.0 * d(m - 2, m) + 16.0 * d(m - 3, m) - 3.0 * d(m - 4, m));
}

}  // namespace detail

/// Fourth-order derivative along one axis (centered inside, one-sided at edges).
inline ScalarField derivative(const ScalarField& f, Axis axis) {
  const MeridionalGrid& g = f.grid();
  if (g.n_r() < 5 || g.n_z() < 5) throw std::invalid_argument("grid too small for 4th-order stencil");
  ScalarField out(f.grid_ptr());
  const double* in = f.values().data();
  double* o = out.values().data();
  if (axis == Axis::z) {
    for (int i = 0; i < g.n_r(); ++i)
      detail::diff4_line(in + g.index(i, 0), o + g.index(i, 0), g.n_z(), 1, g.dz());
  } else {
    for (int j = 0; j < g.n_z(); ++j)
      detail::diff4_line(in + j, o + j, g.n_r(), g.n_z(), g.dr());
  }
  return out;
}

/// (d/dr, d/dz) of a field.
inline std::pair<ScalarField, ScalarField> gradient(const ScalarField& f) {
  return {derivative(f, Axis::r), derivative(f, Axis::z)};
}

namespace detail {

// Fourth-order derivative at a single node, same stencils as diff4_line.
inline double node_derivative(const ScalarField& f, Axis axis, int i, int j) {
  const MeridionalGrid& g = f.grid();
  const int n = axis == Axis::r ? g.n_r() : g.n_z();
  const int k = axis == Axis::r ? i : j;
  const double h = axis == Axis::r ? g.dr() : g.dz();
  auto v = [&](int m) { return axis == Axis::r ? f.at(m, j) : f.at(i, m); };
  const double c = 1.0 / (12.0 * h);
  if (k >= 2 && k <= n - 3) return c * (v(k - 2) - 8.0 * v(k - 1) + 8.0 * v(k + 1) - v(k + 2));
  if (k == 0) return c * (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4));
  if (k == 1) return c * (-3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4));
  const int m = n - 1;
  if (k == m - 1) return -c * (-3.0 * v(m) - 10.0 * v(m - 1) + 18.0 * v(m - 2) - 6.0 * v(m - 3) + v(m - 4));
  return -c * (-25.0 * v(m) + 48.0 * v(m - 1) - 36.0 * v(m - 2) + 16.0 * v(m - 3) - 3.0 * v(m - 4));
}

}  // namespace detail

/// Interpolated fourth-order derivative at an off-grid point; only the 4x4
/// stencil around the point is differentiated. Throws outside the hull.
inline double sample_derivative(const ScalarField& f, Axis axis, double r, double z) {
  const MeridionalGrid& g = f.grid();
  if (!g.contains(r, z)) throw std::out_of_range("derivative sample outside grid hull");
  const double sr = g.r_coord(r), sz = g.z_coord(z);
  const int i0 = detail::stencil_start(sr, g.n_r());
  const int j0 = detail::stencil_start(sz, g.n_z());
  const auto wr = detail::lagrange4(sr - i0);
  const auto wz = detail::lagrange4(sz - j0);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) acc += wr[a] * wz[b] * detail::node_derivative(f, axis, i0 + a, j0 + b);
  return acc;
}

}  // namespace qel
