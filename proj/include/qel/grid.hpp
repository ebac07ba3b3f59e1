#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qel {

/// Uniform tensor grid on the meridional half-plane, strictly off the axis.
/// Node (i, j) sits at (r_min + i*dr, z_min + j*dz).
class MeridionalGrid {
 public:
  MeridionalGrid(double r_min, double r_max, double z_min, double z_max, int n_r, int n_z)
      : r_min_(r_min), r_max_(r_max), z_min_(z_min), z_max_(z_max), n_r_(n_r), n_z_(n_z) {
    if (!(std::isfinite(r_min) && std::isfinite(r_max) && std::isfinite(z_min) &&
          std::isfinite(z_max)))
      throw std::invalid_argument("grid extents must be finite");
    if (!(r_min > 0.0))
      throw std::invalid_argument("grid must stay off the axis (r_min > 0), got r_min = " +
                                  std::to_string(r_min));
    if (!(r_max > r_min) || !(z_max > z_min))
      throw std::invalid_argument("grid extents must be increasing");
    if (n_r < 8 || n_z < 8)
      throw std::invalid_argument("grid needs at least 8 nodes per axis");
    dr_ = (r_max - r_min) / (n_r - 1);
    dz_ = (z_max - z_min) / (n_z - 1);
  }

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  int n_r() const { return n_r_; }
  int n_z() const { return n_z_; }
  double dr() const { return dr_; }
  double dz() const { return dz_; }
  std::size_t size() const { return static_cast<std::size_t>(n_r_) * n_z_; }

  double r(int i) const { return r_min_ + i * dr_; }
  double z(int j) const { return z_min_ + j * dz_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_z_ + j; }

  /// Fractional node coordinates of a physical point.
  double r_coord(double r) const { return (r - r_min_) / dr_; }
  double z_coord(double z) const { return (z - z_min_) / dz_; }

  bool contains(double r, double z) const {
    return r >= r_min_ && r <= r_max_ && z >= z_min_ && z <= z_max_;
  }

  bool operator==(const MeridionalGrid&) const = default;

 private:
  double r_min_, r_max_, z_min_, z_max_;
  int n_r_, n_z_;
  double dr_ = 0.0, dz_ = 0.0;
};

}  // namespace qel
