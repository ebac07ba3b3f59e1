#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "qel/field.hpp"

namespace qel {

/// Local packet coordinates: x = r - r_star, y = z.
struct LocalPoint {
  double x, y;
};

/// Tracked packet center, scale and time. Valid only while lambda/r_star < 1/2.
struct PacketFrame {
  double r_star = 1.0;
  double lambda = 0.05;
  double t = 0.0;

  bool is_valid() const {
    return std::isfinite(r_star) && std::isfinite(lambda) && r_star > 0.0 && lambda > 0.0 &&
           lambda / r_star < 0.5;
  }
  void validate() const {
    if (!is_valid())
      throw std::invalid_argument("invalid packet frame: r_star = " + std::to_string(r_star) +
                                  ", lambda = " + std::to_string(lambda));
  }
  double rho() const { return lambda / r_star; }
};

inline LocalPoint to_local(const PacketFrame& frame, double r, double z) {
  return {r - frame.r_star, z};
}

inline std::pair<double, double> from_local(const PacketFrame& frame, LocalPoint p) {
  return {p.x + frame.r_star, p.y};
}

/// Sample a field at a point given in packet coordinates.
inline double sample_local(const ScalarField& f, const PacketFrame& frame, double x, double y) {
  return f.sample(frame.r_star + x, y);
}

/// Meridional and swirl velocity components on a common grid.
struct VelocityField {
  ScalarField u_r, u_z, u_theta;
};

}  // namespace qel
