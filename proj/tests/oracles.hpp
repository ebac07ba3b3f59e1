#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the library's numerical kernels.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>

namespace oracle {

/// Direct adaptive quadrature of int_0^pi sin^2 t (A - B cos t)^(-3/2) dt.
inline double ring_integral(double r, double rp, double dz) {
  const double A = r * r + rp * rp + dz * dz, B = 2.0 * r * rp;
  auto f = [&](double t) {
    const double s = std::sin(t);
    return s * s / std::pow(A - B * std::cos(t), 1.5);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numbers::pi,
                                                                      15, 1e-13);
}

/// Compactly supported C^5 bump centered at (rc, 0) with radius R, and its
/// negative 5D-reduced Laplacian -(d_rr + 3/r d_r + d_zz).
struct MmsBump {
  double rc = 1.0, R = 0.3;

  double phi(double r, double z) const {
    const double s = ((r - rc) * (r - rc) + z * z) / (R * R);
    return s < 1.0 ? std::pow(1.0 - s, 6) : 0.0;
  }

  double source(double r, double z) const {
    const double s = ((r - rc) * (r - rc) + z * z) / (R * R);
    if (s >= 1.0) return 0.0;
    const double R2 = R * R;
    const double gx = 2.0 * (r - rc) / R2, gz = 2.0 * z / R2;
    const double p4 = std::pow(1.0 - s, 4), p5 = std::pow(1.0 - s, 5);
    const double phi_r = -6.0 * p5 * gx;
    const double phi_rr = 30.0 * p4 * gx * gx - 12.0 * p5 / R2;
    const double phi_zz = 30.0 * p4 * gz * gz - 12.0 * p5 / R2;
    return -(phi_rr + 3.0 / r * phi_r + phi_zz);
  }
};

/// Closed form of int_{[-1,1]^2} x^2 y^2 / (x^2+y^2)^2 dx dy.
inline double score_constant_closed_form() { return std::numbers::pi / 2.0 - 1.0; }

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

/// int of x^2 y^2/(x^2+y^2)^2 over the four diagonal sectors
/// | |y|/|x| - 1 | < delta of the unit square, in polar form.
inline double diagonal_sector_model(double delta) {
  const double q = std::numbers::pi / 4.0;
  auto f = [&](double t) {
    const double c = std::cos(t), s = std::sin(t);
    const double rho = t <= q ? 1.0 / c : 1.0 / s;
    return c * c * s * s * rho * rho / 2.0;
  };
  return 4.0 * (GK::integrate(f, std::atan(1.0 - delta), q, 15, 1e-14) +
                GK::integrate(f, q, std::atan(1.0 + delta), 15, 1e-14));
}

/// Even C-infinity window: 1 on [-1,1], 0 outside (-2,2), exp(-1/t) glue.
inline double window(double s) {
  const double u = std::abs(s);
  if (u <= 1.0) return 1.0;
  if (u >= 2.0) return 0.0;
  const double t = u - 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return 1.0 - a / (a + b);
}

/// int_{-2}^{2} s^k window(s)^2 ds.
inline double window_moment(int k) {
  auto f = [&](double s) {
    const double w = window(s);
    return std::pow(s, k) * w * w;
  };
  return GK::integrate(f, -2.0, -1.0, 15, 1e-14) + GK::integrate(f, -1.0, 1.0, 15, 1e-14) +
         GK::integrate(f, 1.0, 2.0, 15, 1e-14);
}

/// Nested adaptive quadrature of f over the unit square [-1,1]^2 with the
/// inner integral split at y = 0 and y = +-x and the outer one at x = 0 and
/// the optional extra break.
template <class F>
double unit_square(F&& f, double x_break = 0.0) {
  auto inner = [&](double x) {
    auto g = [&](double y) { return f(x, y); };
    const double a = std::abs(x);
    if (a == 0.0) return GK::integrate(g, -1.0, 1.0, 15, 1e-13);
    return GK::integrate(g, -1.0, -a, 15, 1e-13) + GK::integrate(g, -a, 0.0, 15, 1e-13) +
           GK::integrate(g, 0.0, a, 15, 1e-13) + GK::integrate(g, a, 1.0, 15, 1e-13);
  };
  double total = 0.0;
  double br[4] = {-1.0, 0.0, 1.0, 1.0};
  int nb = 3;
  if (x_break > -1.0 && x_break < 1.0 && x_break != 0.0) {
    if (x_break < 0.0) {
      br[0] = -1.0, br[1] = x_break, br[2] = 0.0, br[3] = 1.0;
    } else {
      br[0] = -1.0, br[1] = 0.0, br[2] = x_break, br[3] = 1.0;
    }
    nb = 4;
  }
  for (int k = 0; k + 1 < nb; ++k) total += GK::integrate(inner, br[k], br[k + 1], 15, 1e-12);
  return total;
}

/// |xy|/(x^2+y^2)^2.
inline double weight_Q(double x, double y) {
  const double q = x * x + y * y;
  return q == 0.0 ? 0.0 : std::abs(x * y) / (q * q);
}

}  // namespace oracle
