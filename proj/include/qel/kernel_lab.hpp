#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "qel/elliptic.hpp"
#include "qel/error.hpp"
#include "qel/initial_data.hpp"
#include "qel/packet.hpp"

namespace qel {

struct KernelConstants {
  double C_tan = 0.0;
  double c_Q = 0.0;
  int C0_sign = 0;     // sign of sigma/a for the model quadrupole
  double c_hat = 0.0;  // empirical sigma/Q for the model datum
};

namespace detail {
using GK61 = boost::math::quadrature::gauss_kronrod<double, 61>;
inline constexpr double kernel_tol = 1e-12;
inline constexpr unsigned kernel_depth = 20;
}  // namespace detail

inline double tangential_integrand(double tau) {
  const double q = 1.0 + tau * tau;
  return tau * tau / (q * q * q * std::sqrt(q));
}

/// 4 pi int_0^T of the tangential integrand by adaptive Gauss-Kronrod.
inline double tangential_truncated(double T, double tol = detail::kernel_tol) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("truncation point must be finite");
  if (T == 0.0) return 0.0;
  double err = 0.0;
  // split at tau = 1 and decades beyond so each panel sees one scale
  double acc = 0.0, a = 0.0;
  for (double b = 1.0;; b *= 10.0) {
    const double hi = std::min(b, T);
    acc += detail::GK61::integrate(tangential_integrand, a, hi, detail::kernel_depth, tol, &err);
    if (!(err <= 1e3 * tol * std::max(1.0, std::abs(acc))))
      throw ConvergenceError("tangential quadrature did not converge on [" + std::to_string(a) + ", " +
                           std::to_string(hi) + "]");
    a = hi;
    if (hi == T) break;
  }
  return 4.0 * std::numbers::pi * acc;
}

/// 4 pi int_T^inf from the large-tau expansion tau^-5 - (7/2) tau^-7 + ...;
/// the neglected term is O(T^-8).
inline double tangential_tail(double T) {
  if (!(T >= 10.0)) throw std::invalid_argument("tail expansion needs T >= 10");
  const double t2 = 1.0 / (T * T);
  return std::numbers::pi * t2 * t2 * (1.0 - 7.0 / 3.0 * t2);
}

inline constexpr double tangential_cut = 1e3;

/// 4 pi int_0^inf tau^2 (1 + tau^2)^(-7/2) d tau.
inline double tangential_constant(double tol = detail::kernel_tol) {
  return tangential_truncated(tangential_cut, tol) + tangential_tail(tangential_cut);
}

/// |I(2T) - I(T)| for the truncated integral.
inline double tangential_doubling_change(double T) {
  return std::abs(tangential_truncated(2.0 * T) - tangential_truncated(T));
}

/// Contributions of the four quadrants of [-lambda, lambda]^2 to c_Q, in the
/// order (+,+), (-,+), (-,-), (+,-).
inline std::array<double, 4> score_quadrants(double lambda, double tol = detail::kernel_tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  auto f = [](double x, double y) {
    const double q = x * x + y * y;
    return q == 0.0 ? 0.0 : x * x * y * y / (q * q);
  };
  std::array<double, 4> out{};
  const std::array<std::array<double, 2>, 4> sgn{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
  for (int k = 0; k < 4; ++k) {
    const double sx = sgn[k][0], sy = sgn[k][1];
    auto inner = [&](double x) {
      auto g = [&](double y) { return f(x, y); };
      const double ax = std::abs(x);
      return std::abs(detail::GK61::integrate(g, 0.0, sy * ax, 15, tol)) +
             std::abs(detail::GK61::integrate(g, sy * ax, sy * lambda, 15, tol));
    };
    out[k] = std::abs(detail::GK61::integrate(inner, 0.0, sx * lambda, 15, tol)) / (lambda * lambda);
  }
  return out;
}

struct MonteCarloEstimate {
  double mean = 0.0, standard_error = 0.0;
  std::size_t samples = 0;
};

/// Plain Monte Carlo for c_Q with uniform samples on [-1, 1]^2.
inline MonteCarloEstimate score_constant_mc(std::size_t n, std::uint64_t seed = 20240601) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = u(rng), y = u(rng);
    const double q = x * x + y * y;
    const double v = q == 0.0 ? 0.0 : 4.0 * x * x * y * y / (q * q);  // area 4
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / n;
  const double var = (sum2 / n - m * m) * n / (n - 1.0);
  return {m, std::sqrt(var / n), n};
}

struct StrainMatrix {
  // gradient of (U, V) = (u^r, u^z) in (x, y) = (r - r_*, z)
  double Ux = 0.0, Uy = 0.0, Vx = 0.0, Vy = 0.0;
};

struct ParityTable {
  StrainMatrix m;
  double sigma = 0.0;          // -V_y
  double off_diagonal = 0.0;   // max(|U_y|, |V_x|) / |sigma|
  double trace = 0.0;          // (U_x + V_y) / |sigma|
  double Q = 0.0;              // full score of the synthetic datum
};

/// G = a xy chi(x, y; lambda) on a grid symmetric about the packet center.
inline ScalarField model_quadrupole(const GridPtr& grid, double a, const PacketFrame& frame) {
  return ScalarField::from_function(grid, [&](double r, double z) {
    const double x = r - frame.r_star;
    return a * x * z * cutoff(x, z, frame.lambda);
  });
}

inline void require_symmetric_grid(const MeridionalGrid& g, const PacketFrame& frame) {
  const double tol = 1e-12 * std::max(g.r_max() - g.r_min(), g.z_max() - g.z_min());
  if (std::abs(g.z_max() + g.z_min()) > tol || std::abs((g.r_max() - frame.r_star) - (frame.r_star - g.r_min())) > tol)
    throw std::invalid_argument("parity table needs a grid symmetric about the packet center");
  if (g.n_r() % 2 == 0 || g.n_z() % 2 == 0)
    throw std::invalid_argument("parity table needs the packet center on a node");
}

/// Strain matrix at the packet center from the recovered velocity of the
/// synthetic quadrupole a xy chi.
inline ParityTable parity_table(double a, const PacketFrame& frame, const GridPtr& grid,
                                double tol = 1e-11) {
  frame.validate();
  require_symmetric_grid(*grid, frame);
  const ScalarField G = model_quadrupole(grid, a, frame);
  const auto rec = solve_recovery(G, tol);
  ParityTable t;
  const double r = frame.r_star;
  t.m.Ux = sample_derivative(rec.u_r, Axis::r, r, 0.0);
  t.m.Uy = sample_derivative(rec.u_r, Axis::z, r, 0.0);
  t.m.Vx = sample_derivative(rec.u_z, Axis::r, r, 0.0);
  t.m.Vy = sample_derivative(rec.u_z, Axis::z, r, 0.0);
  t.sigma = -t.m.Vy;
  t.off_diagonal = normalized_ratio(std::max(std::abs(t.m.Uy), std::abs(t.m.Vx)), std::abs(t.sigma));
  t.trace = (t.m.Ux + t.m.Vy) / std::abs(t.sigma);
  t.Q = full_score(G, frame);
  return t;
}

/// Square grid of n nodes per side, half-width w, centered on the packet.
inline GridPtr symmetric_grid(const PacketFrame& frame, double w, int n) {
  return make_grid(frame.r_star - w, frame.r_star + w, -w, w, n, n);
}

struct SourcePerturbation {
  std::function<double(double, double)> value;  // R_Gamma(x, y)
  std::function<double(double, double)> dy;     // d_y R_Gamma
};

struct SourceExpansionResult {
  double max_error = 0.0;    // max |Err| / (r_*^-4 Gamma_* b |xy|)
  double bound_scale = 0.0;  // delta_jet + lambda/r_* + b lambda^3 / Gamma_*
  double constant = 0.0;     // max_error / bound_scale
  double arg_x = 0.0, arg_y = 0.0;
};

struct SourceExpansionOptions {
  double delta_jet = 0.0;
  bool freeze_r = false;  // use r_*^-4 in place of r^-4
  int samples = 401;      // per axis on [-lambda, lambda]
};

/// Pointwise check of r^-4 d_y(Gamma^2) = 2 r_*^-4 Gamma_* b x y + Err for
/// Gamma = Gamma_* + b x y^2 / 2 + R_Gamma on the packet, excluding
/// |xy| <= 1e-3 lambda^2.
inline SourceExpansionResult source_expansion_check(double b, double Gamma_star, double lambda,
                                                    double r_star, const SourcePerturbation& R = {},
                                                    const SourceExpansionOptions& opt = {}) {
  if (!(lambda > 0.0) || !(r_star > lambda)) throw std::invalid_argument("need 0 < lambda < r_star");
  if (opt.samples < 3) throw std::invalid_argument("need at least 3 samples per axis");
  SourceExpansionResult res;
  res.bound_scale = opt.delta_jet + lambda / r_star + std::abs(b) * lambda * lambda * lambda / std::abs(Gamma_star);
  const double rs4 = std::pow(r_star, -4);
  const double norm0 = rs4 * std::abs(Gamma_star * b);
  for (int i = 0; i < opt.samples; ++i)
    for (int j = 0; j < opt.samples; ++j) {
      const double x = lambda * (-1.0 + 2.0 * i / (opt.samples - 1));
      const double y = lambda * (-1.0 + 2.0 * j / (opt.samples - 1));
      const double Gm = Gamma_star + 0.5 * b * x * y * y + (R.value ? R.value(x, y) : 0.0);
      const double dGm = b * x * y + (R.dy ? R.dy(x, y) : 0.0);
      const double w = opt.freeze_r ? rs4 : std::pow(r_star + x, -4);
      const double err = w * 2.0 * Gm * dGm - 2.0 * rs4 * Gamma_star * b * x * y;
      if (std::abs(x * y) <= 1e-3 * lambda * lambda) continue;
      if (norm0 == 0.0) {
        if (err != 0.0) res.max_error = std::numeric_limits<double>::infinity();
        continue;
      }
      const double e = std::abs(err) / (norm0 * std::abs(x * y));
      if (e > res.max_error) {
        res.max_error = e;
        res.arg_x = x;
        res.arg_y = y;
      }
    }
  res.constant = normalized_ratio(res.max_error, res.bound_scale);
  return res;
}

/// Report of measured constants for the default model quadrupole.
inline KernelConstants measure_kernel_constants(double a = 1.0, double lambda = 0.05, double r_star = 1.0,
                                                int n = 257, double tol = detail::kernel_tol) {
  KernelConstants k;
  k.C_tan = tangential_constant(tol);
  k.c_Q = score_constant(1.0, tol);
  const PacketFrame frame{r_star, lambda, 0.0};
  const auto t = parity_table(a, frame, symmetric_grid(frame, 0.6, n));
  k.C0_sign = (t.sigma > 0.0) == (a > 0.0) ? 1 : -1;
  k.c_hat = t.sigma / t.Q;
  return k;
}

}  // namespace qel
