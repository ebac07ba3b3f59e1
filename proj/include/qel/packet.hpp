#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qel/field.hpp"
#include "qel/frame.hpp"
#include "qel/quadrature.hpp"

namespace qel {

/// Quadrupole kernel xy/(x^2+y^2)^2 and its absolute weight.
inline double kernel_KQ(double x, double y) {
  const double q = x * x + y * y;
  return x * y / (q * q);
}
inline double weight_WQ(double x, double y) { return std::abs(kernel_KQ(x, y)); }

/// num/den for normalized diagnostics: 0 when there is nothing to normalize,
/// +inf when the normalizer vanishes or has the wrong sign.
inline double normalized_ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return num / den;
}

/// c_Q = lambda^-2 int_{[-lambda,lambda]^2} x^2 y^2/(x^2+y^2)^2 dx dy by nested
/// adaptive Gauss-Kronrod quadrature.
inline double score_constant(double lambda, double tol = 1e-12) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto inner = [&](double x) {
    auto f = [&](double y) {
      const double q = x * x + y * y;
      return q == 0.0 ? 0.0 : x * x * y * y / (q * q);
    };
    // the integrand peaks near y = x
    return GK::integrate(f, 0.0, x, 15, tol) + GK::integrate(f, x, lambda, 15, tol);
  };
  return 4.0 * GK::integrate(inner, 0.0, lambda, 15, tol) / (lambda * lambda);
}

/// Nodes in the open first quadrant of the unit square with weights for
/// dx dy, built in polar coordinates so that the origin is never sampled.
struct QuadrantRule {
  std::vector<double> x, y, w;
};

namespace detail {

inline void append_polar_sector(QuadrantRule& rule, double th_lo, double th_hi, int th_panels,
                                int rho_panels) {
  if (!(th_hi > th_lo)) return;
  const double quarter = std::numbers::pi / 4.0;
  const auto th = gauss_panels<8>(th_lo, th_hi, th_panels);
  for (std::size_t a = 0; a < th.nodes.size(); ++a) {
    const double t = th.nodes[a];
    const double c = std::cos(t), s = std::sin(t);
    const double rho_max = t <= quarter ? 1.0 / c : 1.0 / s;
    const auto rh = gauss_panels<8>(0.0, rho_max, rho_panels);
    for (std::size_t b = 0; b < rh.nodes.size(); ++b) {
      const double p = rh.nodes[b];
      rule.x.push_back(p * c);
      rule.y.push_back(p * s);
      rule.w.push_back(th.weights[a] * rh.weights[b] * p);
    }
  }
}

}  // namespace detail

/// Whole first quadrant of the unit square.
inline QuadrantRule full_quadrant_rule(int panels) {
  QuadrantRule r;
  const double q = std::numbers::pi / 4.0;
  detail::append_polar_sector(r, 0.0, q, panels, panels);
  detail::append_polar_sector(r, q, 2.0 * q, panels, panels);
  return r;
}

/// First-quadrant part of the diagonal sector | y/x - 1 | < delta_c.
inline QuadrantRule diagonal_quadrant_rule(double delta_c, int panels) {
  QuadrantRule r;
  const double q = std::numbers::pi / 4.0;
  detail::append_polar_sector(r, std::atan(1.0 - delta_c), q, std::max(1, panels / 4), panels);
  detail::append_polar_sector(r, q, std::atan(1.0 + delta_c), std::max(1, panels / 4), panels);
  return r;
}

/// Samples of G at the four mirror images of each quadrant node, in the
/// order (x,y), (-x,y), (-x,-y), (x,-y), with physical coordinates and weights.
struct PacketSamples {
  std::vector<double> x, y, w;
  std::vector<std::array<double, 4>> g;
};

/// Number of polar panels used to resolve a packet of half-width lambda.
inline int packet_panels(const MeridionalGrid& grid, double lambda) {
  const double h = std::max(grid.dr(), grid.dz());
  return std::clamp(static_cast<int>(std::ceil(lambda / h)), 4, 64);
}

inline void require_window_in_hull(const MeridionalGrid& g, const PacketFrame& frame,
                                   double half_width) {
  if (frame.r_star - half_width < g.r_min() || frame.r_star + half_width > g.r_max() ||
      -half_width < g.z_min() || half_width > g.z_max())
    throw std::out_of_range("packet window outside grid hull");
}

inline PacketSamples sample_packet(const ScalarField& g, const PacketFrame& frame,
                                   const QuadrantRule& rule) {
  const double lam = frame.lambda;
  PacketSamples s;
  const std::size_t n = rule.x.size();
  s.x.resize(n);
  s.y.resize(n);
  s.w.resize(n);
  s.g.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = lam * rule.x[k], y = lam * rule.y[k];
    s.x[k] = x;
    s.y[k] = y;
    s.w[k] = lam * lam * rule.w[k];
    s.g[k] = {sample_local(g, frame, x, y), sample_local(g, frame, -x, y),
              sample_local(g, frame, -x, -y), sample_local(g, frame, x, -y)};
  }
  return s;
}

namespace detail {

// K_Q-weighted pairing over the four quadrants. The mirror combination
// cancels any constant part of G, so a nonzero G(0,0) is integrated in the
// principal-value sense.
inline double pair_KQ(const PacketSamples& s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const auto& v = s.g[k];
    acc += s.w[k] * kernel_KQ(s.x[k], s.y[k]) * (v[0] - v[1] + v[2] - v[3]);
  }
  return acc;
}

inline constexpr std::array<double, 4> quadrant_sign{1.0, -1.0, 1.0, -1.0};

}  // namespace detail

/// Full quadrupole score on the square packet |x|, |y| < lambda.
inline double full_score(const ScalarField& g, const PacketFrame& frame) {
  frame.validate();
  require_window_in_hull(g.grid(), frame, frame.lambda);
  const auto rule = full_quadrant_rule(packet_panels(g.grid(), frame.lambda));
  return detail::pair_KQ(sample_packet(g, frame, rule));
}

/// Score restricted to the diagonal sectors | |y|/|x| - 1 | < delta_c.
inline double diagonal_subscore(const ScalarField& g, const PacketFrame& frame, double delta_c) {
  if (!(delta_c > 0.0 && delta_c < 0.1))
    throw std::invalid_argument("delta_c must lie in (0, 1/10)");
  frame.validate();
  require_window_in_hull(g.grid(), frame, frame.lambda);
  const auto rule = diagonal_quadrant_rule(delta_c, packet_panels(g.grid(), frame.lambda));
  return detail::pair_KQ(sample_packet(g, frame, rule));
}

/// True when G at the packet center is not negligible against the packet
/// maximum; the score then relies on principal-value cancellation.
inline bool center_value_warning(const ScalarField& g, const PacketFrame& frame,
                                 double rel_tol = 1e-8) {
  const double g0 = std::abs(sample_local(g, frame, 0.0, 0.0));
  const MeridionalGrid& gr = g.grid();
  double m = 0.0;
  for (int i = 0; i < gr.n_r(); ++i) {
    if (std::abs(gr.r(i) - frame.r_star) > frame.lambda) continue;
    for (int j = 0; j < gr.n_z(); ++j)
      if (std::abs(gr.z(j)) <= frame.lambda) m = std::max(m, std::abs(g.at(i, j)));
  }
  return g0 > rel_tol * m;
}

struct ProfileDefects {
  double Dsign = 0.0, Dang = 0.0, Dprof = 0.0, Rprof = 0.0;
  double a_best = 0.0;          // minimizer of the angular objective
  bool rprof_degenerate = false;  // Q <= 0: Rprof is +inf unless both defects vanish
};

namespace detail {

inline double angular_objective(const PacketSamples& s, double a) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double W = weight_WQ(s.x[k], s.y[k]);
    const double xy = s.x[k] * s.y[k];
    double t = 0.0;
    for (int q = 0; q < 4; ++q) t += std::abs(s.g[k][q] - a * quadrant_sign[q] * xy);
    acc += s.w[k] * W * t;
  }
  return acc;
}

// Golden-section minimization of a convex function on [lo, hi].
template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Minimizer over a >= 0 of int W_Q |G - a xy| on the packet, by golden
/// section on [0, 4 a_ref]; the bracket is widened while the minimum sits on
/// its upper edge.
inline double best_angular_amplitude(const PacketSamples& s, double a_ref) {
  // weighted least-squares amplitude as a fallback scale
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double W = weight_WQ(s.x[k], s.y[k]), xy = s.x[k] * s.y[k];
    const auto& v = s.g[k];
    num += s.w[k] * W * xy * (v[0] - v[1] + v[2] - v[3]);
    den += 4.0 * s.w[k] * W * xy * xy;
  }
  const double a_l2 = den > 0.0 ? num / den : 0.0;
  double hi = 4.0 * std::max({a_ref, a_l2, 0.0});
  if (hi == 0.0) {
    // no positive reference amplitude: bracket by the largest pointwise ratio
    for (std::size_t k = 0; k < s.x.size(); ++k)
      for (int q = 0; q < 4; ++q)
        hi = std::max(hi, detail::quadrant_sign[q] * s.g[k][q] / (s.x[k] * s.y[k]));
    if (hi == 0.0) return 0.0;
  }
  auto f = [&](double a) { return detail::angular_objective(s, a); };
  for (int expand = 0; expand < 60; ++expand) {
    const double a = detail::golden_section(f, 0.0, hi, 1e-12 * hi);
    if (a < hi * (1.0 - 1e-9)) return a;
    hi *= 2.0;
  }
  throw std::runtime_error("angular defect minimizer did not bracket");
}

/// Sign and angular-profile defects with W_Q weight. The sign defect uses
/// [-sgn(xy) G]_+ so that it carries the units of G, like the angular defect.
inline ProfileDefects profile_defects(const ScalarField& g, const PacketFrame& frame, double Q,
                                      double a_ref) {
  frame.validate();
  require_window_in_hull(g.grid(), frame, frame.lambda);
  const auto rule = full_quadrant_rule(packet_panels(g.grid(), frame.lambda));
  const auto s = sample_packet(g, frame, rule);
  ProfileDefects d;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    const double W = weight_WQ(s.x[k], s.y[k]);
    for (int q = 0; q < 4; ++q)
      d.Dsign += s.w[k] * W * std::max(0.0, -detail::quadrant_sign[q] * s.g[k][q]);
  }
  d.a_best = best_angular_amplitude(s, a_ref);
  d.Dang = detail::angular_objective(s, d.a_best);
  d.Dprof = d.Dsign + d.Dang;
  d.Rprof = normalized_ratio(d.Dprof, Q);
  d.rprof_degenerate = !(Q > 0.0);
  return d;
}

}  // namespace qel
