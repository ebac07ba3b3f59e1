#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "qel/elliptic.hpp"
#include "qel/error.hpp"
#include "qel/field.hpp"
#include "qel/frame.hpp"
#include "qel/packet.hpp"
#include "qel/quadrature.hpp"
#include "qel/smooth_bump.hpp"

namespace qel {

struct ProjectedAmplitudes {
  double a_lam = 0.0, b_lam = 0.0, Gamma_star = 0.0, Q_lam = 0.0, C_lam = 0.0;
};

/// Tensor Gauss rule on [-2, 2] in units of lambda, breakpoints at the edges
/// of the window plateau.
inline QuadratureRule window_rule(const MeridionalGrid& grid, double lambda) {
  const int panels = std::max(2, packet_panels(grid, lambda));
  return gauss_breakpoints<8>({-2.0, -1.0, 1.0, 2.0}, panels);
}

/// Weighted projections with w = psi(x/lambda)^2 psi(y/lambda)^2.
inline ProjectedAmplitudes projected_amplitudes(const ScalarField& g, const ScalarField& gamma,
                                                const PacketFrame& frame, double c_Q) {
  frame.validate();
  const double lam = frame.lambda;
  require_window_in_hull(g.grid(), frame, 2.0 * lam);
  const auto q = window_rule(g.grid(), lam);
  double gxy = 0, xyxy = 0, gam = 0, one = 0;
  std::vector<double> wts, xs, ys, gv;
  for (std::size_t a = 0; a < q.nodes.size(); ++a) {
    const double x = lam * q.nodes[a], px = window_profile(q.nodes[a]);
    for (std::size_t b = 0; b < q.nodes.size(); ++b) {
      const double y = lam * q.nodes[b], py = window_profile(q.nodes[b]);
      const double w = q.weights[a] * q.weights[b] * lam * lam * px * px * py * py;
      if (w == 0.0) continue;
      const double G = sample_local(g, frame, x, y);
      const double Gm = sample_local(gamma, frame, x, y);
      gxy += w * G * x * y;
      xyxy += w * x * x * y * y;
      gam += w * Gm;
      one += w;
      wts.push_back(w);
      xs.push_back(x);
      ys.push_back(y);
      gv.push_back(Gm);
    }
  }
  ProjectedAmplitudes p;
  p.a_lam = gxy / xyxy;
  p.Gamma_star = gam / one;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < wts.size(); ++k) {
    const double m = xs[k] * ys[k] * ys[k];
    num += wts[k] * (gv[k] - p.Gamma_star) * m;
    den += wts[k] * m * m;
  }
  p.b_lam = 2.0 * num / den;
  p.Q_lam = c_Q * p.a_lam * lam * lam;
  p.C_lam = lam * lam * p.b_lam;
  return p;
}

/// Pointwise jet coefficient b = d_r d_z^2 Gamma at (r_star, 0).
inline double jet_coefficient(const ScalarField& gamma, const PacketFrame& frame) {
  const auto gz = derivative(gamma, Axis::z);
  const auto gzz = derivative(gz, Axis::z);
  return sample_derivative(gzz, Axis::r, frame.r_star, 0.0);
}

/// Points of a uniform (2m+1)^2 lattice on the packet |x|, |y| <= lambda.
inline int packet_lattice_half(const MeridionalGrid& grid, double lambda) {
  return std::clamp(static_cast<int>(std::ceil(lambda / std::min(grid.dr(), grid.dz()))), 8, 64);
}

/// max over the packet of (|grad R^r| + |grad R^z|) / |sigma| with
/// R^r = U - sigma x, R^z = V + sigma y. Returns +inf when sigma = 0 and the
/// remainder does not vanish.
inline double strain_error(const ScalarField& u_r, const ScalarField& u_z, const PacketFrame& frame,
                           double sigma) {
  frame.validate();
  require_window_in_hull(u_r.grid(), frame, frame.lambda);
  const auto [urr, urz] = gradient(u_r);
  const auto [uzr, uzz] = gradient(u_z);
  const int m = packet_lattice_half(u_r.grid(), frame.lambda);
  double worst = 0.0;
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      const double x = frame.lambda * a / m, y = frame.lambda * b / m;
      const double gr = std::hypot(sample_local(urr, frame, x, y) - sigma, sample_local(urz, frame, x, y));
      const double gz = std::hypot(sample_local(uzr, frame, x, y), sample_local(uzz, frame, x, y) + sigma);
      worst = std::max(worst, gr + gz);
    }
  return normalized_ratio(worst, std::abs(sigma));
}

/// max over the packet of |u_far - affine Taylor polynomial at the center|
/// divided by |sigma| lambda. Returns +inf when sigma = 0 and the curvature
/// remainder does not vanish.
inline double exterior_tail(const RecoveryResult& far, const PacketFrame& frame, double sigma) {
  frame.validate();
  const double lam = frame.lambda;
  require_window_in_hull(far.u_r.grid(), frame, lam);
  const double rs = frame.r_star;
  const double ur0 = far.u_r.sample(rs, 0.0), uz0 = far.u_z.sample(rs, 0.0);
  const double urx = sample_derivative(far.u_r, Axis::r, rs, 0.0);
  const double ury = sample_derivative(far.u_r, Axis::z, rs, 0.0);
  const double uzx = sample_derivative(far.u_z, Axis::r, rs, 0.0);
  const double uzy = sample_derivative(far.u_z, Axis::z, rs, 0.0);
  const int m = packet_lattice_half(far.u_r.grid(), lam);
  double worst = 0.0;
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      const double x = lam * a / m, y = lam * b / m;
      const double dr = sample_local(far.u_r, frame, x, y) - (ur0 + urx * x + ury * y);
      const double dz = sample_local(far.u_z, frame, x, y) - (uz0 + uzx * x + uzy * y);
      worst = std::max(worst, std::hypot(dr, dz));
    }
  return normalized_ratio(worst, std::abs(sigma) * lam);
}

/// Monomials x^p y^q scored by the jet deviation.
inline constexpr std::array<std::pair<int, int>, 9> jet_modes{
    {{1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}, {3, 0}, {2, 1}, {0, 3}, {1, 4}}};

struct JetFit {
  double delta_jet = 0.0;
  std::array<double, 9> scaled{};  // |c_pq| lambda^(p+q) / (b lambda^3)
  double residual_rms = 0.0;       // unexplained part, same normalization
};

/// Weighted least-squares fit of Gamma - Gamma_* - b xy^2/2 on the core
/// |x|, |y| <= lambda onto the scored monomials plus the nuisance modes 1 and
/// xy^2. Throws on a rank-deficient system.
inline JetFit jet_fit(const ScalarField& gamma, const PacketFrame& frame, double b_lam,
                      double Gamma_star) {
  frame.validate();
  const double lam = frame.lambda;
  require_window_in_hull(gamma.grid(), frame, lam);
  JetFit out;
  const auto q = gauss_panels<8>(-1.0, 1.0, std::max(2, packet_panels(gamma.grid(), lam)));
  const std::size_t n = q.nodes.size() * q.nodes.size();
  constexpr int nb = 11;
  Eigen::MatrixXd A(n, nb);
  Eigen::VectorXd rhs(n);
  std::size_t row = 0;
  for (std::size_t a = 0; a < q.nodes.size(); ++a)
    for (std::size_t b = 0; b < q.nodes.size(); ++b, ++row) {
      const double s = q.nodes[a], t = q.nodes[b];
      const double sw = std::sqrt(q.weights[a] * q.weights[b]);
      const double x = lam * s, y = lam * t;
      const double val = sample_local(gamma, frame, x, y) - Gamma_star - 0.5 * b_lam * x * y * y;
      for (int k = 0; k < 9; ++k)
        A(row, k) = sw * std::pow(s, jet_modes[k].first) * std::pow(t, jet_modes[k].second);
      A(row, 9) = sw;
      A(row, 10) = sw * s * t * t;
      rhs(row) = sw * val;
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < nb) throw Error("degenerate jet fit: rank " + std::to_string(qr.rank()));
  const Eigen::VectorXd c = qr.solve(rhs);
  const double norm = std::abs(b_lam) * lam * lam * lam;
  for (int k = 0; k < 9; ++k) {
    out.scaled[k] = normalized_ratio(std::abs(c(k)), norm);
    out.delta_jet += out.scaled[k];
  }
  out.residual_rms = normalized_ratio((A * c - rhs).norm() / 2.0, norm);
  return out;
}

inline double jet_deviation(const ScalarField& gamma, const PacketFrame& frame, double b_lam,
                            double Gamma_star) {
  return jet_fit(gamma, frame, b_lam, Gamma_star).delta_jet;
}

struct DiagnosticsRecord {
  double t = 0, Q = 0, Qdiag = 0, C = 0, sigma = 0, a_lam = 0, b_lam = 0, Q_lam = 0, C_lam = 0,
         b = 0, mu = 0, rho = 0, Rprof = 0, delta_jet = 0, eps_strain = 0, eta_ext = 0, E = 0,
         r_star = 0, lambda = 0;
  double Dsign = 0, Dang = 0, Dprof = 0, Gamma_star = 0;
  bool center_warning = false;

  /// Name of the largest of the five components of E.
  std::string dominant_component() const {
    const std::pair<double, const char*> parts[] = {{delta_jet, "delta_jet"}, {mu, "mu"},
                                                    {Rprof, "Rprof"}, {rho, "rho"},
                                                    {eps_strain, "eps_strain"}};
    const auto* best = &parts[0];
    for (const auto& p : parts)
      if (!(p.first <= best->first)) best = &p;
    return best->second;
  }
};

/// Fills mu, rho and E from the components already set on the record.
inline DiagnosticsRecord assemble_record(DiagnosticsRecord r) {
  r.mu = r.b == 0.0 ? 0.0 : r.b * r.lambda * r.lambda * r.lambda / r.Gamma_star;
  r.rho = r.lambda / r.r_star;
  r.E = r.delta_jet + r.mu + r.Rprof + r.rho + r.eps_strain;
  return r;
}

struct DiagnosticsOptions {
  double delta_c = 0.05;
  double R0 = 0.25;
  double recovery_tol = 1e-10;
  bool exterior = true;
  double c_Q = score_constant(1.0);
  RecoverySolver* solver = nullptr;  // reused for the split solves when set
};

/// Full diagnostics pipeline on one snapshot. u_r, u_z come from the
/// recovery of g; sigma is measured from u_z at the center.
inline DiagnosticsRecord compute_diagnostics(const ScalarField& g, const ScalarField& gamma,
                                             const ScalarField& u_r, const ScalarField& u_z,
                                             const PacketFrame& frame,
                                             const DiagnosticsOptions& opt) {
  DiagnosticsRecord r;
  r.t = frame.t;
  r.r_star = frame.r_star;
  r.lambda = frame.lambda;
  r.Q = full_score(g, frame);
  r.Qdiag = diagonal_subscore(g, frame, opt.delta_c);
  r.center_warning = center_value_warning(g, frame);
  r.sigma = strain_at_center(u_z, frame);
  const auto p = projected_amplitudes(g, gamma, frame, opt.c_Q);
  r.a_lam = p.a_lam;
  r.b_lam = p.b_lam;
  r.Q_lam = p.Q_lam;
  r.C_lam = p.C_lam;
  r.Gamma_star = p.Gamma_star;
  r.b = jet_coefficient(gamma, frame);
  r.C = frame.lambda * frame.lambda * r.b;
  const auto d = profile_defects(g, frame, r.Q, p.a_lam);
  r.Dsign = d.Dsign;
  r.Dang = d.Dang;
  r.Dprof = d.Dprof;
  r.Rprof = d.Rprof;
  r.delta_jet = jet_deviation(gamma, frame, p.b_lam, p.Gamma_star);
  r.eps_strain = strain_error(u_r, u_z, frame, r.sigma);
  if (opt.exterior) {
    const auto split = opt.solver
                           ? split_exterior_velocity(*opt.solver, g, frame, opt.R0, opt.recovery_tol)
                           : split_exterior_velocity(g, frame, opt.R0, opt.recovery_tol);
    r.eta_ext = exterior_tail(split.far, frame, r.sigma);
  }
  return assemble_record(r);
}

}  // namespace qel
