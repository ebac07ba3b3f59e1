#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qel/error.hpp"
#include "qel/field.hpp"
#include "qel/frame.hpp"
#include "qel/multigrid.hpp"
#include "qel/smooth_bump.hpp"

namespace qel {

namespace detail {

// I(r, r', dz) = int_0^pi sin^2(t) (A - B cos t)^(-3/2) dt with
// A = r^2 + r'^2 + dz^2, B = 2 r r'.
inline double ring_integral(double r, double rp, double dz) {
  const double A = r * r + rp * rp + dz * dz;
  const double B = 2.0 * r * rp;
  const double beta = B / A;
  if (beta < 0.1) {
    // even terms of the binomial series; int sin^2 cos^(2m) = pi (2m-1)!!/((2m)!! (2m+2))
    double sum = 0.0, coef = 1.0, dfac = 1.0, bpow = 1.0;
    for (int n = 0; n < 40; n += 2) {
      const double term = coef * bpow * std::numbers::pi * dfac / (n + 2.0);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      coef *= (1.5 + n) / (n + 1.0) * (1.5 + n + 1.0) / (n + 2.0);
      dfac *= (n + 1.0) / (n + 2.0);
      bpow *= beta * beta;
    }
    return sum / (A * std::sqrt(A));
  }
  const double k = std::sqrt(2.0 * B / (A + B));
  return 4.0 / (B * B * std::sqrt(A + B)) *
         (A * std::comp_ellint_1(k) - (A + B) * std::comp_ellint_2(k));
}

}  // namespace detail

/// Free-space response at (r, z) to a unit axisymmetric source at (rp, zp):
/// the whole-space Newtonian kernel of the 5D Laplacian integrated over the
/// 3-sphere of radius rp, times the r'^3 volume factor.
inline double green5(double r, double z, double rp, double zp) {
  return rp * rp * rp * detail::ring_integral(r, rp, z - zp) / (2.0 * std::numbers::pi);
}

/// Index box of nodes where |g| exceeds rel_threshold * max|g|.
struct SupportIndices {
  int i_lo, i_hi, j_lo, j_hi;
  std::size_t count;
};

inline std::optional<SupportIndices> support_indices(const ScalarField& g,
                                                     double rel_threshold = 1e-13) {
  const double m = g.max_abs();
  if (m == 0.0) return std::nullopt;
  const double thr = rel_threshold * m;
  const MeridionalGrid& gr = g.grid();
  SupportIndices s{gr.n_r(), -1, gr.n_z(), -1, 0};
  for (int i = 0; i < gr.n_r(); ++i)
    for (int j = 0; j < gr.n_z(); ++j)
      if (std::abs(g.at(i, j)) > thr) {
        s.i_lo = std::min(s.i_lo, i);
        s.i_hi = std::max(s.i_hi, i);
        s.j_lo = std::min(s.j_lo, j);
        s.j_hi = std::max(s.j_hi, j);
        ++s.count;
      }
  return s;
}

/// Free-space potential of g at an arbitrary point by direct trapezoidal
/// summation. A node coinciding with the target is skipped (log-singular).
inline double free_space_potential(const ScalarField& g, double r, double z,
                                   double rel_threshold = 1e-13) {
  const MeridionalGrid& gr = g.grid();
  const double thr = rel_threshold * g.max_abs();
  double acc = 0.0;
  for (int i = 0; i < gr.n_r(); ++i)
    for (int j = 0; j < gr.n_z(); ++j) {
      const double v = g.at(i, j);
      if (v == 0.0 || std::abs(v) <= thr) continue;
      const double rp = gr.r(i), zp = gr.z(j);
      if (rp == r && zp == z) continue;
      acc += v * green5(r, z, rp, zp);
    }
  return acc * gr.dr() * gr.dz();
}

/// Dirichlet data on the outer ring of the grid from the free-space
/// potential of the source. Charges are spread onto a coarse uniform lattice
/// with cubic Lagrange weights; the lattice-to-ring kernel matrix is cached
/// and reused while the support stays inside its coverage.
class BoundaryPotential {
 public:
  explicit BoundaryPotential(GridPtr grid) : grid_(std::move(grid)) {
    const MeridionalGrid& g = *grid_;
    for (int j = 0; j < g.n_z(); ++j) ring_.push_back({0, j});
    for (int j = 0; j < g.n_z(); ++j) ring_.push_back({g.n_r() - 1, j});
    for (int i = 1; i < g.n_r() - 1; ++i) ring_.push_back({i, 0});
    for (int i = 1; i < g.n_r() - 1; ++i) ring_.push_back({i, g.n_z() - 1});
  }

  const std::vector<std::pair<int, int>>& ring() const { return ring_; }
  int lattice_builds() const { return builds_; }

  /// Writes boundary values of the potential of g into phi (full grid array).
  void evaluate(const ScalarField& g, const SupportIndices& s, double rel_threshold,
                std::vector<double>& phi) {
    const MeridionalGrid& gr = *grid_;
    const double r_lo = gr.r(s.i_lo), r_hi = gr.r(s.i_hi);
    const double z_lo = gr.z(s.j_lo), z_hi = gr.z(s.j_hi);
    const double d_min = std::min({r_lo - gr.r_min(), gr.r_max() - r_hi, z_lo - gr.z_min(),
                                   gr.z_max() - z_hi});
    const double thr = rel_threshold * g.max_abs();
    const double cell = gr.dr() * gr.dz();

    bool use_lattice = lattice_ && lattice_->covers(r_lo, r_hi, z_lo, z_hi) &&
                       lattice_->h <= d_min / 24.0;
    if (!use_lattice) {
      const double pad = 0.25 * d_min;
      const double h = (d_min - pad) / 32.0;
      const int nr = static_cast<int>(std::ceil((r_hi - r_lo + 2.0 * pad) / h)) + 4;
      const int nz = static_cast<int>(std::ceil((z_hi - z_lo + 2.0 * pad) / h)) + 4;
      if (static_cast<std::size_t>(nr) * nz < s.count) {
        build_lattice(r_lo - pad - h, z_lo - pad - h, h, nr, nz);
        use_lattice = true;
      }
    }

    if (!use_lattice) {
      const bool cached = direct_ && direct_->covers(s);
      if (!cached && !build_direct(s)) {
        for (const auto& [bi, bj] : ring_) {
          const double rb = gr.r(bi), zb = gr.z(bj);
          double acc = 0.0;
          for (int i = s.i_lo; i <= s.i_hi; ++i)
            for (int j = s.j_lo; j <= s.j_hi; ++j) {
              const double v = g.at(i, j);
              if (std::abs(v) > thr) acc += v * green5(rb, zb, gr.r(i), gr.z(j));
            }
          phi[gr.index(bi, bj)] = acc * cell;
        }
        return;
      }
      const DirectBlock& D = *direct_;
      const int nzb = D.j_hi - D.j_lo + 1;
      const std::size_t nb = static_cast<std::size_t>(D.i_hi - D.i_lo + 1) * nzb;
      std::vector<double> q(nb, 0.0);
      for (int i = s.i_lo; i <= s.i_hi; ++i)
        for (int j = s.j_lo; j <= s.j_hi; ++j) {
          const double v = g.at(i, j);
          if (std::abs(v) > thr) q[static_cast<std::size_t>(i - D.i_lo) * nzb + (j - D.j_lo)] = v;
        }
      for (std::size_t k = 0; k < ring_.size(); ++k) {
        const double* row = D.kernel.data() + k * nb;
        double acc = 0.0;
        for (std::size_t c = 0; c < nb; ++c) acc += row[c] * q[c];
        phi[gr.index(ring_[k].first, ring_[k].second)] = acc * cell;
      }
      return;
    }

    const Lattice& L = *lattice_;
    std::vector<double> q(static_cast<std::size_t>(L.nr) * L.nz, 0.0);
    for (int i = s.i_lo; i <= s.i_hi; ++i) {
      const double sr = (gr.r(i) - L.r0) / L.h;
      const int a0 = static_cast<int>(std::floor(sr)) - 1;
      const auto wr = detail::lagrange4(sr - a0);
      for (int j = s.j_lo; j <= s.j_hi; ++j) {
        const double v = g.at(i, j);
        if (std::abs(v) <= thr) continue;
        const double sz = (gr.z(j) - L.z0) / L.h;
        const int b0 = static_cast<int>(std::floor(sz)) - 1;
        const auto wz = detail::lagrange4(sz - b0);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            q[static_cast<std::size_t>(a0 + a) * L.nz + (b0 + b)] += v * cell * wr[a] * wz[b];
      }
    }
    const std::size_t nl = q.size();
    for (std::size_t k = 0; k < ring_.size(); ++k) {
      const double* row = L.kernel.data() + k * nl;
      double acc = 0.0;
      for (std::size_t c = 0; c < nl; ++c) acc += row[c] * q[c];
      phi[gr.index(ring_[k].first, ring_[k].second)] = acc;
    }
  }

 private:
  struct Lattice {
    double r0, z0, h;
    int nr, nz;
    std::vector<double> kernel;
    bool covers(double r_lo, double r_hi, double z_lo, double z_hi) const {
      return r_lo >= r0 + h && r_hi <= r0 + (nr - 3) * h && z_lo >= z0 + h &&
             z_hi <= z0 + (nz - 3) * h;
    }
  };

  // Ring-to-node kernel on a padded block of grid nodes, used for small
  // supports where a lattice would not save work.
  struct DirectBlock {
    int i_lo, i_hi, j_lo, j_hi;
    std::vector<double> kernel;
    bool covers(const SupportIndices& s) const {
      return s.i_lo >= i_lo && s.i_hi <= i_hi && s.j_lo >= j_lo && s.j_hi <= j_hi;
    }
  };
  static constexpr std::size_t direct_cache_limit = std::size_t{1} << 22;

  bool build_direct(const SupportIndices& s) {
    const MeridionalGrid& gr = *grid_;
    const int pad = std::max(2, (s.i_hi - s.i_lo + s.j_hi - s.j_lo) / 16);
    DirectBlock D{std::max(1, s.i_lo - pad), std::min(gr.n_r() - 2, s.i_hi + pad),
                  std::max(1, s.j_lo - pad), std::min(gr.n_z() - 2, s.j_hi + pad), {}};
    const int nzb = D.j_hi - D.j_lo + 1;
    const std::size_t nb = static_cast<std::size_t>(D.i_hi - D.i_lo + 1) * nzb;
    if (nb * ring_.size() > direct_cache_limit) return false;
    D.kernel.resize(nb * ring_.size());
    for (std::size_t k = 0; k < ring_.size(); ++k) {
      const double rb = gr.r(ring_[k].first), zb = gr.z(ring_[k].second);
      double* row = D.kernel.data() + k * nb;
      for (int i = D.i_lo; i <= D.i_hi; ++i)
        for (int j = D.j_lo; j <= D.j_hi; ++j)
          row[static_cast<std::size_t>(i - D.i_lo) * nzb + (j - D.j_lo)] =
              green5(rb, zb, gr.r(i), gr.z(j));
    }
    direct_ = std::move(D);
    return true;
  }

  void build_lattice(double r0, double z0, double h, int nr, int nz) {
    const MeridionalGrid& gr = *grid_;
    Lattice L{r0, z0, h, nr, nz, {}};
    const std::size_t nl = static_cast<std::size_t>(nr) * nz;
    L.kernel.resize(ring_.size() * nl);
    for (std::size_t k = 0; k < ring_.size(); ++k) {
      const double rb = gr.r(ring_[k].first), zb = gr.z(ring_[k].second);
      double* row = L.kernel.data() + k * nl;
      for (int a = 0; a < nr; ++a)
        for (int b = 0; b < nz; ++b)
          row[static_cast<std::size_t>(a) * nz + b] = green5(rb, zb, r0 + a * h, z0 + b * h);
    }
    lattice_ = std::move(L);
    ++builds_;
  }

  GridPtr grid_;
  std::vector<std::pair<int, int>> ring_;
  std::optional<Lattice> lattice_;
  std::optional<DirectBlock> direct_;
  int builds_ = 0;
};

struct RecoveryResult {
  ScalarField phi, u_r, u_z;
  double div_residual_max = 0.0;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// max over interior nodes of |(1/r) d_r(r u_r) + d_z u_z|, second-order
/// centered differences.
inline double divergence_residual(const ScalarField& u_r, const ScalarField& u_z) {
  const MeridionalGrid& g = u_r.grid();
  double m = 0.0;
  for (int i = 1; i < g.n_r() - 1; ++i) {
    const double r = g.r(i), rp = g.r(i + 1), rm = g.r(i - 1);
    for (int j = 1; j < g.n_z() - 1; ++j) {
      const double d = (rp * u_r.at(i + 1, j) - rm * u_r.at(i - 1, j)) / (2.0 * g.dr() * r) +
                       (u_z.at(i, j + 1) - u_z.at(i, j - 1)) / (2.0 * g.dz());
      m = std::max(m, std::abs(d));
    }
  }
  return m;
}

/// Meridional velocity from the potential: u_r = -r d_z phi, u_z = 2 phi + r d_r phi.
inline std::pair<ScalarField, ScalarField> velocity_from_potential(const ScalarField& phi) {
  auto [pr, pz] = gradient(phi);
  const MeridionalGrid& g = phi.grid();
  ScalarField ur(phi.grid_ptr()), uz(phi.grid_ptr());
  for (int i = 0; i < g.n_r(); ++i) {
    const double r = g.r(i);
    for (int j = 0; j < g.n_z(); ++j) {
      ur.at(i, j) = -r * pz.at(i, j);
      uz.at(i, j) = 2.0 * phi.at(i, j) + r * pr.at(i, j);
    }
  }
  return {std::move(ur), std::move(uz)};
}

/// Reusable solver for -Lap5 phi = g on a fixed grid.
class RecoverySolver {
 public:
  explicit RecoverySolver(GridPtr grid, int max_cycles = 60)
      : grid_(std::move(grid)), mg_(*grid_), bc_(grid_), max_cycles_(max_cycles) {}

  const GridPtr& grid_ptr() const { return grid_; }
  const BoundaryPotential& boundary() const { return bc_; }

  /// Minimum number of nodes between the support and the grid edge.
  static constexpr int support_margin = 2;
  static constexpr double support_threshold = 1e-13;

  RecoveryResult solve(const ScalarField& g, double tol = 1e-10) {
    if (!(tol > 0.0)) throw std::invalid_argument("recovery tolerance must be positive");
    if (!(*g.grid_ptr() == *grid_)) throw std::invalid_argument("source lives on a different grid");
    if (!g.all_finite()) throw std::invalid_argument("source has non-finite values");
    const MeridionalGrid& gr = *grid_;
    RecoveryResult out{ScalarField(grid_), ScalarField(grid_), ScalarField(grid_), 0.0, 0, 0.0};
    const auto s = support_indices(g, support_threshold);
    if (!s) return out;
    if (s->i_lo < support_margin || s->j_lo < support_margin ||
        s->i_hi > gr.n_r() - 1 - support_margin || s->j_hi > gr.n_z() - 1 - support_margin)
      throw SupportError("source support reaches the grid boundary (nodes " +
                         std::to_string(s->i_lo) + ".." + std::to_string(s->i_hi) + " x " +
                         std::to_string(s->j_lo) + ".." + std::to_string(s->j_hi) + ")");

    std::vector<double> phi(gr.size(), 0.0);
    bc_.evaluate(g, *s, support_threshold, phi);
    std::vector<double> f(g.values().begin(), g.values().end());
    const MultigridStats st = mg_.solve(phi, f, tol, max_cycles_);
    if (st.relative_residual > tol)
      throw ConvergenceError("multigrid stalled at relative residual " +
                             std::to_string(st.relative_residual) + " after " +
                             std::to_string(st.cycles) + " cycles");
    out.phi = ScalarField(grid_, std::move(phi));
    auto [ur, uz] = velocity_from_potential(out.phi);
    out.u_r = std::move(ur);
    out.u_z = std::move(uz);
    out.div_residual_max = divergence_residual(out.u_r, out.u_z);
    out.iterations = st.cycles;
    out.relative_residual = st.relative_residual;
    return out;
  }

 private:
  GridPtr grid_;
  Poisson5Multigrid mg_;
  BoundaryPotential bc_;
  int max_cycles_;
};

inline RecoveryResult solve_recovery(const ScalarField& g, double tol = 1e-10) {
  RecoverySolver solver(g.grid_ptr());
  return solver.solve(g, tol);
}

/// sigma = -d_z u_z at the packet center.
inline double strain_at_center(const ScalarField& u_z, const PacketFrame& frame) {
  const MeridionalGrid& g = u_z.grid();
  if (!(frame.r_star > g.r_min() && frame.r_star < g.r_max() && 0.0 > g.z_min() &&
        0.0 < g.z_max()))
    throw std::out_of_range("packet center outside grid hull");
  return -sample_derivative(u_z, Axis::z, frame.r_star, 0.0);
}

inline double strain_at_center(const RecoveryResult& result, const PacketFrame& frame) {
  return strain_at_center(result.u_z, frame);
}

struct SplitRecovery {
  RecoveryResult near, far;
};

/// Radial partition weight about the packet center: 1 for |X| <= R0, 0 for
/// |X| >= 2 R0.
inline double near_weight(const PacketFrame& frame, double R0, double r, double z) {
  const double d = std::hypot(r - frame.r_star, z);
  return plateau_bump(d / R0, 1.0, 2.0);
}

/// Solves the near (|X| < ~R0) and far parts of g separately with a caller
/// supplied solver on the grid of g.
inline SplitRecovery split_exterior_velocity(RecoverySolver& solver, const ScalarField& g,
                                             const PacketFrame& frame, double R0,
                                             double tol = 1e-10) {
  frame.validate();
  if (!(R0 > frame.lambda)) throw std::invalid_argument("split radius must exceed lambda");
  const MeridionalGrid& gr = g.grid();
  ScalarField near(g.grid_ptr()), far(g.grid_ptr());
  for (int i = 0; i < gr.n_r(); ++i)
    for (int j = 0; j < gr.n_z(); ++j) {
      const double w = near_weight(frame, R0, gr.r(i), gr.z(j));
      near.at(i, j) = w * g.at(i, j);
      far.at(i, j) = g.at(i, j) - near.at(i, j);
    }
  // far part first: its support box is the larger one, so the near solve
  // reuses the same boundary lattice
  SplitRecovery out;
  out.far = solver.solve(far, tol);
  out.near = solver.solve(near, tol);
  return out;
}

inline SplitRecovery split_exterior_velocity(const ScalarField& g, const PacketFrame& frame,
                                             double R0, double tol = 1e-10) {
  RecoverySolver solver(g.grid_ptr());
  return split_exterior_velocity(solver, g, frame, R0, tol);
}

}  // namespace qel
