#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qel/grid.hpp"

namespace qel {

struct MultigridStats {
  int cycles = 0;
  double relative_residual = 0.0;
};

/// Geometric multigrid for -(d_rr + (3/r) d_r + d_zz) u = f with Dirichlet
/// data on the grid boundary, second-order five-point discretization.
///
/// Levels are built by halving while both node counts stay odd and the
/// coarse spacing keeps the r-stencil an M-matrix (3h/(2 r_min) <= 1/2).
/// Red-black ordering keeps iterates exactly mirror-symmetric in z when the
/// grid is.
class Poisson5Multigrid {
 public:
  explicit Poisson5Multigrid(const MeridionalGrid& grid, int pre_sweeps = 2, int post_sweeps = 2)
      : pre_(pre_sweeps), post_(post_sweeps) {
    int nr = grid.n_r(), nz = grid.n_z();
    double dr = grid.dr(), dz = grid.dz();
    const double r_min = grid.r_min();
    levels_.push_back(make_level(nr, nz, dr, dz, r_min));
    while ((nr - 1) % 2 == 0 && (nz - 1) % 2 == 0 && (nr - 1) / 2 >= 4 && (nz - 1) / 2 >= 4 &&
           3.0 * (2.0 * dr) / (2.0 * r_min) <= 0.5) {
      nr = (nr - 1) / 2 + 1;
      nz = (nz - 1) / 2 + 1;
      dr *= 2.0;
      dz *= 2.0;
      levels_.push_back(make_level(nr, nz, dr, dz, r_min));
    }
  }

  int level_count() const { return static_cast<int>(levels_.size()); }

  /// Solves in place. Boundary entries of u carry the Dirichlet data; interior
  /// entries are the initial guess. Stops when the residual 2-norm drops below
  /// tol times its initial value.
  MultigridStats solve(std::vector<double>& u, const std::vector<double>& f, double tol,
                       int max_cycles) {
    Level& top = levels_.front();
    top.u = u;
    top.f = f;
    MultigridStats stats;
    const double r0 = residual_norm(top);
    if (r0 == 0.0) {
      u = top.u;
      return stats;
    }
    double rn = r0;
    while (rn > tol * r0) {
      if (stats.cycles >= max_cycles) break;
      vcycle(0);
      ++stats.cycles;
      rn = residual_norm(top);
    }
    stats.relative_residual = rn / r0;
    u = top.u;
    return stats;
  }

  /// Applies the discrete operator on interior nodes (boundary rows return 0).
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const Level& L = levels_.front();
    out.assign(u.size(), 0.0);
    for (int i = 1; i < L.nr - 1; ++i)
      for (int j = 1; j < L.nz - 1; ++j) out[idx(L, i, j)] = op(L, u, i, j);
  }

 private:
  struct Level {
    int nr = 0, nz = 0;
    double dr = 0, dz = 0;
    std::vector<double> cE, cW;  // r-neighbour coefficients per i
    double cN = 0, cC = 0;
    std::vector<double> u, f, res;
  };

  static std::size_t idx(const Level& L, int i, int j) {
    return static_cast<std::size_t>(i) * L.nz + j;
  }

  static Level make_level(int nr, int nz, double dr, double dz, double r_min) {
    Level L;
    L.nr = nr;
    L.nz = nz;
    L.dr = dr;
    L.dz = dz;
    L.cE.resize(nr);
    L.cW.resize(nr);
    for (int i = 0; i < nr; ++i) {
      const double r = r_min + i * dr;
      L.cE[i] = 1.0 / (dr * dr) + 3.0 / (2.0 * r * dr);
      L.cW[i] = 1.0 / (dr * dr) - 3.0 / (2.0 * r * dr);
    }
    L.cN = 1.0 / (dz * dz);
    L.cC = 2.0 / (dr * dr) + 2.0 / (dz * dz);
    L.u.assign(static_cast<std::size_t>(nr) * nz, 0.0);
    L.f = L.u;
    L.res = L.u;
    return L;
  }

  static double op(const Level& L, const std::vector<double>& u, int i, int j) {
    const std::size_t k = idx(L, i, j);
    return L.cC * u[k] - L.cE[i] * u[k + L.nz] - L.cW[i] * u[k - L.nz] -
           L.cN * (u[k + 1] + u[k - 1]);
  }

  static void smooth(Level& L, int sweeps) {
    for (int s = 0; s < sweeps; ++s)
      for (int color = 0; color < 2; ++color)
        for (int i = 1; i < L.nr - 1; ++i) {
          const int j0 = 1 + ((i + 1 + color) & 1);
          for (int j = j0; j < L.nz - 1; j += 2) {
            const std::size_t k = idx(L, i, j);
            L.u[k] = (L.f[k] + L.cE[i] * L.u[k + L.nz] + L.cW[i] * L.u[k - L.nz] +
                      L.cN * (L.u[k + 1] + L.u[k - 1])) /
                     L.cC;
          }
        }
  }

  static double residual_norm(Level& L) {
    double s = 0.0;
    for (int i = 1; i < L.nr - 1; ++i)
      for (int j = 1; j < L.nz - 1; ++j) {
        const std::size_t k = idx(L, i, j);
        const double r = L.f[k] - op(L, L.u, i, j);
        L.res[k] = r;
        s += r * r;
      }
    return std::sqrt(s);
  }

  void vcycle(std::size_t l) {
    Level& L = levels_[l];
    if (l + 1 == levels_.size()) {
      solve_coarsest(L);
      return;
    }
    smooth(L, pre_);
    residual_norm(L);
    Level& C = levels_[l + 1];
    std::fill(C.u.begin(), C.u.end(), 0.0);
    std::fill(C.f.begin(), C.f.end(), 0.0);
    for (int I = 1; I < C.nr - 1; ++I)
      for (int J = 1; J < C.nz - 1; ++J) {
        const int i = 2 * I, j = 2 * J;
        auto R = [&](int a, int b) { return L.res[idx(L, i + a, j + b)]; };
        C.f[idx(C, I, J)] = (4.0 * R(0, 0) + 2.0 * (R(1, 0) + R(-1, 0) + R(0, 1) + R(0, -1)) +
                             R(1, 1) + R(1, -1) + R(-1, 1) + R(-1, -1)) /
                            16.0;
      }
    vcycle(l + 1);
    for (int i = 1; i < L.nr - 1; ++i)
      for (int j = 1; j < L.nz - 1; ++j) {
        const int I = i / 2, J = j / 2;
        const bool oi = i & 1, oj = j & 1;
        double c;
        if (!oi && !oj)
          c = C.u[idx(C, I, J)];
        else if (oi && !oj)
          c = 0.5 * (C.u[idx(C, I, J)] + C.u[idx(C, I + 1, J)]);
        else if (!oi && oj)
          c = 0.5 * (C.u[idx(C, I, J)] + C.u[idx(C, I, J + 1)]);
        else
          c = 0.25 * (C.u[idx(C, I, J)] + C.u[idx(C, I + 1, J)] + C.u[idx(C, I, J + 1)] +
                      C.u[idx(C, I + 1, J + 1)]);
        L.u[idx(L, i, j)] += c;
      }
    smooth(L, post_);
  }

  static void solve_coarsest(Level& L) {
    const double r0 = residual_norm(L);
    if (r0 == 0.0) return;
    for (int it = 0; it < 4000; it += 10) {
      smooth(L, 10);
      if (residual_norm(L) <= 1e-6 * r0) break;
    }
  }

  std::vector<Level> levels_;
  int pre_, post_;
};

}  // namespace qel
