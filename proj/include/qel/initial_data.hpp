#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qel/diagnostics.hpp"
#include "qel/elliptic.hpp"
#include "qel/error.hpp"
#include "qel/field.hpp"
#include "qel/smooth_bump.hpp"

namespace qel {

struct DataParameters {
  double r0 = 1.0;
  double lambda0 = 0.05;
  double a0 = 1.0;
  double Gamma_star0 = 1.0;
  double A_b = 64.0;
  double epsilon0 = 0.05;
  double kappa = 0.125;

  double b0() const { return A_b * a0 * a0 * lambda0 * lambda0; }

  /// Human-readable list of violated parameter inequalities (empty when valid).
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto fmt = [](double v) {
      std::ostringstream s;
      s.precision(6);
      s << v;
      return s.str();
    };
    if (!(r0 > 0.0)) out.push_back("r0 > 0 fails: r0 = " + fmt(r0));
    if (!(lambda0 > 0.0)) out.push_back("lambda0 > 0 fails: lambda0 = " + fmt(lambda0));
    if (!(Gamma_star0 > 0.0)) out.push_back("Gamma_star0 > 0 fails: Gamma_star0 = " + fmt(Gamma_star0));
    if (!(A_b > 0.0)) out.push_back("A_b > 0 fails: A_b = " + fmt(A_b));
    if (!(epsilon0 > 0.0)) out.push_back("epsilon0 > 0 fails: epsilon0 = " + fmt(epsilon0));
    if (!(kappa > 0.0)) out.push_back("kappa > 0 fails: kappa = " + fmt(kappa));
    if (!out.empty()) return out;
    if (!(lambda0 / r0 <= epsilon0))
      out.push_back("lambda0/r0 <= epsilon0 fails: " + fmt(lambda0 / r0) + " > " + fmt(epsilon0));
    const double lhs = A_b * a0 * a0 * std::pow(lambda0, 5);
    if (!(lhs <= epsilon0 * Gamma_star0))
      out.push_back("A_b a0^2 lambda0^5 <= epsilon0 Gamma_star0 fails: " + fmt(lhs) + " > " +
                    fmt(epsilon0 * Gamma_star0));
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (!v.empty()) throw std::invalid_argument("invalid data parameters: " + v.front());
  }
};

/// chi(x/lambda0) chi(y/lambda0).
inline double cutoff(double x, double y, double lambda0) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
  return data_cutoff_profile(x / lambda0) * data_cutoff_profile(y / lambda0);
}

struct InitialFields {
  ScalarField G0, Gamma0;
};

/// Explicit quadrupole datum: G0 = a0 x z chi, Gamma0 = chi (Gamma_* + b0 x z^2 / 2)
/// with x = r - r0. Both fields carry the support window as declared support.
inline InitialFields build_initial_fields(const DataParameters& p, GridPtr grid) {
  p.validate();
  const MeridionalGrid& g = *grid;
  const Box window{p.r0 - 4.0 * p.lambda0, p.r0 + 4.0 * p.lambda0, -4.0 * p.lambda0,
                   4.0 * p.lambda0};
  if (!(window.r_lo > g.r_min() && window.r_hi < g.r_max() && window.z_lo > g.z_min() &&
        window.z_hi < g.z_max()))
    throw SupportError("data support window is not strictly inside the grid hull");
  const double b0 = p.b0();
  InitialFields f{ScalarField(grid), ScalarField(grid)};
  for (int i = 0; i < g.n_r(); ++i) {
    const double x = g.r(i) - p.r0;
    for (int j = 0; j < g.n_z(); ++j) {
      const double z = g.z(j);
      const double chi = cutoff(x, z, p.lambda0);
      f.G0.at(i, j) = p.a0 * x * z * chi;
      f.Gamma0.at(i, j) = chi * (p.Gamma_star0 + 0.5 * b0 * x * z * z);
    }
  }
  f.G0.set_support(window);
  f.Gamma0.set_support(window);
  return f;
}

struct SelfEntryReport {
  double Q0 = 0, C0 = 0, mu0 = 0, rho0 = 0, Dsign0 = 0, Dang0 = 0;
  bool source_dominance_ok = false;
  double E0 = 0;
  double kappa = 0, b0 = 0, c_Q = 0, sigma0 = 0;
  DiagnosticsRecord record;              // full t = 0 diagnostics
  std::vector<std::string> violations;  // parameter inequalities that fail

  bool ok() const { return violations.empty() && source_dominance_ok; }
};

/// Evaluates the self-entry quantities of the explicit datum. mu0, rho0 and
/// C0 come from the parameters; Q0 and the defects from quadrature of G0.
inline SelfEntryReport self_entry_check(const DataParameters& p, const ScalarField& G0,
                                        const ScalarField& Gamma0, const DiagnosticsOptions& opt,
                                        double recovery_tol = 1e-10) {
  SelfEntryReport rep;
  rep.violations = p.violations();
  rep.kappa = p.kappa;
  rep.b0 = p.b0();
  rep.c_Q = opt.c_Q;
  rep.C0 = p.lambda0 * p.lambda0 * rep.b0;
  rep.mu0 = rep.b0 * std::pow(p.lambda0, 3) / p.Gamma_star0;
  rep.rho0 = p.lambda0 / p.r0;
  const PacketFrame frame{p.r0, p.lambda0, 0.0};
  const auto rec = solve_recovery(G0, recovery_tol);
  rep.record = compute_diagnostics(G0, Gamma0, rec.u_r, rec.u_z, frame, opt);
  rep.Q0 = rep.record.Q;
  rep.Dsign0 = rep.record.Dsign;
  rep.Dang0 = rep.record.Dang;
  rep.sigma0 = rep.record.sigma;
  rep.source_dominance_ok = rep.C0 >= p.kappa * rep.Q0 * rep.Q0;
  rep.E0 = rep.record.delta_jet + rep.mu0 + rep.record.Rprof + rep.rho0 + rep.record.eps_strain;
  return rep;
}

}  // namespace qel
