#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qel/diagnostics.hpp"
#include "qel/elliptic.hpp"
#include "qel/error.hpp"
#include "qel/field.hpp"
#include "qel/frame.hpp"

namespace qel {

struct EvolutionState {
  double t = 0.0;
  ScalarField G, Gamma;
  PacketFrame frame;
  VelocityField velocity;  // meridional velocity and swirl speed at t
};

/// Meridional velocity (u_r, u_z) at (r, z, t), used instead of recovery.
using PrescribedVelocity = std::function<std::array<double, 2>(double r, double z, double t)>;

struct EvolutionOptions {
  double recovery_tol = 1e-10;
  double cfl = 0.5;
  bool source = true;
  int backtrack_iterations = 2;
  bool clip_swirl = true;  // clamp transported Gamma to the previous global range
  PrescribedVelocity prescribed;  // empty: recover from G
};

/// r^-4 d_z(Gamma^2) on the grid.
inline ScalarField swirl_source(const ScalarField& gamma) {
  const MeridionalGrid& g = gamma.grid();
  ScalarField sq(gamma.grid_ptr());
  for (std::size_t k = 0; k < sq.values().size(); ++k) {
    const double v = gamma.values()[k];
    sq.values()[k] = v * v;
  }
  ScalarField s = derivative(sq, Axis::z);
  for (int i = 0; i < g.n_r(); ++i) {
    const double r2 = g.r(i) * g.r(i);
    for (int j = 0; j < g.n_z(); ++j) s.at(i, j) /= r2 * r2;
  }
  return s;
}

inline double max_speed(const VelocityField& u) {
  double m = 0.0;
  for (std::size_t k = 0; k < u.u_r.values().size(); ++k)
    m = std::max(m, std::hypot(u.u_r.values()[k], u.u_z.values()[k]));
  return m;
}

/// Frame update over one step: r_* follows u_r at the center (midpoint
/// corrected) and lambda follows the exact integrating factor for the
/// half-step strain.
inline PacketFrame advance_frame(const PacketFrame& frame, const ScalarField& u_r_now,
                                 const ScalarField& u_r_half, const ScalarField& u_z_half,
                                 double dt, double* sigma_used = nullptr) {
  const double r_mid = frame.r_star + 0.5 * dt * u_r_now.sample(frame.r_star, 0.0);
  const double sigma = -sample_derivative(u_z_half, Axis::z, r_mid, 0.0);
  PacketFrame out = frame;
  out.r_star = frame.r_star + dt * u_r_half.sample(r_mid, 0.0);
  out.lambda = frame.lambda * std::exp(-sigma * dt);
  out.t = frame.t + dt;
  if (sigma_used) *sigma_used = sigma;
  return out;
}

/// Second-order semi-Lagrangian integrator for D_t Gamma = 0,
/// D_t G = r^-4 d_z(Gamma^2) with velocity recovered from G.
class Evolver {
 public:
  Evolver(GridPtr grid, EvolutionOptions opt = {})
      : grid_(std::move(grid)), opt_(std::move(opt)), solver_(grid_) {
    if (!(opt_.cfl > 0.0)) throw std::invalid_argument("CFL number must be positive");
  }

  const EvolutionOptions& options() const { return opt_; }
  RecoverySolver& solver() { return solver_; }
  const GridPtr& grid_ptr() const { return grid_; }

  VelocityField velocity(const ScalarField& G, const ScalarField& Gamma, double t) {
    VelocityField u{ScalarField(grid_), ScalarField(grid_), ScalarField(grid_)};
    const MeridionalGrid& g = *grid_;
    if (opt_.prescribed) {
      for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
          const auto v = opt_.prescribed(g.r(i), g.z(j), t);
          u.u_r.at(i, j) = v[0];
          u.u_z.at(i, j) = v[1];
        }
    } else {
      auto rec = solver_.solve(G, opt_.recovery_tol);
      u.u_r = std::move(rec.u_r);
      u.u_z = std::move(rec.u_z);
    }
    for (int i = 0; i < g.n_r(); ++i)
      for (int j = 0; j < g.n_z(); ++j) u.u_theta.at(i, j) = Gamma.at(i, j) / g.r(i);
    return u;
  }

  EvolutionState initial_state(ScalarField G, ScalarField Gamma, PacketFrame frame) {
    if (!(*G.grid_ptr() == *grid_) || !(*Gamma.grid_ptr() == *grid_))
      throw std::invalid_argument("initial fields live on a different grid");
    if (!G.all_finite() || !Gamma.all_finite())
      throw std::invalid_argument("initial fields have non-finite values");
    frame.validate();
    EvolutionState s;
    s.t = frame.t;
    s.velocity = velocity(G, Gamma, s.t);
    s.G = std::move(G);
    s.Gamma = std::move(Gamma);
    s.frame = frame;
    return s;
  }

  /// Largest step allowed by the CFL condition for the cached velocity.
  double cfl_dt(const EvolutionState& s) const {
    const double v = max_speed(s.velocity);
    const double h = std::min(grid_->dr(), grid_->dz());
    return v > 0.0 ? opt_.cfl * h / v : std::numeric_limits<double>::infinity();
  }

  /// One midpoint step. Throws StepError when dt breaks the CFL limit for
  /// either the current or the half-step velocity.
  EvolutionState step(const EvolutionState& s, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
    check_cfl(s.velocity, dt);
    const MeridionalGrid& g = *grid_;

    const auto [lo, hi] = std::minmax_element(s.Gamma.values().begin(), s.Gamma.values().end());
    swirl_lo_ = *lo;
    swirl_hi_ = *hi;

    // predictor: half step along the current velocity
    const ScalarField src_now = opt_.source ? swirl_source(s.Gamma) : ScalarField(grid_);
    ScalarField G_half(grid_), Gm_half(grid_);
    for (int i = 0; i < g.n_r(); ++i)
      for (int j = 0; j < g.n_z(); ++j) {
        const double rd = g.r(i) - 0.5 * dt * s.velocity.u_r.at(i, j);
        const double zd = g.z(j) - 0.5 * dt * s.velocity.u_z.at(i, j);
        G_half.at(i, j) = s.G.sample(rd, zd) + 0.5 * dt * src_now.sample(rd, zd);
        Gm_half.at(i, j) = swirl_at(s.Gamma, rd, zd);
      }
    const VelocityField u_half = velocity(G_half, Gm_half, s.t + 0.5 * dt);
    check_cfl(u_half, dt);
    const ScalarField src_half = opt_.source ? swirl_source(Gm_half) : ScalarField(grid_);

    // corrector: midpoint characteristics with the half-step velocity
    EvolutionState out;
    out.G = ScalarField(grid_);
    out.Gamma = ScalarField(grid_);
    for (int i = 0; i < g.n_r(); ++i)
      for (int j = 0; j < g.n_z(); ++j) {
        const double r = g.r(i), z = g.z(j);
        double rd = r - dt * u_half.u_r.at(i, j), zd = z - dt * u_half.u_z.at(i, j);
        for (int it = 0; it < opt_.backtrack_iterations; ++it) {
          const double rm = 0.5 * (r + rd), zm = 0.5 * (z + zd);
          rd = r - dt * u_half.u_r.sample(rm, zm);
          zd = z - dt * u_half.u_z.sample(rm, zm);
        }
        const double rm = 0.5 * (r + rd), zm = 0.5 * (z + zd);
        out.G.at(i, j) = s.G.sample(rd, zd) + dt * src_half.sample(rm, zm);
        out.Gamma.at(i, j) = swirl_at(s.Gamma, rd, zd);
      }
    if (!out.G.all_finite() || !out.Gamma.all_finite())
      throw StepError("non-finite field values after step at t = " + std::to_string(s.t));

    out.frame = advance_frame(s.frame, s.velocity.u_r, u_half.u_r, u_half.u_z, dt, &last_sigma_);
    out.t = s.t + dt;
    out.frame.t = out.t;
    out.velocity = velocity(out.G, out.Gamma, out.t);
    return out;
  }

  /// Strain at the frame midpoint used by the last frame update.
  double last_step_sigma() const { return last_sigma_; }

 private:
  double swirl_at(const ScalarField& gamma, double r, double z) const {
    const double v = gamma.sample(r, z);
    return opt_.clip_swirl ? std::clamp(v, swirl_lo_, swirl_hi_) : v;
  }

  void check_cfl(const VelocityField& u, double dt) const {
    const double h = std::min(grid_->dr(), grid_->dz());
    const double c = dt * max_speed(u) / h;
    if (c > opt_.cfl)
      throw StepError("CFL limit exceeded: dt max|u| / h = " + std::to_string(c) + " > " +
                      std::to_string(opt_.cfl));
  }

  GridPtr grid_;
  EvolutionOptions opt_;
  RecoverySolver solver_;
  double last_sigma_ = 0.0;
  double swirl_lo_ = 0.0, swirl_hi_ = 0.0;
};

struct RunOptions {
  double t_final = 1.0;
  double dt_max = 0.05;
  double record_interval = 0.1;
  double E_cap = 0.5;
  double sigma_dt_max = 0.1;
  double dt_min = 1e-8;                                          // CFL floor
  double strain_budget = std::numeric_limits<double>::infinity();  // halt at |int sigma dt|
  bool halt_on_cap = true;
  DiagnosticsOptions diag;
};

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  EvolutionState final_state;
  std::string halt_reason;  // t_final, E_cap, frame, cfl_floor, strain_budget
  std::string first_exit;   // dominant component of E when it first exceeded the cap
  double first_exit_time = std::numeric_limits<double>::quiet_NaN();
  double strain_integral = 0.0;  // sum of sigma dt over the steps taken
  int steps = 0;
};

/// Steps from s until a halt condition, emitting a record at t = 0 and at
/// every multiple of record_interval. on_record, when set, sees each record
/// as soon as it is produced.
inline RunResult run(Evolver& ev, EvolutionState s, const RunOptions& opt,
                     const std::function<void(const DiagnosticsRecord&)>& on_record = {}) {
  if (!(opt.t_final >= 0.0)) throw std::invalid_argument("t_final must be nonnegative");
  if (!(opt.dt_max > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(opt.record_interval > 0.0)) throw std::invalid_argument("record interval must be positive");
  DiagnosticsOptions dopt = opt.diag;
  if (!dopt.solver && !ev.options().prescribed) dopt.solver = &ev.solver();
  dopt.recovery_tol = ev.options().recovery_tol;

  RunResult res;
  const double t0 = s.t;
  auto record = [&](const EvolutionState& st) -> bool {
    DiagnosticsRecord r;
    try {
      r = compute_diagnostics(st.G, st.Gamma, st.velocity.u_r, st.velocity.u_z, st.frame, dopt);
    } catch (const std::out_of_range&) {
      res.halt_reason = "frame";
      return false;
    }
    res.records.push_back(r);
    if (on_record) on_record(r);
    if (!(r.E <= opt.E_cap) && res.first_exit.empty()) {
      res.first_exit = r.dominant_component();
      res.first_exit_time = r.t;
      if (opt.halt_on_cap) {
        res.halt_reason = "E_cap";
        return false;
      }
    }
    return true;
  };

  const double eps_t = 1e-12 * std::max(1.0, opt.t_final);
  bool go = record(s);
  int next_record = 1;
  double sigma = res.records.empty() ? 0.0 : res.records.back().sigma;
  while (go) {
    if (s.t - t0 >= opt.t_final - eps_t) {
      res.halt_reason = "t_final";
      break;
    }
    if (std::abs(res.strain_integral) >= opt.strain_budget) {
      res.halt_reason = "strain_budget";
      break;
    }
    const double t_rec = t0 + next_record * opt.record_interval;
    double dt = std::min({opt.dt_max, ev.cfl_dt(s), t_rec - s.t, t0 + opt.t_final - s.t});
    if (sigma != 0.0) dt = std::min(dt, opt.sigma_dt_max / std::abs(sigma));
    EvolutionState next;
    while (true) {
      if (dt < opt.dt_min) {
        res.halt_reason = "cfl_floor";
        go = false;
        break;
      }
      try {
        next = ev.step(s, dt);
        break;
      } catch (const StepError&) {
        dt *= 0.5;
      }
    }
    if (!go) break;
    sigma = ev.last_step_sigma();
    if (std::abs(sigma) * dt > opt.sigma_dt_max * (1.0 + 1e-9) && dt > opt.dt_min) {
      // strain grew within the step: redo with a smaller step
      dt = opt.sigma_dt_max / std::abs(sigma);
      next = ev.step(s, dt);
      sigma = ev.last_step_sigma();
    }
    res.strain_integral += sigma * dt;
    ++res.steps;
    s = std::move(next);
    if (!s.frame.is_valid()) {
      res.halt_reason = "frame";
      break;
    }
    if (s.t >= t_rec - eps_t) {
      ++next_record;
      go = record(s);
      if (go) sigma = res.records.back().sigma;
    } else if (std::abs(s.t - t0 - opt.t_final) <= eps_t) {
      go = record(s);
    }
  }
  res.final_state = std::move(s);
  return res;
}

/// Monomial x^p y^q of the swirl jet.
using ModeKey = std::pair<int, int>;

struct ModeState {
  double sigma = 1.0;
  double lambda = 1.0;
  std::map<ModeKey, double> c;  // must contain (1,2)

  double b() const { return c.at({1, 2}); }

  /// Active mode, neutral tower (1,4), (1,6) and damped samples (2,2), (3,2).
  static ModeState standard(double sigma, double lambda, double b, double others = 1.0) {
    ModeState m;
    m.sigma = sigma;
    m.lambda = lambda;
    m.c = {{{1, 2}, b}, {{1, 4}, others}, {{1, 6}, others}, {{2, 2}, others}, {{3, 2}, others}};
    return m;
  }
};

struct ModeSnapshot {
  double t = 0.0, lambda = 0.0, sigma = 0.0;
  std::map<ModeKey, double> c, R;
};

/// Scale-weighted ratio |c_pq| lambda^(p+q) / (|b| lambda^3).
inline double mode_ratio(const std::map<ModeKey, double>& c, double lambda, ModeKey k) {
  const double b = c.at({1, 2});
  return std::abs(c.at(k)) * std::pow(lambda, k.first + k.second) / (std::abs(b) * std::pow(lambda, 3));
}

/// RK4 on log|c_pq| and log lambda: d log|c_pq|/dt = (q - p) sigma,
/// d log lambda/dt = -sigma. Every mode shares the same quadrature of sigma,
/// so the ratios R_pq carry no integrator drift. Zero coefficients stay zero.
/// sigma_of_t, when set, replaces the frozen m.sigma.
inline std::vector<ModeSnapshot> mode_simulate(const ModeState& m, double T, double dt,
                                               const std::function<double(double)>& sigma_of_t = {}) {
  for (ModeKey k : {ModeKey{1, 2}, ModeKey{1, 4}, ModeKey{1, 6}, ModeKey{2, 2}, ModeKey{3, 2}})
    if (!m.c.count(k))
      throw std::invalid_argument("mode set must contain (1,2), (1,4), (1,6), (2,2), (3,2)");
  if (!(T >= 0.0) || !(dt > 0.0)) throw std::invalid_argument("need T >= 0 and dt > 0");
  if (m.b() == 0.0) throw std::invalid_argument("active coefficient b must be nonzero");
  if (!(m.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  auto sig = [&](double t) { return sigma_of_t ? sigma_of_t(t) : m.sigma; };

  // S(t) = int_0^t sigma; log|c_pq|(t) = log|c_pq|(0) + (q - p) S(t)
  double S = 0.0;
  auto snapshot = [&](double t) {
    ModeSnapshot sn;
    sn.t = t;
    sn.sigma = sig(t);
    sn.lambda = m.lambda * std::exp(-S);
    for (const auto& [k, c0] : m.c)
      sn.c[k] = c0 == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(c0)) + (k.second - k.first) * S), c0);
    for (const auto& kv : m.c) sn.R[kv.first] = mode_ratio(sn.c, sn.lambda, kv.first);
    return sn;
  };

  std::vector<ModeSnapshot> out{snapshot(0.0)};
  const int steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  double t = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double h = std::min(dt, T - t);
    if (std::abs(sig(t)) * h > 0.1 + 1e-12)
      throw std::invalid_argument("mode step violates sigma dt <= 0.1");
    // RK4 with a state-independent right-hand side
    S += h / 6.0 * (sig(t) + 4.0 * sig(t + 0.5 * h) + sig(t + h));
    t += h;
    out.push_back(snapshot(t));
  }
  return out;
}

}  // namespace qel
