#pragma once

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qel/diagnostics.hpp"
#include "qel/error.hpp"

namespace qel {

struct ComparisonState {
  double Q = 1.0, C = 1.0;
  double c = 1.0, kappa = 1.0;

  double margin() const { return C - kappa * Q * Q; }

  void validate() const {
    if (!(Q > 0.0) || !(C > 0.0)) throw std::invalid_argument("comparison state needs Q > 0 and C > 0");
    if (!(c > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("comparison constants must be positive");
    if (margin() < -1e-14 * C) throw std::invalid_argument("initial dominance C >= kappa Q^2 violated");
  }
};

enum class ComparisonModel {
  system,   // Q' = c C, C' = c Q C
  reduced,  // Q' = c kappa Q^2 (dominance saturated), C = kappa Q^2
};

struct ComparisonOptions {
  ComparisonModel model = ComparisonModel::system;
  double rtol = 1e-10;
  double Q_stop = 1e12;
  double dt_min = 1e-15;  // step collapse floor
};

struct TrajectoryPoint {
  double t = 0.0, Q = 0.0, C = 0.0;
  double margin = 0.0;       // C - kappa Q^2
  double margin_rate = 0.0;  // d/dt of the margin
};

struct ComparisonResult {
  std::vector<TrajectoryPoint> trajectory;
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::infinity();
  double bound = 0.0;  // 1 / (c kappa Q(0))
  bool bound_ok = false;
  bool dominance_preserved = true;  // margin >= 0 at every accepted step
  bool margin_nondecreasing = true;
  bool monotone = true;  // Q and C strictly increasing
  int steps = 0;
};

/// Least-squares line through (t, 1/Q) over the last decade of Q; returns the
/// zero crossing.
inline double extrapolate_inverse(const std::vector<TrajectoryPoint>& tr) {
  if (tr.size() < 2) throw std::invalid_argument("need at least two points to extrapolate");
  const double q_last = tr.back().Q;
  std::size_t first = tr.size() - 1;
  while (first > 0 && tr[first - 1].Q >= q_last / 10.0) --first;
  if (tr.size() - first < 2) first = tr.size() - 2;
  // times relative to the last point keep the normal equations well conditioned
  const double t0 = tr.back().t;
  double n = 0, st = 0, sy = 0;
  for (std::size_t k = first; k < tr.size(); ++k) {
    n += 1;
    st += tr[k].t - t0;
    sy += 1.0 / tr[k].Q;
  }
  const double tm = st / n, ym = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = first; k < tr.size(); ++k) {
    const double dt = tr[k].t - t0 - tm;
    sxx += dt * dt;
    sxy += dt * (1.0 / tr[k].Q - ym);
  }
  const double slope = sxy / sxx;
  return t0 + tm - ym / slope;
}

/// Adaptive Dormand-Prince integration of the comparison flow up to T or
/// until Q exceeds Q_stop, followed by 1/Q extrapolation.
inline ComparisonResult integrate_comparison(const ComparisonState& s0, double T,
                                             const ComparisonOptions& opt = {}) {
  s0.validate();
  if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(opt.rtol > 0.0)) throw std::invalid_argument("rtol must be positive");
  using State = std::array<double, 2>;
  namespace ode = boost::numeric::odeint;
  const double c = s0.c, kappa = s0.kappa;
  const bool reduced = opt.model == ComparisonModel::reduced;

  auto rhs = [&](const State& x, State& dx, double) {
    if (reduced) {
      dx[0] = c * kappa * x[0] * x[0];
      dx[1] = 2.0 * kappa * x[0] * dx[0];
    } else {
      dx[0] = c * x[1];
      dx[1] = c * x[0] * x[1];
    }
  };
  auto point = [&](double t, const State& x) {
    State dx;
    rhs(x, dx, t);
    return TrajectoryPoint{t, x[0], x[1], x[1] - kappa * x[0] * x[0], dx[1] - 2.0 * kappa * x[0] * dx[0]};
  };

  ComparisonResult res;
  res.bound = 1.0 / (c * kappa * s0.Q);
  State x{s0.Q, reduced ? kappa * s0.Q * s0.Q : s0.C};
  auto stepper = ode::make_controlled(opt.rtol * 1e-6, opt.rtol, ode::runge_kutta_dopri5<State>());
  double t = 0.0;
  double dt = std::min(1e-3, 1e-3 / (c * std::max(x[0], std::sqrt(x[1]))));
  res.trajectory.push_back(point(t, x));
  while (t < T && x[0] <= opt.Q_stop) {
    dt = std::min(dt, T - t);
    if (dt < opt.dt_min * std::max(1.0, t)) break;  // step collapse
    if (stepper.try_step(rhs, x, t, dt) == ode::fail) continue;
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) throw ConvergenceError("comparison flow overflowed");
    ++res.steps;
    const auto& prev = res.trajectory.back();
    auto p = point(t, x);
    if (!(p.Q > prev.Q) || !(p.C > prev.C)) res.monotone = false;
    if (p.margin < -1e-12 * p.C) res.dominance_preserved = false;
    if (p.margin < prev.margin - 1e-12 * std::abs(p.C)) res.margin_nondecreasing = false;
    res.trajectory.push_back(p);
  }
  if (x[0] > opt.Q_stop || (t < T && res.trajectory.size() > 2)) {
    res.blew_up = true;
    res.blowup_time = extrapolate_inverse(res.trajectory);
  }
  res.bound_ok = res.blowup_time <= res.bound * (1.0 + 1e-9);
  return res;
}

/// Dini band fitted from a recorded PDE series.
struct FittedConstants {
  double c_lower = 0.0, C0_upper = 0.0, kappa_max = 0.0;
  bool dominance_ok = false;  // C >= kappa_max Q^2 at every record
  bool degenerate = false;    // c_lower <= 0: the band gives no dominance
  std::size_t intervals = 0;
};

inline constexpr std::size_t min_fit_records = 10;

/// c_lower / C0_upper are the extremes of Delta Q / (Delta t C_mid) with C_mid
/// the mean of the two endpoint values; kappa_max = c_lower / (4 C0_upper).
inline FittedConstants fit_constants(const std::vector<DiagnosticsRecord>& series) {
  if (series.size() < min_fit_records)
    throw std::invalid_argument("series too short: " + std::to_string(series.size()) + " records, need " +
                                std::to_string(min_fit_records));
  for (const auto& r : series)
    if (!(r.C > 0.0)) throw std::invalid_argument("series has a record with C <= 0 at t = " + std::to_string(r.t));
  FittedConstants f;
  f.c_lower = std::numeric_limits<double>::infinity();
  f.C0_upper = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.size(); ++k) {
    const double dt = series[k].t - series[k - 1].t;
    if (!(dt > 0.0)) throw std::invalid_argument("series times must increase");
    const double ratio = (series[k].Q - series[k - 1].Q) / (dt * 0.5 * (series[k].C + series[k - 1].C));
    f.c_lower = std::min(f.c_lower, ratio);
    f.C0_upper = std::max(f.C0_upper, ratio);
    ++f.intervals;
  }
  f.degenerate = !(f.c_lower > 0.0);
  f.kappa_max = f.degenerate ? 0.0 : f.c_lower / (4.0 * f.C0_upper);
  f.dominance_ok = !f.degenerate;
  if (!f.degenerate)
    for (const auto& r : series)
      if (r.C < f.kappa_max * r.Q * r.Q) f.dominance_ok = false;
  return f;
}

}  // namespace qel
