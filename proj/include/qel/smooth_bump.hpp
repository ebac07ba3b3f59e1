#pragma once

#include <cmath>

namespace qel {

/// C-infinity step built from exp(-1/t) glue: 0 for t <= 0, 1 for t >= 1,
/// strictly increasing in between.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

/// Even plateau bump: 1 on [-inner, inner], 0 outside (-outer, outer).
inline double plateau_bump(double s, double inner, double outer) {
  const double u = std::abs(s);
  if (u <= inner) return 1.0;
  if (u >= outer) return 0.0;
  return 1.0 - smooth_step((u - inner) / (outer - inner));
}

/// Data cutoff profile: 1 on [-2,2], support in (-4,4).
inline double data_cutoff_profile(double s) { return plateau_bump(s, 2.0, 4.0); }

/// Projection window profile: 1 on [-1,1], support in (-2,2).
inline double window_profile(double s) { return plateau_bump(s, 1.0, 2.0); }

}  // namespace qel
