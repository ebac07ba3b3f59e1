#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <vector>

namespace qel {

struct QuadratureRule {
  std::vector<double> nodes, weights;
};

/// Composite Gauss-Legendre rule of order N on `panels` equal panels of [a, b].
template <unsigned N = 16>
QuadratureRule gauss_panels(double a, double b, int panels = 1) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  QuadratureRule q;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h, half = 0.5 * h;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] == 0.0) {
        q.nodes.push_back(mid);
        q.weights.push_back(w[k] * half);
        continue;
      }
      q.nodes.push_back(mid - half * x[k]);
      q.weights.push_back(w[k] * half);
      q.nodes.push_back(mid + half * x[k]);
      q.weights.push_back(w[k] * half);
    }
  }
  return q;
}

/// Concatenation of rules on adjacent intervals given by breakpoints.
template <unsigned N = 16>
QuadratureRule gauss_breakpoints(const std::vector<double>& breaks, int panels_each = 1) {
  QuadratureRule q;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const auto part = gauss_panels<N>(breaks[s], breaks[s + 1], panels_each);
    q.nodes.insert(q.nodes.end(), part.nodes.begin(), part.nodes.end());
    q.weights.insert(q.weights.end(), part.weights.begin(), part.weights.end());
  }
  return q;
}

}  // namespace qel
