#pragma once

#include <vector>

namespace bp {

/// Continuous model: demand uniform on [0,1], battery capacity B >= 2.
/// Closed forms from the entropy-power lower bound and the uniform-battery
/// achievable rate; both in bits.
struct ContinuousBoundReport {
  double B = 0.0;
  double lower = 0.0;
  double achievable = 0.0;
  double gap = 0.0;
};

/// Entropy-power lower bound (1/2) log2(1 + 1/B^2). Requires B >= 2.
double epi_lower_bound(double B);

/// Rate 1 / (2 B ln 2) achieved by the uniform battery distribution.
double uniform_achievable_rate(double B);

ContinuousBoundReport continuous_bounds(double B);

struct QuadratureCheck {
  double estimate = 0.0;  // h(ξ) - log2(B) by adaptive Simpson
  double closed_form = 0.0;
  bool sufficient = false;  // false when too few nodes were allowed
};

/// Recomputes the achievable rate by integrating the trapezoidal difference
/// density numerically; an independent check of the closed form. `nodes`
/// bounds the number of subdivisions (a handful is flagged insufficient).
QuadratureCheck quadrature_rate_check(double B, int nodes = 1 << 16);

/// Sweep rows for B in [lo, hi] with the given step.
std::vector<ContinuousBoundReport> bounds_sweep(double lo, double hi,
                                                double step);

}  // namespace bp
