#include "bp/bounds.hpp"

#include <cmath>
#include <functional>

#include "bp/types.hpp"

namespace bp {

namespace {

void require_capacity(double B) {
  if (!(B >= 2.0)) throw SpecError("battery capacity must satisfy B >= 2");
}

// composite Simpson on [lo, hi] with n panels (n even)
double simpson(const std::function<double(double)>& f, double lo, double hi,
               int n) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

double epi_lower_bound(double B) {
  require_capacity(B);
  return 0.5 * std::log2(1.0 + 1.0 / (B * B));
}

double uniform_achievable_rate(double B) {
  require_capacity(B);
  return 1.0 / (2.0 * B * kLn2);
}

ContinuousBoundReport continuous_bounds(double B) {
  ContinuousBoundReport r;
  r.B = B;
  r.lower = epi_lower_bound(B);
  r.achievable = uniform_achievable_rate(B);
  r.gap = r.achievable - r.lower;
  return r;
}

QuadratureCheck quadrature_rate_check(double B, int nodes) {
  require_capacity(B);
  QuadratureCheck check;
  check.closed_form = uniform_achievable_rate(B);
  check.sufficient = nodes >= 64;
  if (!check.sufficient) return check;

  // W = S - X with S ~ Unif[0,B], X ~ Unif[0,1] has the trapezoidal density
  // ξ(w) = (1+w)/B on [-1,0], 1/B on [0,B-1], (B-w)/B on [B-1,B].
  // h(ξ) - log2 B: the flat piece integrates exactly; the two ramps are
  // identical and integrated numerically.
  auto ramp = [B](double u) {
    const double v = u / B;
    return v <= 0.0 ? 0.0 : -v * std::log2(v);
  };
  const double ramps = 2.0 * simpson(ramp, 0.0, 1.0, nodes);
  const double flat = (B - 1.0) / B * std::log2(B);
  check.estimate = ramps + flat - std::log2(B);
  return check;
}

std::vector<ContinuousBoundReport> bounds_sweep(double lo, double hi,
                                                double step) {
  if (step <= 0.0) throw SpecError("sweep step must be positive");
  std::vector<ContinuousBoundReport> rows;
  for (double B = lo; B <= hi + 1e-12; B += step)
    rows.push_back(continuous_bounds(B));
  return rows;
}

}  // namespace bp
