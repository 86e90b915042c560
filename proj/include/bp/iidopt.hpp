#pragma once

#include <optional>

#include "bp/policy.hpp"

namespace bp {

/// Solution of the single-letter problem J* = min_θ I(S - X; X) over battery
/// laws θ, together with the induced difference law, the invariant policy
/// achieving it, and the optimizer's certificate values.
struct SingleLetterSolution {
  Pmf theta_star;
  XiBelief xi_star;
  double J_star_bits = 0.0;
  ActionB b_star;
  long iterations = 0;
  double gradient_norm = 0.0;  // tangent-projected gradient at theta_star
  bool converged = false;
};

/// I(S - X; X) = H(S - X) - H(S) in bits, for S ~ θ and X ~ demand,
/// independent.
double iid_objective(const Pmf& theta, const Pmf& demand);

/// Analytic gradient d/dθ(s) = log2 θ(s) - Σ_x P_X(x) log2 ξ(s - x).
/// Requires θ strictly interior (log of a zero entry otherwise).
VectorXd iid_gradient(const Pmf& theta, const Pmf& demand);

struct MinimizeOptions {
  double tol = 1e-10;       // stop when the projected gradient norm is below
  long max_iters = 200000;
  std::optional<VectorXd> init;  // default: uniform
};

/// Exponentiated-gradient descent on the simplex. The objective is strictly
/// convex, so the minimizer is unique and interior; iterates stay interior
/// by construction.
SingleLetterSolution minimize_leakage(const Pmf& demand, Alphabet battery,
                                      const MinimizeOptions& opt = {});
SingleLetterSolution minimize_leakage(const SystemSpec& spec,
                                      const MinimizeOptions& opt = {});

struct PropertyReport {
  bool symmetry_applicable = false;  // demand pmf symmetric
  bool symmetry_ok = false;
  double symmetry_error = 0.0;  // max |θ*(s) - θ*(ms - s)|
  bool unimodal_applicable = false;  // demand symmetric and unimodal
  bool unimodal_ok = false;
  double unimodal_error = 0.0;  // worst violation of the interleaved chain
};

/// Checks the symmetry of θ* under symmetric demand and the interleaved
/// almost-symmetric-unimodal ordering around ⌊ms/2⌋ under symmetric unimodal
/// demand. Inapplicable checks are reported as skipped, not failed.
PropertyReport certify_properties(const SingleLetterSolution& sol,
                                  const Pmf& demand, double sym_tol = 1e-6,
                                  double chain_slack = 1e-8);

struct ConvexityReport {
  int trials = 0;
  int violations = 0;
  double min_slack = 0.0;  // smallest chord-minus-function gap observed
};

/// Strict-convexity probe: random interior pairs must satisfy
/// f(λθ₁ + (1-λ)θ₂) < λf(θ₁) + (1-λ)f(θ₂), strictly when the pair is
/// separated.
ConvexityReport convexity_probe(const Pmf& demand, Alphabet battery,
                                int trials, std::uint64_t seed);

}  // namespace bp
