#pragma once

#include <string>

#include "bp/policy.hpp"

namespace bp {

/// Per-step information leakage and its time average L_T. All values are in
/// bits; convert with to_nats() at the reporting edge.
struct LeakageReport {
  int horizon = 0;
  VectorXd per_step;        // I(X_t, S_t; Y_t | Y^{t-1}) in bits
  double total_rate = 0.0;  // L_T = mean(per_step)
  std::string method;       // "exact" | "monte_carlo"
  double ci_halfwidth = 0.0;  // 1.96 * stderr (Monte Carlo only)
  long sample_count = 0;
  double pruned_mass = 0.0;  // branch probability dropped by exact pruning
};

struct ExactOptions {
  std::size_t node_budget = 10'000'000;
  double prune_below = 1e-15;  // branch probabilities below this are dropped
};

/// Per-step cost I(a; π) = I(X,S; Y) for (X,S) ~ π and Y ~ a(·|X,S), in bits.
double mi_of_action(const ActionA& a, const Belief& pi);

/// I(b; ξ) = I(W; Y) for W ~ ξ and Y ~ b(·|W), in bits. For an invariant
/// policy this is the whole leakage rate.
double iid_single_letter_rate(const ActionB& b, const XiBelief& xi);

/// Exact L_T by enumerating the consumption-history tree with belief
/// propagation, weighting the per-branch cost I(a_t; π_t). Supports every
/// policy class except fully history-dependent ones. Throws
/// BudgetExceededError when the tree exceeds the node budget.
LeakageReport exact_leakage(const SystemSpec& spec, const Policy& policy, int T,
                            const ExactOptions& opt = {});

/// Unbiased Monte Carlo estimate of L_T: samples consumption paths and
/// averages the analytic per-step costs along them (the per-step cost is
/// integrated exactly given the path, which keeps the variance low).
/// Deterministic given the seed, for any thread count.
LeakageReport monte_carlo_leakage(const SystemSpec& spec, const Policy& policy,
                                  int T, long samples, std::uint64_t seed);

}  // namespace bp
