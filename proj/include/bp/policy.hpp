#pragma once

#include <functional>
#include <span>
#include <variant>

#include "bp/belief.hpp"
#include "bp/model.hpp"

namespace bp {

/// Charging action a(y | x, s): for every joint state a distribution over
/// consumption, with mass only on the feasible set 𝒴∘(s - x).
struct ActionA {
  int nx = 0, ns = 0, ny = 0;
  MatrixXd t;  // ((x * ns + s), y)

  ActionA() = default;
  ActionA(int nx, int ns, int ny)
      : nx(nx), ns(ns), ny(ny), t(MatrixXd::Zero(nx * ns, ny)) {}

  double operator()(int y, int x, int s) const { return t(x * ns + s, y); }
  double& at(int y, int x, int s) { return t(x * ns + s, y); }
};

/// Difference-conditioned action b(y | w) with mass only on 𝒴∘(w).
struct ActionB {
  Alphabet w;  // {-mx .. ms}
  MatrixXd t;  // (w index, y)

  ActionB() = default;
  ActionB(Alphabet w, int ny) : w(w), t(MatrixXd::Zero(w.size(), ny)) {}

  int ny() const { return static_cast<int>(t.cols()); }
  double operator()(int y, int wv) const { return t(w.index(wv), y); }
  double& at(int y, int wv) { return t(w.index(wv), y); }
};

/// Throws SpecError unless every row of a puts mass exactly 1 on its
/// feasible set (within tol).
void validate_action(const SystemSpec& spec, const ActionA& a,
                     double tol = 1e-9);
void validate_action(const SystemSpec& spec, const ActionB& b,
                     double tol = 1e-9);

// ----------------------------------------------------------------------
// Policy taxonomy. Callback policies must be pure functions of their
// declared arguments; table/functional policies are immutable values.
// ----------------------------------------------------------------------

/// Fully history-dependent randomized policy q_t(y | x^t, s^t, y^{t-1}).
/// Only the brute-force evaluator handles this class.
struct HistoryPolicy {
  std::function<VectorXd(std::span<const int> x_hist, std::span<const int> s_hist,
                         std::span<const int> y_hist)>
      f;
};

/// q_t(y | x_t, s_t, y^{t-1}): history enters only through past consumption.
struct MemoryCompressedPolicy {
  std::function<VectorXd(int x, int s, std::span<const int> y_hist)> f;
};

/// Belief-Markov policy q_t(y | x_t, s_t, π_t); t is 1-based.
struct BeliefPolicy {
  std::function<ActionA(const Belief& pi, int t)> f;
};

/// Difference-belief policy q_t(y | w_t, ξ_t) for i.i.d. demand; t is 1-based.
struct DifferencePolicy {
  std::function<ActionB(const XiBelief& xi, int t)> f;
};

/// Time-homogeneous memoryless policy: one fixed b(y|w).
struct ConstantB {
  ActionB b;
};

using Policy = std::variant<HistoryPolicy, MemoryCompressedPolicy, BeliefPolicy,
                            DifferencePolicy, ConstantB>;

// ----------------------------------------------------------------------
// Constructors
// ----------------------------------------------------------------------

/// The invariant policy for a battery law θ: b(y|w) = P_X(y) θ(y+w) / ξ(w)
/// for y in 𝒳 ∩ 𝒴∘(w), where ξ is the law of S - X. Rows with ξ(w) = 0 are
/// unreachable; they are filled with the smallest feasible y so the table
/// stays total and simulation-safe (zero-probability conditioning never
/// affects leakage).
ConstantB structured_policy(const SystemSpec& spec, const Pmf& theta,
                            const Pmf& demand);
ConstantB structured_policy(const SystemSpec& spec, const Pmf& theta);

/// Benchmark policy: uniform over the feasible consumptions of each w.
ConstantB equiprobable_policy(const SystemSpec& spec);

/// Memoryless passthrough y = x (maximum leakage; useful as a baseline).
MemoryCompressedPolicy passthrough_policy(const SystemSpec& spec);

/// ã(y|x,s) = b(y|s-x).
ActionA lift_to_action_a(const SystemSpec& spec, const ActionB& b);

/// b(y|w) = Σ_{s-x=w} a(y|x,s) π(x,s) / ξ(w). Rows with ξ(w)=0 get the
/// deterministic smallest-feasible fill.
ActionB project_to_b(const SystemSpec& spec, const ActionA& a,
                     const Belief& pi);

/// The memory-compressed policy equivalent to a history-dependent one up to
/// horizon T: q_b(y | x_t, s_t, y^{t-1}) = P^{q_a}(Y_t = y | x_t, s_t,
/// y^{t-1}). Matches the per-step marginals of q_a and never leaks more.
/// Cost is exponential in T; intended for small adversarial instances.
MemoryCompressedPolicy compress_history_policy(const SystemSpec& spec,
                                               const HistoryPolicy& qa, int T);

/// Samples a trajectory of the closed loop (demand, battery, policy).
/// Deterministic given the seed; throws SpecError if the policy emits an
/// infeasible consumption (message carries the step index).
Trace simulate(const SystemSpec& spec, const Policy& policy, int horizon,
               std::uint64_t seed);

}  // namespace bp
