#include "bp/leakage.hpp"

#include <cmath>

#include "bp/parallel.hpp"
#include "bp/rng.hpp"

namespace bp {

double mi_of_action(const ActionA& a, const Belief& pi) {
  const VectorXd py = predicted_output(pi, a);
  double mi = 0.0;
  for (int x = 0; x < a.nx; ++x)
    for (int s = 0; s < a.ns; ++s) {
      const double mass = pi.joint(x, s);
      if (mass == 0.0) continue;
      for (int y = 0; y < a.ny; ++y) {
        const double p = a(y, x, s);
        if (p > 0.0) mi += mass * p * std::log2(p / py[y]);
      }
    }
  return std::max(mi, 0.0);
}

double iid_single_letter_rate(const ActionB& b, const XiBelief& xi) {
  const VectorXd py = predicted_output(xi, b);
  double mi = 0.0;
  for (int wi = 0; wi < b.w.size(); ++wi) {
    const double mass = xi.xi[wi];
    if (mass == 0.0) continue;
    for (int y = 0; y < b.ny(); ++y) {
      const double p = b.t(wi, y);
      if (p > 0.0) mi += mass * p * std::log2(p / py[y]);
    }
  }
  return std::max(mi, 0.0);
}

namespace {

// The evaluator runs in difference coordinates when the policy is
// ξ-measurable and the demand is i.i.d.; otherwise in joint coordinates.
bool xi_evaluable(const SystemSpec& spec, const Policy& policy) {
  return spec.iid && (std::holds_alternative<DifferencePolicy>(policy) ||
                      std::holds_alternative<ConstantB>(policy));
}

ActionB action_of_xi(const Policy& policy, const XiBelief& xi, int t) {
  if (const auto* c = std::get_if<ConstantB>(&policy)) return c->b;
  return std::get<DifferencePolicy>(policy).f(xi, t);
}

ActionA action_of_pi(const SystemSpec& spec, const Policy& policy,
                     const Belief& pi, std::span<const int> y_hist, int t) {
  return std::visit(
      [&](const auto& p) -> ActionA {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MemoryCompressedPolicy>) {
          ActionA a(spec.demand.size(), spec.battery.size(),
                    spec.consumption.size());
          for (int x = 0; x < a.nx; ++x)
            for (int s = 0; s < a.ns; ++s) {
              const VectorXd row = p.f(x, s, y_hist);
              for (int y = 0; y < a.ny; ++y) a.at(y, x, s) = row[y];
            }
          return a;
        } else if constexpr (std::is_same_v<P, BeliefPolicy>) {
          return p.f(pi, t);
        } else if constexpr (std::is_same_v<P, DifferencePolicy>) {
          return lift_to_action_a(spec,
                                  p.f(xi_from_belief(pi, spec.difference()), t));
        } else if constexpr (std::is_same_v<P, ConstantB>) {
          return lift_to_action_a(spec, p.b);
        } else {
          throw SpecError(
              "history-dependent policies have no belief recursion; evaluate "
              "them with the brute-force oracle on small instances");
        }
      },
      policy);
}

struct ExactAccumulator {
  VectorXd per_step;
  double pruned = 0.0;
  std::size_t nodes = 0;
};

void exact_walk_xi(const SystemSpec& spec, const Policy& policy, int T,
                   const ExactOptions& opt, const XiBelief& xi, double prob,
                   int t, ExactAccumulator& acc) {
  if (t > T) return;
  if (++acc.nodes > opt.node_budget)
    throw BudgetExceededError(acc.nodes, opt.node_budget);
  const ActionB b = action_of_xi(policy, xi, t);
  acc.per_step[t - 1] += prob * iid_single_letter_rate(b, xi);
  if (t == T) return;
  const VectorXd py = predicted_output(xi, b);
  for (int y = 0; y < py.size(); ++y) {
    const double branch = prob * py[y];
    if (branch <= 0.0) continue;
    if (branch < opt.prune_below) {
      acc.pruned += branch;
      continue;
    }
    exact_walk_xi(spec, policy, T, opt, xi_update(xi, y, b, spec.demand_marginal),
                  branch, t + 1, acc);
  }
}

void exact_walk_pi(const SystemSpec& spec, const Policy& policy, int T,
                   const ExactOptions& opt, const TransitionMatrix& Q,
                   const Belief& pi, std::vector<int>& y_hist, double prob,
                   int t, ExactAccumulator& acc) {
  if (t > T) return;
  if (++acc.nodes > opt.node_budget)
    throw BudgetExceededError(acc.nodes, opt.node_budget);
  const ActionA a = action_of_pi(spec, policy, pi, y_hist, t);
  acc.per_step[t - 1] += prob * mi_of_action(a, pi);
  if (t == T) return;
  const VectorXd py = predicted_output(pi, a);
  for (int y = 0; y < py.size(); ++y) {
    const double branch = prob * py[y];
    if (branch <= 0.0) continue;
    if (branch < opt.prune_below) {
      acc.pruned += branch;
      continue;
    }
    y_hist.push_back(y);
    exact_walk_pi(spec, policy, T, opt, Q, filter_joint(pi, y, a, Q), y_hist,
                  branch, t + 1, acc);
    y_hist.pop_back();
  }
}

}  // namespace

LeakageReport exact_leakage(const SystemSpec& spec, const Policy& policy, int T,
                            const ExactOptions& opt) {
  spec.validate();
  if (T <= 0) throw SpecError("horizon must be positive");
  LeakageReport report;
  report.horizon = T;
  report.method = "exact";
  ExactAccumulator acc;
  acc.per_step = VectorXd::Zero(T);
  if (xi_evaluable(spec, policy)) {
    const XiBelief xi1 = theta_to_xi(spec.initial_battery, spec.demand_marginal);
    exact_walk_xi(spec, policy, T, opt, xi1, 1.0, 1, acc);
  } else {
    const Belief pi1 = Belief::product(spec.initial_demand, spec.initial_battery);
    std::vector<int> y_hist;
    exact_walk_pi(spec, policy, T, opt, spec.kernel(), pi1, y_hist, 1.0, 1, acc);
  }
  report.per_step = acc.per_step;
  report.total_rate = acc.per_step.mean();
  report.pruned_mass = acc.pruned;
  return report;
}

LeakageReport monte_carlo_leakage(const SystemSpec& spec, const Policy& policy,
                                  int T, long samples, std::uint64_t seed) {
  spec.validate();
  if (T <= 0) throw SpecError("horizon must be positive");
  if (samples <= 0) throw SpecError("need at least one sample path");
  if (std::holds_alternative<HistoryPolicy>(policy))
    throw SpecError(
        "history-dependent policies have no belief recursion; evaluate "
        "them with the brute-force oracle on small instances");

  const bool in_xi = xi_evaluable(spec, policy);
  const XiBelief xi1 = theta_to_xi(spec.initial_battery, spec.initial_demand);
  const Belief pi1 = Belief::product(spec.initial_demand, spec.initial_battery);
  const TransitionMatrix Q = spec.kernel();

  const int n = static_cast<int>(samples);
  VectorXd path_mean(n);
  MatrixXd path_steps;  // lazily sized; summed sequentially for determinism
  path_steps.resize(n, T);

  parallel_for(n, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    double total = 0.0;
    if (in_xi) {
      XiBelief xi = xi1;
      for (int t = 1; t <= T; ++t) {
        const ActionB b = action_of_xi(policy, xi, t);
        const double cost = iid_single_letter_rate(b, xi);
        path_steps(i, t - 1) = cost;
        total += cost;
        const VectorXd py = predicted_output(xi, b);
        const int y = rng.sample(py);
        if (t < T) xi = xi_update(xi, y, b, spec.demand_marginal);
      }
    } else {
      Belief pi = pi1;
      std::vector<int> y_hist;
      for (int t = 1; t <= T; ++t) {
        const ActionA a = action_of_pi(spec, policy, pi, y_hist, t);
        const double cost = mi_of_action(a, pi);
        path_steps(i, t - 1) = cost;
        total += cost;
        const VectorXd py = predicted_output(pi, a);
        const int y = rng.sample(py);
        y_hist.push_back(y);
        if (t < T) pi = filter_joint(pi, y, a, Q);
      }
    }
    path_mean[i] = total / T;
  });

  LeakageReport report;
  report.horizon = T;
  report.method = "monte_carlo";
  report.sample_count = samples;
  report.per_step = path_steps.colwise().mean().transpose();
  report.total_rate = path_mean.mean();
  if (n > 1) {
    const double var =
        (path_mean.array() - report.total_rate).square().sum() / (n - 1);
    report.ci_halfwidth = 1.96 * std::sqrt(var / n);
  }
  return report;
}

}  // namespace bp
