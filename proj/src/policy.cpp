#include "bp/policy.hpp"

#include <map>
#include <memory>

#include "bp/rng.hpp"

namespace bp {

void validate_action(const SystemSpec& spec, const ActionA& a, double tol) {
  if (a.nx != spec.demand.size() || a.ns != spec.battery.size() ||
      a.ny != spec.consumption.size())
    throw SpecError("action table shape mismatch with spec");
  for (int x = 0; x < a.nx; ++x)
    for (int s = 0; s < a.ns; ++s) {
      const YRange r = feasible_outputs(spec, s - x);
      double on = 0.0, off = 0.0;
      for (int y = 0; y < a.ny; ++y) {
        if (a(y, x, s) < -tol)
          throw SpecError("action: negative probability");
        (r.contains(y) ? on : off) += a(y, x, s);
      }
      if (std::abs(on - 1.0) > tol || off > tol)
        throw SpecError("action: mass off the feasible set at (x=" +
                        std::to_string(x) + ", s=" + std::to_string(s) + ")");
    }
}

void validate_action(const SystemSpec& spec, const ActionB& b, double tol) {
  if (b.w != spec.difference() || b.ny() != spec.consumption.size())
    throw SpecError("action table shape mismatch with spec");
  for (int wi = 0; wi < b.w.size(); ++wi) {
    const int w = b.w.value(wi);
    const YRange r = feasible_outputs(spec, w);
    double on = 0.0, off = 0.0;
    for (int y = 0; y < b.ny(); ++y) {
      if (b(y, w) < -tol) throw SpecError("action: negative probability");
      (r.contains(y) ? on : off) += b(y, w);
    }
    if (std::abs(on - 1.0) > tol || off > tol)
      throw SpecError("action: mass off the feasible set at w=" +
                      std::to_string(w));
  }
}

ConstantB structured_policy(const SystemSpec& spec, const Pmf& theta,
                            const Pmf& demand) {
  const Alphabet wa = spec.difference();
  const XiBelief xi = theta_to_xi(theta, demand);
  ActionB b(wa, spec.consumption.size());
  for (int wi = 0; wi < wa.size(); ++wi) {
    const int w = wa.value(wi);
    const YRange r = feasible_outputs(spec, w);
    if (xi.xi[wi] > 0.0) {
      for (int y = r.lo; y <= r.hi; ++y) {
        if (!demand.support.contains(y)) continue;  // y restricted to 𝒳
        b.at(y, w) = demand(y) * theta(y + w) / xi.xi[wi];
      }
    } else {
      b.at(r.lo, w) = 1.0;  // unreachable row: deterministic fill
    }
  }
  return ConstantB{std::move(b)};
}

ConstantB structured_policy(const SystemSpec& spec, const Pmf& theta) {
  if (!spec.iid)
    throw SpecError("structured policy requires i.i.d. demand");
  return structured_policy(spec, theta, spec.demand_marginal);
}

ConstantB equiprobable_policy(const SystemSpec& spec) {
  const Alphabet wa = spec.difference();
  ActionB b(wa, spec.consumption.size());
  for (int wi = 0; wi < wa.size(); ++wi) {
    const int w = wa.value(wi);
    const YRange r = feasible_outputs(spec, w);
    for (int y = r.lo; y <= r.hi; ++y) b.at(y, w) = 1.0 / r.size();
  }
  return ConstantB{std::move(b)};
}

MemoryCompressedPolicy passthrough_policy(const SystemSpec& spec) {
  const int ny = spec.consumption.size();
  // y = x is always feasible: s - x + x = s stays in the battery alphabet.
  return MemoryCompressedPolicy{
      [ny](int x, int /*s*/, std::span<const int> /*y_hist*/) {
        VectorXd row = VectorXd::Zero(ny);
        row[x] = 1.0;
        return row;
      }};
}

ActionA lift_to_action_a(const SystemSpec& spec, const ActionB& b) {
  ActionA a(spec.demand.size(), spec.battery.size(), spec.consumption.size());
  for (int x = 0; x < a.nx; ++x)
    for (int s = 0; s < a.ns; ++s)
      for (int y = 0; y < a.ny; ++y) a.at(y, x, s) = b(y, s - x);
  return a;
}

ActionB project_to_b(const SystemSpec& spec, const ActionA& a,
                     const Belief& pi) {
  const Alphabet wa = spec.difference();
  ActionB b(wa, spec.consumption.size());
  const XiBelief xi = xi_from_belief(pi, wa);
  for (int wi = 0; wi < wa.size(); ++wi) {
    const int w = wa.value(wi);
    if (xi.xi[wi] > 0.0) {
      for (int x = 0; x < a.nx; ++x) {
        const int s = w + x;
        if (s < 0 || s >= a.ns) continue;
        for (int y = 0; y < a.ny; ++y)
          b.at(y, w) += a(y, x, s) * pi.joint(x, s) / xi.xi[wi];
      }
    } else {
      b.at(feasible_outputs(spec, w).lo, w) = 1.0;
    }
  }
  return b;
}

namespace {

// Dense per-step conditionals P(y_t | x_t, s_t, y^{t-1}) accumulated by
// enumerating the closed-loop joint under a history policy.
struct CompressedTables {
  int ny = 0;
  // key: (t-1, x, s, y^{t-1} encoded base ny+1)
  std::map<std::tuple<int, int, int, long long>, VectorXd> rows;
};

long long encode_hist(std::span<const int> ys, int base) {
  long long code = 0;
  for (int y : ys) code = code * base + (y + 1);
  return code;
}

void enumerate_history(const SystemSpec& spec, const HistoryPolicy& qa, int T,
                       std::vector<int>& xs, std::vector<int>& ss,
                       std::vector<int>& ys, double prob,
                       CompressedTables& out) {
  const int t = static_cast<int>(xs.size());
  if (t == static_cast<int>(ys.size())) {
    if (t >= T) return;
    const VectorXd px = t == 0
                            ? spec.initial_demand.probs
                            : spec.kernel().rows.row(xs.back()).transpose();
    for (int x = 0; x < px.size(); ++x) {
      if (px[x] == 0.0) continue;
      xs.push_back(x);
      enumerate_history(spec, qa, T, xs, ss, ys, prob * px[x], out);
      xs.pop_back();
    }
    return;
  }
  // choose y_t given (x^t, s^t, y^{t-1})
  const int x = xs.back(), s = ss.back();
  const VectorXd row = qa.f(xs, ss, std::span<const int>(ys));
  const auto key = std::make_tuple(t - 1, x, s,
                                   encode_hist(ys, out.ny + 1));
  auto [it, inserted] = out.rows.try_emplace(key, VectorXd::Zero(out.ny));
  it->second += prob * row;
  for (int y = 0; y < row.size(); ++y) {
    if (row[y] == 0.0) continue;
    ys.push_back(y);
    ss.push_back(s + y - x);
    enumerate_history(spec, qa, T, xs, ss, ys, prob * row[y], out);
    ss.pop_back();
    ys.pop_back();
  }
}

}  // namespace

MemoryCompressedPolicy compress_history_policy(const SystemSpec& spec,
                                               const HistoryPolicy& qa,
                                               int T) {
  auto tables = std::make_shared<CompressedTables>();
  tables->ny = spec.consumption.size();
  std::vector<int> xs, ss, ys;
  for (int s1 = 0; s1 < spec.battery.size(); ++s1) {
    const double p1 = spec.initial_battery.probs[s1];
    if (p1 == 0.0) continue;
    ss.push_back(s1);
    enumerate_history(spec, qa, T, xs, ss, ys, p1, *tables);
    ss.pop_back();
  }
  for (auto& [key, row] : tables->rows) {
    const double sum = row.sum();
    if (sum > 0.0) row /= sum;
  }
  const SystemSpec spec_copy = spec;
  return MemoryCompressedPolicy{
      [tables, spec_copy](int x, int s, std::span<const int> y_hist) {
        const auto key = std::make_tuple(static_cast<int>(y_hist.size()), x, s,
                                         encode_hist(y_hist, tables->ny + 1));
        const auto it = tables->rows.find(key);
        if (it != tables->rows.end() && it->second.sum() > 0.0)
          return it->second;
        // (x, s, y^{t-1}) unreachable under the source policy
        VectorXd row = VectorXd::Zero(tables->ny);
        const YRange r = feasible_outputs(spec_copy, s - x);
        for (int y = r.lo; y <= r.hi; ++y) row[y] = 1.0 / r.size();
        return row;
      }};
}

Trace simulate(const SystemSpec& spec, const Policy& policy, int horizon,
               std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Trace trace;
  if (horizon <= 0) return trace;

  const bool tracks_pi = std::holds_alternative<BeliefPolicy>(policy);
  const bool tracks_xi = std::holds_alternative<DifferencePolicy>(policy);
  if (tracks_xi && !spec.iid)
    throw SpecError("difference-belief policies require i.i.d. demand");
  Belief pi = Belief::product(spec.initial_demand, spec.initial_battery);
  XiBelief xi = theta_to_xi(spec.initial_battery, spec.initial_demand);
  const TransitionMatrix Q = spec.kernel();
  const int ny = spec.consumption.size();

  std::vector<int>& xs = trace.x;
  std::vector<int>& ss = trace.s;
  std::vector<int>& ys = trace.y;
  ss.push_back(rng.sample(spec.initial_battery.probs));
  for (int t = 1; t <= horizon; ++t) {
    const VectorXd px = t == 1 ? spec.initial_demand.probs
                               : Q.rows.row(xs.back()).transpose();
    xs.push_back(rng.sample(px));
    const int x = xs.back(), s = ss.back();

    ActionA a_t;  // only populated for belief policies
    ActionB b_t;
    VectorXd row(ny);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, HistoryPolicy>) {
            row = p.f(xs, ss, std::span<const int>(ys));
          } else if constexpr (std::is_same_v<P, MemoryCompressedPolicy>) {
            row = p.f(x, s, std::span<const int>(ys));
          } else if constexpr (std::is_same_v<P, BeliefPolicy>) {
            a_t = p.f(pi, t);
            for (int y = 0; y < ny; ++y) row[y] = a_t(y, x, s);
          } else if constexpr (std::is_same_v<P, DifferencePolicy>) {
            b_t = p.f(xi, t);
            for (int y = 0; y < ny; ++y) row[y] = b_t(y, s - x);
          } else {
            static_assert(std::is_same_v<P, ConstantB>);
            for (int y = 0; y < ny; ++y) row[y] = p.b(y, s - x);
          }
        },
        policy);

    if (row.size() != ny)
      throw SpecError("policy row has wrong size at step " + std::to_string(t));
    const YRange feas = feasible_outputs(spec, s - x);
    double mass = 0.0;
    for (int y = 0; y < ny; ++y) {
      if (row[y] < 0.0 || (!feas.contains(y) && row[y] > 1e-12))
        throw SpecError("policy emitted infeasible consumption at step " +
                        std::to_string(t));
      mass += row[y];
    }
    if (std::abs(mass - 1.0) > 1e-9)
      throw SpecError("policy row does not sum to 1 at step " +
                      std::to_string(t));

    const int y = rng.sample(row);
    ys.push_back(y);
    if (t < horizon) ss.push_back(s + y - x);
    if (tracks_pi) pi = filter_joint(pi, y, a_t, Q);
    if (tracks_xi) xi = xi_update(xi, y, b_t, spec.demand_marginal);
  }
  return trace;
}

}  // namespace bp
