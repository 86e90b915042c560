#include "bp/iidopt.hpp"

#include <cmath>

#include "bp/rng.hpp"

namespace bp {

double iid_objective(const Pmf& theta, const Pmf& demand) {
  const XiBelief xi = theta_to_xi(theta, demand);
  return entropy_bits(xi.xi) - entropy_bits(theta.probs);
}

VectorXd iid_gradient(const Pmf& theta, const Pmf& demand) {
  const int ms = theta.support.hi;
  const int mx = demand.support.hi;
  if ((theta.probs.array() <= 0.0).any())
    throw SpecError("gradient requires a strictly interior theta");
  const XiBelief xi = theta_to_xi(theta, demand);
  VectorXd g(ms + 1);
  for (int s = 0; s <= ms; ++s) {
    double acc = std::log2(theta.probs[s]);
    for (int x = 0; x <= mx; ++x) {
      if (demand.probs[x] == 0.0) continue;  // 0 log 0 = 0
      acc -= demand.probs[x] * std::log2(xi(s - x));
    }
    g[s] = acc;
  }
  return g;
}

namespace {

double tangent_norm(const VectorXd& g) {
  return (g.array() - g.mean()).matrix().norm();
}

// Hessian of H(ξ) - H(θ) in bits:
// (1/ln2) [ δ_{ss'}/θ(s) - Σ_x P_X(x) P_X(s' - s + x) / ξ(s - x) ].
MatrixXd iid_hessian(const Pmf& theta, const Pmf& demand) {
  const int d = theta.size();
  const int mx = demand.support.hi;
  const XiBelief xi = theta_to_xi(theta, demand);
  MatrixXd h = MatrixXd::Zero(d, d);
  for (int s = 0; s < d; ++s) {
    h(s, s) += 1.0 / theta.probs[s];
    for (int sp = 0; sp < d; ++sp)
      for (int x = 0; x <= mx; ++x) {
        const int xp = sp - s + x;
        if (xp < 0 || xp > mx) continue;
        if (demand.probs[x] == 0.0 || demand.probs[xp] == 0.0) continue;
        h(s, sp) -= demand.probs[x] * demand.probs[xp] / xi(s - x);
      }
  }
  return h / kLn2;
}

// Equality-constrained Newton step: minimize the quadratic model subject to
// Σ δ = 0. First-order line searches stall a couple of digits above the
// 1e-10 target because the objective itself is only accurate to ~1e-16;
// the polish drives the projected gradient the rest of the way down.
bool newton_polish(VectorXd& theta, const Pmf& demand, Alphabet battery,
                   double tol, int max_iters, double& pg, long& iters) {
  for (int k = 0; k < max_iters; ++k) {
    const Pmf th(battery, theta);
    const VectorXd g = iid_gradient(th, demand);
    pg = tangent_norm(g);
    if (pg < tol) return true;
    const int d = static_cast<int>(theta.size());
    MatrixXd kkt = MatrixXd::Zero(d + 1, d + 1);
    kkt.topLeftCorner(d, d) = iid_hessian(th, demand);
    kkt.topRightCorner(d, 1).setOnes();
    kkt.bottomLeftCorner(1, d).setOnes();
    VectorXd rhs(d + 1);
    rhs.head(d) = -g;
    rhs[d] = 0.0;
    const VectorXd sol_vec = kkt.fullPivLu().solve(rhs);
    VectorXd dir = sol_vec.head(d);
    if (!dir.allFinite() || (kkt * sol_vec - rhs).norm() > 1e-8 * rhs.norm())
      return false;
    double alpha = 1.0;
    while (alpha > 1e-12 && ((theta + alpha * dir).array() <= 0.0).any())
      alpha *= 0.5;
    if (alpha <= 1e-12) return false;
    VectorXd cand = theta + alpha * dir;
    cand /= cand.sum();
    const double pg_cand =
        tangent_norm(iid_gradient(Pmf(battery, cand), demand));
    ++iters;
    if (pg_cand >= pg) return false;  // model no longer trusted
    theta = cand;
    pg = pg_cand;
    if (pg < tol) return true;
  }
  return false;
}

}  // namespace

SingleLetterSolution minimize_leakage(const Pmf& demand, Alphabet battery,
                                      const MinimizeOptions& opt) {
  const int d = battery.size();
  VectorXd theta = opt.init.value_or(VectorXd::Constant(d, 1.0 / d));
  if (theta.size() != d || (theta.array() <= 0.0).any())
    throw SpecError("initial theta must be interior");
  theta /= theta.sum();

  double f = iid_objective(Pmf(battery, theta), demand);
  double eta = 1.0;
  double pg = 0.0;
  long it = 0;
  bool converged = false;
  const double switch_tol = std::max(opt.tol, 1e-6);
  for (; it < opt.max_iters; ++it) {
    const VectorXd g = iid_gradient(Pmf(battery, theta), demand);
    pg = tangent_norm(g);
    if (pg < switch_tol) break;
    // multiplicative (entropy-mirror) step with backtracking; exponents are
    // shifted to be non-positive so the update cannot overflow
    bool moved = false;
    while (eta > 1e-14) {
      VectorXd cand =
          (theta.array() * (-eta * (g.array() - g.minCoeff())).exp()).matrix();
      cand = cand.array().max(1e-300).matrix();
      cand /= cand.sum();
      const double fc = iid_objective(Pmf(battery, cand), demand);
      if (fc < f - 1e-16) {
        theta = cand;
        f = fc;
        eta = std::min(eta * 1.5, 1e3);
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!moved) break;  // no descent direction at working precision
  }
  if (pg < opt.tol)
    converged = true;
  else
    converged = newton_polish(theta, demand, battery, opt.tol,
                              /*max_iters=*/60, pg, it);

  SingleLetterSolution sol;
  sol.theta_star = Pmf(battery, theta);
  sol.xi_star = theta_to_xi(sol.theta_star, demand);
  sol.J_star_bits = iid_objective(sol.theta_star, demand);
  sol.iterations = it;
  sol.gradient_norm = pg;
  sol.converged = converged;
  return sol;
}

SingleLetterSolution minimize_leakage(const SystemSpec& spec,
                                      const MinimizeOptions& opt) {
  if (!spec.iid)
    throw SpecError("single-letter optimization requires i.i.d. demand");
  SingleLetterSolution sol =
      minimize_leakage(spec.demand_marginal, spec.battery, opt);
  sol.b_star = structured_policy(spec, sol.theta_star).b;
  return sol;
}

namespace {

bool pmf_symmetric(const VectorXd& p, double tol = 1e-12) {
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i)
    if (std::abs(p[i] - p[n - 1 - i]) > tol) return false;
  return true;
}

// symmetric and unimodal around floor(m/2); requires odd support
bool pmf_symmetric_unimodal(const VectorXd& p) {
  const int n = static_cast<int>(p.size());
  if (n % 2 == 0 || !pmf_symmetric(p)) return false;
  const int m = (n - 1) / 2;
  for (int k = 0; k + 1 <= m; ++k)
    if (p[m + k] < p[m + k + 1] - 1e-12) return false;
  return true;
}

}  // namespace

PropertyReport certify_properties(const SingleLetterSolution& sol,
                                  const Pmf& demand, double sym_tol,
                                  double chain_slack) {
  PropertyReport rep;
  const VectorXd& th = sol.theta_star.probs;
  const int ms = sol.theta_star.support.hi;

  rep.symmetry_applicable = pmf_symmetric(demand.probs);
  if (rep.symmetry_applicable) {
    for (int s = 0; s <= ms; ++s)
      rep.symmetry_error =
          std::max(rep.symmetry_error, std::abs(th[s] - th[ms - s]));
    rep.symmetry_ok = rep.symmetry_error <= sym_tol;
  }

  rep.unimodal_applicable = pmf_symmetric_unimodal(demand.probs);
  if (rep.unimodal_applicable) {
    const int m = ms / 2;
    double worst = 0.0;
    auto require_eq = [&](int i, int j) {
      worst = std::max(worst, std::abs(th[i] - th[j]));
    };
    auto require_ge = [&](int i, int j) {  // th[i] >= th[j]
      worst = std::max(worst, th[j] - th[i]);
    };
    if (ms % 2 == 0) {
      // θ_m ≥ θ_{m+1} = θ_{m-1} ≥ θ_{m+2} = θ_{m-2} ≥ ...
      for (int k = 1; m + k <= ms; ++k) {
        require_eq(m + k, m - k);
        require_ge(m - (k - 1), m + k);
      }
    } else {
      // θ_m = θ_{m+1} ≥ θ_{m-1} = θ_{m+2} ≥ θ_{m-2} = ...
      for (int k = 0; m - k >= 0; ++k) {
        require_eq(m - k, m + 1 + k);
        if (k > 0) require_ge(m - (k - 1), m - k);
      }
    }
    rep.unimodal_error = worst;
    rep.unimodal_ok = worst <= chain_slack;
  }
  return rep;
}

ConvexityReport convexity_probe(const Pmf& demand, Alphabet battery,
                                int trials, std::uint64_t seed) {
  Rng rng(seed);
  ConvexityReport rep;
  rep.trials = trials;
  rep.min_slack = std::numeric_limits<double>::infinity();
  const int d = battery.size();
  for (int i = 0; i < trials; ++i) {
    const VectorXd t1 = rng.simplex_point(d);
    const VectorXd t2 = rng.simplex_point(d);
    const double lam = rng.uniform(0.05, 0.95);
    const VectorXd mix = lam * t1 + (1.0 - lam) * t2;
    const double chord = lam * iid_objective(Pmf(battery, t1), demand) +
                         (1.0 - lam) * iid_objective(Pmf(battery, t2), demand);
    const double slack = chord - iid_objective(Pmf(battery, mix), demand);
    rep.min_slack = std::min(rep.min_slack, slack);
    const bool separated = (t1 - t2).norm() > 1e-3;
    if (slack < (separated ? 1e-12 : -1e-12)) ++rep.violations;
  }
  return rep;
}

}  // namespace bp
