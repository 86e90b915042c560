#include "bp/belief.hpp"

#include "bp/policy.hpp"

namespace bp {

Belief::Belief(MatrixXd j) : joint(std::move(j)) {
  if ((joint.array() < 0.0).any() || std::abs(joint.sum() - 1.0) > 1e-10)
    throw SpecError("belief: entries must be non-negative and sum to 1");
}

Belief Belief::product(const Pmf& demand, const Pmf& battery) {
  return Belief(demand.probs * battery.probs.transpose());
}

XiBelief::XiBelief(Alphabet support, VectorXd v)
    : support(support), xi(std::move(v)) {
  if (xi.size() != support.size() || !is_pmf_vector(xi, 1e-10))
    throw SpecError("xi belief: not a pmf on W");
}

XiBelief theta_to_xi(const Pmf& theta, const Pmf& demand) {
  const int mx = demand.support.hi;
  const int ms = theta.support.hi;
  Alphabet w_alpha(-mx, ms);
  VectorXd xi = VectorXd::Zero(w_alpha.size());
  for (int s = 0; s <= ms; ++s)
    for (int x = 0; x <= mx; ++x)
      xi[w_alpha.index(s - x)] += demand.probs[x] * theta.probs[s];
  return XiBelief(w_alpha, xi / xi.sum());
}

XiBelief xi_from_belief(const Belief& pi, Alphabet w_alphabet) {
  VectorXd xi = VectorXd::Zero(w_alphabet.size());
  for (int x = 0; x < pi.nx(); ++x)
    for (int s = 0; s < pi.ns(); ++s) xi[w_alphabet.index(s - x)] += pi.joint(x, s);
  return XiBelief(w_alphabet, xi / xi.sum());
}

VectorXd predicted_output(const Belief& pi, const ActionA& a) {
  VectorXd p = VectorXd::Zero(a.ny);
  for (int x = 0; x < a.nx; ++x)
    for (int s = 0; s < a.ns; ++s) {
      const double mass = pi.joint(x, s);
      if (mass == 0.0) continue;
      for (int y = 0; y < a.ny; ++y) p[y] += mass * a(y, x, s);
    }
  return p;
}

VectorXd predicted_output(const XiBelief& xi, const ActionB& b) {
  return b.t.transpose() * xi.xi;
}

Belief filter_joint(const Belief& pi, int y, const ActionA& a,
                    const TransitionMatrix& Q) {
  const int nx = pi.nx(), ns = pi.ns();
  MatrixXd next = MatrixXd::Zero(nx, ns);
  double norm = 0.0;
  // s' = s + y - x, so the pre-transition battery level is s' + x - y.
  for (int x = 0; x < nx; ++x) {
    for (int sp = 0; sp < ns; ++sp) {
      const int s = sp + x - y;
      if (s < 0 || s >= ns) continue;
      const double m = a(y, x, s) * pi.joint(x, s);
      if (m == 0.0) continue;
      norm += m;
      for (int xp = 0; xp < nx; ++xp) next(xp, sp) += Q.rows(x, xp) * m;
    }
  }
  if (norm <= 0.0) throw NullConditioningError(y);
  return Belief(next / norm);
}

XiBelief xi_update(const XiBelief& xi, int y, const ActionB& b,
                   const Pmf& demand) {
  const Alphabet wa = xi.support;
  VectorXd next = VectorXd::Zero(wa.size());
  double norm = 0.0;
  for (int wi = 0; wi < wa.size(); ++wi) {
    const int w = wa.value(wi);
    const double m = b(y, w) * xi.xi[wi];
    if (m == 0.0) continue;
    norm += m;
    // W⁺ = W + Y - X⁺ with the fresh demand X⁺ ~ P_X.
    for (int x = 0; x <= demand.support.hi; ++x)
      next[wa.index(y + w - x)] += demand.probs[x] * m;
  }
  if (norm <= 0.0) throw NullConditioningError(y);
  return XiBelief(wa, next / norm);
}

}  // namespace bp
