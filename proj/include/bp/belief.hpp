#pragma once

#include "bp/types.hpp"

namespace bp {

struct ActionA;
struct ActionB;

/// Posterior over the joint hidden state (X_t, S_t) given the consumption
/// history.
struct Belief {
  MatrixXd joint;  // joint(x, s)

  Belief() = default;
  explicit Belief(MatrixXd joint);

  int nx() const { return static_cast<int>(joint.rows()); }
  int ns() const { return static_cast<int>(joint.cols()); }

  VectorXd demand_marginal() const { return joint.rowwise().sum(); }
  VectorXd battery_marginal() const { return joint.colwise().sum().transpose(); }

  /// Product belief P_X ⊗ θ (the form the joint takes under i.i.d. demand).
  static Belief product(const Pmf& demand, const Pmf& battery);
};

/// Posterior over the difference state W_t = S_t - X_t.
struct XiBelief {
  Alphabet support;  // W = {-mx .. ms}
  VectorXd xi;

  XiBelief() = default;
  XiBelief(Alphabet support, VectorXd xi);

  double operator()(int w) const { return xi[support.index(w)]; }
};

/// ξ(w) = Σ_x P_X(x) θ(w + x): the law of S - X with S ⟂ X.
XiBelief theta_to_xi(const Pmf& theta, const Pmf& demand);

/// Projection of a joint belief onto the difference coordinate,
/// ξ(w) = Σ_{s-x=w} π(x, s).
XiBelief xi_from_belief(const Belief& pi, Alphabet w_alphabet);

/// Predicted consumption distribution P(y) = Σ_{x,s} π(x,s) a(y|x,s).
VectorXd predicted_output(const Belief& pi, const ActionA& a);

/// Predicted consumption distribution P(y) = Σ_w ξ(w) b(y|w).
VectorXd predicted_output(const XiBelief& xi, const ActionB& b);

/// One Bayes step of the joint filter: posterior over (X_{t+1}, S_{t+1})
/// after observing consumption y under action a, with demand kernel Q and
/// battery evolving by the conservation law. Throws NullConditioningError
/// when y has zero predicted probability.
Belief filter_joint(const Belief& pi, int y, const ActionA& a,
                    const TransitionMatrix& Q);

/// One Bayes step of the difference filter (i.i.d. demand):
/// ξ⁺(w⁺) ∝ Σ_{x,w} P_X(x) 1{w⁺ = y + w - x} b(y|w) ξ(w).
XiBelief xi_update(const XiBelief& xi, int y, const ActionB& b,
                   const Pmf& demand);

}  // namespace bp
