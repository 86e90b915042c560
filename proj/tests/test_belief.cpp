#include <doctest.h>

#include "bp/belief.hpp"
#include "bp/leakage.hpp"
#include "bp/policy.hpp"
#include "bp/rng.hpp"
#include "oracles.hpp"

using namespace bp;

namespace {

SystemSpec random_small_spec(Rng& rng) {
  const int mx = 1 + rng.uniform_int(3);
  const int my = mx + rng.uniform_int(2);
  const int ms = 1 + rng.uniform_int(3);
  return SystemSpec::make_iid(mx, my, ms, rng.simplex_point(mx + 1),
                              rng.simplex_point(ms + 1));
}

}  // namespace

TEST_CASE("theta_to_xi on the binary model") {
  // W = S - X with theta = (p, 1-p), uniform demand: (p/2, 1/2, (1-p)/2)
  const Alphabet bs(0, 1), bx(0, 1);
  const Pmf demand = Pmf::uniform(bx);
  for (double p : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    VectorXd th(2);
    th << p, 1 - p;
    const XiBelief xi = theta_to_xi(Pmf(bs, th), demand);
    CHECK(xi(-1) == doctest::Approx(p / 2).epsilon(1e-14));
    CHECK(xi(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(xi(1) == doctest::Approx((1 - p) / 2).epsilon(1e-14));
  }
}

TEST_CASE("theta_to_xi: atoms and brute-force cross-check") {
  const Alphabet bs(0, 2), bx(0, 1);
  const XiBelief atom = theta_to_xi(Pmf::atom(bs, 0), Pmf::atom(bx, 0));
  CHECK(atom(0) == 1.0);

  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemSpec spec = random_small_spec(rng);
    const Pmf theta(spec.battery, rng.simplex_point(spec.battery.size()));
    const XiBelief xi = theta_to_xi(theta, spec.demand_marginal);
    // independent double loop over the product law
    VectorXd ref = VectorXd::Zero(spec.difference().size());
    for (int s = 0; s <= spec.ms(); ++s)
      for (int x = 0; x <= spec.mx(); ++x)
        ref[spec.difference().index(s - x)] +=
            theta.probs[s] * spec.demand_marginal.probs[x];
    CHECK((xi.xi - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(xi.xi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("joint filter: degenerate atomic case") {
  const SystemSpec spec = SystemSpec::binary();
  const TransitionMatrix Q = spec.kernel();
  MatrixXd j = MatrixXd::Zero(2, 2);
  j(0, 0) = 1.0;  // atom at (x=0, s=0)
  ActionA a(2, 2, 2);
  a.at(1, 0, 0) = 1.0;  // deterministic y=1 from (0,0)
  a.at(1, 1, 0) = 1.0;
  a.at(0, 0, 1) = 1.0;
  a.at(0, 1, 1) = 1.0;
  const Belief next = filter_joint(Belief(j), 1, a, Q);
  // next state: x' ~ Q(.|0), s' = 0 - 0 + 1 = 1
  CHECK(next.joint(0, 1) == doctest::Approx(0.5));
  CHECK(next.joint(1, 1) == doctest::Approx(0.5));
  CHECK(next.joint(0, 0) == 0.0);
  CHECK(next.joint(1, 0) == 0.0);
}

TEST_CASE("joint filter equals brute-force Bayes on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const SystemSpec spec = random_small_spec(rng);
    const TransitionMatrix Q = spec.kernel();
    const Belief pi(Belief::product(
        Pmf(spec.demand, rng.simplex_point(spec.demand.size())),
        Pmf(spec.battery, rng.simplex_point(spec.battery.size()))));
    const ActionA a = oracle::random_action_a(spec, derive_seed(11, trial));

    for (int y = 0; y <= spec.my(); ++y) {
      // reference posterior by enumerating (x, s, x')
      MatrixXd ref = MatrixXd::Zero(spec.demand.size(), spec.battery.size());
      double norm = 0.0;
      for (int x = 0; x <= spec.mx(); ++x)
        for (int s = 0; s <= spec.ms(); ++s) {
          const double m = pi.joint(x, s) * a(y, x, s);
          if (m == 0.0) continue;
          norm += m;
          const int sp = s + y - x;
          for (int xp = 0; xp <= spec.mx(); ++xp)
            ref(xp, sp) += m * Q.rows(x, xp);
        }
      if (norm <= 0.0) {
        CHECK_THROWS_AS(static_cast<void>(filter_joint(pi, y, a, Q)),
                        NullConditioningError);
        continue;
      }
      const Belief got = filter_joint(pi, y, a, Q);
      CHECK((got.joint - ref / norm).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("binary uniform belief, equiprobable action, observe y=1") {
  const SystemSpec spec = SystemSpec::binary();
  const Belief pi(MatrixXd::Constant(2, 2, 0.25));
  const ActionA a = lift_to_action_a(spec, equiprobable_policy(spec).b);
  const Belief next = filter_joint(pi, 1, a, spec.kernel());
  // brute force over the 4-point joint: (0,0)->s'=1 w.p. .25*.5;
  // (1,0)->s'=0 w.p. .25*1; (1,1)->s'=1 w.p. .25*.5; (0,1) cannot emit 1.
  // normalized s' law: (0.5, 0.5); x' uniform independent.
  for (int x = 0; x < 2; ++x)
    for (int s = 0; s < 2; ++s)
      CHECK(next.joint(x, s) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("structured policy is a fixed point of both filters") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemSpec spec = random_small_spec(rng);
    VectorXd th = rng.simplex_point(spec.battery.size());
    th = (th.array() + 0.2).matrix();  // keep interior
    th /= th.sum();
    const Pmf theta(spec.battery, th);
    const ConstantB b = structured_policy(spec, theta);
    const XiBelief xi = theta_to_xi(theta, spec.demand_marginal);
    const Belief pi = Belief::product(spec.demand_marginal, theta);
    const ActionA lifted = lift_to_action_a(spec, b.b);

    const VectorXd py = predicted_output(xi, b.b);
    for (int y = 0; y <= spec.my(); ++y) {
      if (py[y] <= 0.0) continue;
      const XiBelief xi2 = xi_update(xi, y, b.b, spec.demand_marginal);
      CHECK((xi2.xi - xi.xi).cwiseAbs().maxCoeff() < 1e-10);
      const Belief pi2 = filter_joint(pi, y, lifted, spec.kernel());
      CHECK((pi2.joint - pi.joint).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("difference filter: atomic single-path update") {
  const SystemSpec spec = SystemSpec::make_iid(
      2, 2, 2, VectorXd::Constant(3, 1.0 / 3), VectorXd::Constant(3, 1.0 / 3));
  const Alphabet wa = spec.difference();
  const int w0 = 1;
  VectorXd x0 = VectorXd::Zero(wa.size());
  x0[wa.index(w0)] = 1.0;
  const XiBelief xi(wa, x0);
  ActionB b(wa, spec.consumption.size());
  for (int wi = 0; wi < wa.size(); ++wi)
    b.t(wi, feasible_outputs(spec, wa.value(wi)).lo) = 1.0;
  const int y0 = feasible_outputs(spec, w0).lo;
  const XiBelief next = xi_update(xi, y0, b, spec.demand_marginal);
  for (int wi = 0; wi < wa.size(); ++wi) {
    const int x = y0 + w0 - wa.value(wi);
    const double expect =
        spec.demand.contains(x) ? spec.demand_marginal.probs[x] : 0.0;
    CHECK(next.xi[wi] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("difference filter equals brute force over (w, x, y)") {
  const SystemSpec spec = SystemSpec::binary();
  const Alphabet wa = spec.difference();
  VectorXd v(3);
  v << 0.25, 0.5, 0.25;
  const XiBelief xi(wa, v);
  const ActionB b = equiprobable_policy(spec).b;
  const XiBelief next = xi_update(xi, 0, b, spec.demand_marginal);
  // joint over (w, x): P(w) b(0|w) P_X(x), w+ = 0 + w - x
  VectorXd ref = VectorXd::Zero(3);
  double norm = 0.0;
  for (int wi = 0; wi < 3; ++wi) {
    const int w = wa.value(wi);
    const double m = v[wi] * b(0, w);
    norm += m;
    for (int x = 0; x <= 1; ++x)
      if (wa.contains(w - x)) ref[wa.index(w - x)] += m * 0.5;
  }
  CHECK((next.xi - ref / norm).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(
      static_cast<void>(xi_update(XiBelief(wa, VectorXd::Unit(3, 0)), 0, b,
                                  spec.demand_marginal)),
      NullConditioningError);
}

TEST_CASE("filters commute with the difference projection") {
  // filtering the product joint under a lifted action and then projecting
  // equals updating the projected belief directly
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const SystemSpec spec = random_small_spec(rng);
    const Pmf theta(spec.battery, rng.simplex_point(spec.battery.size()));
    const ActionB b = oracle::random_action_b(spec, derive_seed(23, trial));
    const ActionA lifted = lift_to_action_a(spec, b);
    const Belief pi = Belief::product(spec.demand_marginal, theta);
    const XiBelief xi = theta_to_xi(theta, spec.demand_marginal);

    const VectorXd py = predicted_output(pi, lifted);
    for (int y = 0; y <= spec.my(); ++y) {
      if (py[y] <= 1e-12) continue;
      const Belief pi2 = filter_joint(pi, y, lifted, spec.kernel());
      // the filtered joint stays a product with the fresh demand marginal
      const Pmf theta2(spec.battery, pi2.battery_marginal());
      const XiBelief via_joint = theta_to_xi(theta2, spec.demand_marginal);
      const XiBelief via_xi = xi_update(xi, y, b, spec.demand_marginal);
      CHECK((via_joint.xi - via_xi.xi).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("belief validation") {
  CHECK_THROWS_AS(static_cast<void>(Belief(MatrixXd::Constant(2, 2, 0.3))),
                  SpecError);
  MatrixXd neg = MatrixXd::Constant(2, 2, 0.5);
  neg(0, 0) = -0.5;
  CHECK_THROWS_AS(static_cast<void>(Belief{neg}), SpecError);
}
