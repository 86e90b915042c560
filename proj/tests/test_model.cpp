#include <doctest.h>

#include <algorithm>

#include "bp/model.hpp"
#include "bp/policy.hpp"
#include "bp/rng.hpp"

using namespace bp;

TEST_CASE("feasible outputs on the binary model") {
  const SystemSpec spec = SystemSpec::binary();
  CHECK(feasible_outputs(spec, -1).lo == 1);
  CHECK(feasible_outputs(spec, -1).hi == 1);
  CHECK(feasible_outputs(spec, 0).lo == 0);
  CHECK(feasible_outputs(spec, 0).hi == 1);
  // battery full, no demand: only y = 0 keeps the level inside S
  CHECK(feasible_outputs(spec, spec.ms()).lo == 0);
  CHECK(feasible_outputs(spec, spec.ms()).hi == 0);
  CHECK_THROWS_AS(feasible_outputs(spec, 2), SpecError);
  CHECK_THROWS_AS(feasible_outputs(spec, -2), SpecError);
}

TEST_CASE("every feasible consumption keeps the battery in range") {
  for (int mx = 0; mx <= 3; ++mx)
    for (int my = mx; my <= 4; ++my)
      for (int ms = 0; ms <= 3; ++ms) {
        VectorXd d = VectorXd::Constant(mx + 1, 1.0 / (mx + 1));
        VectorXd b = VectorXd::Constant(ms + 1, 1.0 / (ms + 1));
        const SystemSpec spec = SystemSpec::make_iid(mx, my, ms, d, b);
        const Alphabet w = spec.difference();
        for (int wv = w.lo; wv <= w.hi; ++wv) {
          const YRange r = feasible_outputs(spec, wv);
          CHECK(!r.empty());  // guaranteed by mx <= my
          for (int y = r.lo; y <= r.hi; ++y) {
            CHECK(spec.battery.contains(wv + y));
          }
          for (int y = 0; y <= my; ++y)
            if (!r.contains(y)) CHECK(!spec.battery.contains(wv + y));
        }
      }
}

TEST_CASE("battery step") {
  const SystemSpec spec = SystemSpec::binary();
  CHECK(step(spec, 0, 0, 1) == 1);
  CHECK(step(spec, 1, 1, 0) == 0);
  for (int s = 0; s <= 1; ++s)
    for (int x = 0; x <= 1; ++x) CHECK(step(spec, s, x, x) == s);
  CHECK_THROWS_AS(step(spec, 1, 0, 1), SpecError);  // overflow
  CHECK_THROWS_AS(step(spec, 0, 1, 0), SpecError);  // demand unmet
}

TEST_CASE("simulate: passthrough keeps the battery level constant") {
  const SystemSpec spec = SystemSpec::binary();
  const Trace tr = simulate(spec, passthrough_policy(spec), 200, 42);
  REQUIRE(tr.horizon() == 200);
  for (int t = 0; t < 200; ++t) {
    CHECK(tr.y[t] == tr.x[t]);
    CHECK(tr.s[t] == tr.s[0]);
  }
}

TEST_CASE("simulate: traces obey conservation and stay in range") {
  const SystemSpec spec = SystemSpec::binary();
  const Trace tr = simulate(spec, equiprobable_policy(spec), 500, 7);
  for (int t = 0; t + 1 < tr.horizon(); ++t)
    CHECK(tr.s[t + 1] == step(spec, tr.s[t], tr.x[t], tr.y[t]));
}

TEST_CASE("simulate: deterministic in the seed, empty at horizon 0") {
  const SystemSpec spec = SystemSpec::binary();
  const Policy pol = equiprobable_policy(spec);
  const Trace a = simulate(spec, pol, 64, 5);
  const Trace b = simulate(spec, pol, 64, 5);
  CHECK(a.x == b.x);
  CHECK(a.s == b.s);
  CHECK(a.y == b.y);
  const Trace c = simulate(spec, pol, 64, 6);
  CHECK(a.y != c.y);
  CHECK(simulate(spec, pol, 0, 1).horizon() == 0);
}

TEST_CASE("simulate: structured policy output marginal matches demand") {
  // consumption under the invariant policy is indistinguishable from demand
  const SystemSpec spec = SystemSpec::binary();
  const ConstantB bstar = structured_policy(spec, Pmf::uniform(spec.battery));
  const int n = 100000;
  const Trace tr = simulate(spec, bstar, n, 321);
  long ones = 0;
  for (int y : tr.y) ones += y;
  const double p = 0.5;
  const double sigma = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(ones - n * p) <= 3.0 * sigma);
}

TEST_CASE("trace CSV header and shape") {
  const SystemSpec spec = SystemSpec::binary();
  const Trace tr = simulate(spec, passthrough_policy(spec), 3, 9);
  const std::string csv = tr.to_csv();
  CHECK(csv.rfind("t,x,s,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("infeasible policy rows abort with the step index") {
  const SystemSpec spec = SystemSpec::binary();
  MemoryCompressedPolicy bad{[](int, int, std::span<const int>) {
    VectorXd row(2);
    row << 0.0, 1.0;  // y=1 is infeasible once the battery is full with x=0
    return row;
  }};
  CHECK_THROWS_WITH_AS(static_cast<void>(simulate(spec, bad, 100, 3)),
                       doctest::Contains("step"), SpecError);
}

TEST_CASE("markov spec construction and ergodicity check") {
  MatrixXd q(2, 2);
  q << 0.9, 0.1, 0.2, 0.8;
  const SystemSpec spec = SystemSpec::make_markov(
      1, 1, 1, q, VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 0.5));
  CHECK(spec.kernel().is_ergodic());

  MatrixXd per(2, 2);
  per << 0.0, 1.0, 1.0, 0.0;  // period 2
  CHECK(!TransitionMatrix(Alphabet(0, 1), per).is_ergodic());
  MatrixXd red(2, 2);
  red << 1.0, 0.0, 0.5, 0.5;  // not irreducible
  CHECK(!TransitionMatrix(Alphabet(0, 1), red).is_ergodic());
}

TEST_CASE("spec validation rejects mx > my") {
  CHECK_THROWS_AS(SystemSpec::make_iid(2, 1, 1, VectorXd::Constant(3, 1.0 / 3),
                                       VectorXd::Constant(2, 0.5)),
                  SpecError);
}
