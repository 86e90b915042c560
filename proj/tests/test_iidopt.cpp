#include <doctest.h>

#include "bp/iidopt.hpp"
#include "bp/rng.hpp"

using namespace bp;

namespace {

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

VectorXd binomial6() {
  VectorXd px(7);
  px << 1, 6, 15, 20, 15, 6, 1;
  return px / 64.0;
}

}  // namespace

TEST_CASE("objective closed form on the binary model") {
  const Alphabet bs(0, 1), bx(0, 1);
  const Pmf demand = Pmf::uniform(bx);
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    VectorXd th(2);
    th << p, 1 - p;
    CHECK(iid_objective(Pmf(bs, th), demand) ==
          doctest::Approx(1.0 - 0.5 * binary_entropy(p)).epsilon(1e-12));
  }
}

TEST_CASE("objective degenerate cases") {
  const Alphabet bs(0, 2);
  // atomic demand: W = S - const, no information in the difference
  const Pmf atom_demand = Pmf::atom(Alphabet(0, 2), 1);
  Rng rng(3);
  for (int i = 0; i < 5; ++i)
    CHECK(iid_objective(Pmf(bs, rng.simplex_point(3)), atom_demand) ==
          doctest::Approx(0.0));
  // atomic battery: W determines X exactly
  const Pmf demand(Alphabet(0, 2), Eigen::Vector3d(0.2, 0.5, 0.3));
  CHECK(iid_objective(Pmf::atom(bs, 1), demand) ==
        doctest::Approx(entropy_bits(demand.probs)).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    const int ms = 1 + rng.uniform_int(7);  // |S| up to 8
    const int mx = 1 + rng.uniform_int(3);
    const Alphabet bs(0, ms), bx(0, mx);
    VectorXd dm = rng.simplex_point(mx + 1).array() + 1e-3;
    const Pmf demand(bx, dm / dm.sum());
    VectorXd th = rng.simplex_point(ms + 1).array() + 5e-2;
    th /= th.sum();
    const VectorXd g = iid_gradient(Pmf(bs, th), demand);
    const double h = 1e-5;
    for (int s = 0; s <= ms; ++s) {
      VectorXd up = th, dn = th;
      up[s] += h;
      dn[s] -= h;
      // plain coordinate perturbation; objective extends off the simplex
      const double fd = (iid_objective(Pmf(bs, up / up.sum()), demand) -
                         iid_objective(Pmf(bs, dn / dn.sum()), demand));
      // compare directional derivatives through the normalization map
      VectorXd dir = -th;
      dir[s] += 1.0;  // d/dh of (th + h e_s)/(1 + h)
      CHECK(std::abs(fd / (2 * h) - g.dot(dir)) < 1e-6);
    }
  }
}

TEST_CASE("gradient symmetry under symmetric inputs") {
  const Alphabet bs(0, 5);
  const Pmf demand(Alphabet(0, 6), binomial6());
  VectorXd th(6);
  th << 0.1, 0.15, 0.25, 0.25, 0.15, 0.1;
  const VectorXd g = iid_gradient(Pmf(bs, th), demand);
  for (int s = 0; s <= 5; ++s)
    CHECK(g[s] == doctest::Approx(g[5 - s]).epsilon(1e-12));
  CHECK_THROWS_AS(static_cast<void>(iid_gradient(Pmf::atom(bs, 0), demand)),
                  SpecError);
}

TEST_CASE("binary optimum") {
  const SingleLetterSolution sol = minimize_leakage(SystemSpec::binary());
  CHECK(sol.converged);
  CHECK(sol.J_star_bits == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.theta_star.probs[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sol.gradient_norm < 1e-8);
}

TEST_CASE("binomial optima match the reference values") {
  const VectorXd px = binomial6();
  {
    const SingleLetterSolution sol = minimize_leakage(
        SystemSpec::make_iid(6, 6, 5, px, VectorXd::Constant(6, 1.0 / 6)));
    CHECK(sol.converged);
    CHECK(sol.J_star_bits == doctest::Approx(0.4616).epsilon(5e-4));
    VectorXd expect(6);
    expect << 0.1032, 0.1747, 0.2221, 0.2221, 0.1747, 0.1032;
    CHECK((sol.theta_star.probs - expect).cwiseAbs().maxCoeff() < 1e-3);
  }
  {
    const SingleLetterSolution sol = minimize_leakage(
        SystemSpec::make_iid(6, 6, 6, px, VectorXd::Constant(7, 1.0 / 7)));
    CHECK(sol.converged);
    CHECK(sol.J_star_bits == doctest::Approx(0.3774).epsilon(5e-4));
    VectorXd expect(7);
    expect << 0.0773, 0.1364, 0.1847, 0.2031, 0.1847, 0.1364, 0.0773;
    CHECK((sol.theta_star.probs - expect).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("a larger battery never hurts") {
  const VectorXd px = binomial6();
  const double j5 =
      minimize_leakage(Pmf(Alphabet(0, 6), px), Alphabet(0, 5)).J_star_bits;
  const double j6 =
      minimize_leakage(Pmf(Alphabet(0, 6), px), Alphabet(0, 6)).J_star_bits;
  CHECK(j6 < j5);
}

TEST_CASE("minimizer is unique and the solve deterministic") {
  const Pmf demand(Alphabet(0, 6), binomial6());
  const Alphabet battery(0, 5);
  Rng rng(4);
  MinimizeOptions a, b;
  VectorXd s1 = rng.simplex_point(6).array() + 1e-2;
  VectorXd s2 = rng.simplex_point(6).array() + 1e-2;
  a.init = s1 / s1.sum();
  b.init = s2 / s2.sum();
  const SingleLetterSolution ra = minimize_leakage(demand, battery, a);
  const SingleLetterSolution rb = minimize_leakage(demand, battery, b);
  CHECK((ra.theta_star.probs - rb.theta_star.probs).cwiseAbs().maxCoeff() <
        1e-8);

  const SingleLetterSolution r1 = minimize_leakage(demand, battery);
  const SingleLetterSolution r2 = minimize_leakage(demand, battery);
  CHECK((r1.theta_star.probs - r2.theta_star.probs).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(r1.J_star_bits == r2.J_star_bits);
}

TEST_CASE("property certificates") {
  const VectorXd px = binomial6();
  for (int ms : {5, 6}) {
    const SingleLetterSolution sol = minimize_leakage(
        SystemSpec::make_iid(6, 6, ms, px,
                             VectorXd::Constant(ms + 1, 1.0 / (ms + 1))));
    const PropertyReport rep =
        certify_properties(sol, Pmf(Alphabet(0, 6), px));
    CHECK(rep.symmetry_applicable);
    CHECK(rep.symmetry_ok);
    CHECK(rep.unimodal_applicable);
    CHECK(rep.unimodal_ok);
  }

  // asymmetric demand: symmetry precondition unmet, check skipped
  VectorXd skew(3);
  skew << 0.6, 0.3, 0.1;
  const SingleLetterSolution sol = minimize_leakage(
      SystemSpec::make_iid(2, 2, 2, skew, VectorXd::Constant(3, 1.0 / 3)));
  const PropertyReport rep = certify_properties(sol, Pmf(Alphabet(0, 2), skew));
  CHECK(!rep.symmetry_applicable);
  CHECK(!rep.unimodal_applicable);

  // binary optimum is trivially symmetric
  const SingleLetterSolution bin = minimize_leakage(SystemSpec::binary());
  const PropertyReport brep =
      certify_properties(bin, Pmf::uniform(Alphabet(0, 1)));
  CHECK(brep.symmetry_applicable);
  CHECK(brep.symmetry_ok);
}

TEST_CASE("strict convexity probe") {
  const Pmf demand = Pmf::uniform(Alphabet(0, 1));
  const ConvexityReport rep = convexity_probe(demand, Alphabet(0, 1), 1000, 6);
  CHECK(rep.violations == 0);
  CHECK(rep.min_slack > 0.0);

  // equality when the two endpoints coincide
  const Alphabet bs(0, 1);
  VectorXd th(2);
  th << 0.4, 0.6;
  const double f = iid_objective(Pmf(bs, th), demand);
  CHECK(0.5 * f + 0.5 * f - f == doctest::Approx(0.0));

  // reflecting theta and mixing strictly improves a symmetric objective
  VectorXd bar(2);
  bar << 0.6, 0.4;
  const VectorXd mid = 0.5 * th + 0.5 * bar;
  CHECK(iid_objective(Pmf(bs, mid), demand) <
        0.5 * iid_objective(Pmf(bs, th), demand) +
            0.5 * iid_objective(Pmf(bs, bar), demand) - 1e-12);
}
