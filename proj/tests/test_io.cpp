#include <doctest.h>

#include "bp/io.hpp"

using namespace bp;

TEST_CASE("spec JSON round trip") {
  const SystemSpec spec = SystemSpec::binary();
  const json j = spec_to_json(spec);
  const SystemSpec back = spec_from_json(j);
  CHECK(back.iid);
  CHECK(back.mx() == 1);
  CHECK(back.my() == 1);
  CHECK(back.ms() == 1);
  CHECK(back.demand_marginal.probs == spec.demand_marginal.probs);
  CHECK(back.initial_battery.probs == spec.initial_battery.probs);

  MatrixXd q(2, 2);
  q << 0.7, 0.3, 0.4, 0.6;
  const SystemSpec markov = SystemSpec::make_markov(
      1, 2, 2, q, VectorXd::Constant(2, 0.5), VectorXd::Constant(3, 1.0 / 3));
  const SystemSpec back2 = spec_from_json(spec_to_json(markov));
  CHECK(!back2.iid);
  CHECK(back2.demand_chain.rows == markov.demand_chain.rows);
  CHECK(back2.my() == 2);
}

TEST_CASE("spec JSON validation errors") {
  CHECK_THROWS_AS(spec_from_json(json::parse(R"({"mx": 1})")), SpecError);
  // demand must be satisfiable: mx > my rejected
  CHECK_THROWS_AS(
      spec_from_json(json::parse(
          R"({"mx":2,"my":1,"ms":1,"demand":{"iid":[0.3,0.3,0.4]},
              "initial_battery":[0.5,0.5]})")),
      SpecError);
  // not a pmf
  CHECK_THROWS_AS(
      spec_from_json(json::parse(
          R"({"mx":1,"my":1,"ms":1,"demand":{"iid":[0.6,0.6]},
              "initial_battery":[0.5,0.5]})")),
      SpecError);
}

TEST_CASE("policy JSON kinds") {
  const SystemSpec spec = SystemSpec::binary();

  const Policy structured = policy_from_json(
      spec, json::parse(R"({"kind":"structured","theta":[0.5,0.5]})"));
  const auto& sb = std::get<ConstantB>(structured);
  CHECK(sb.b(1, -1) == doctest::Approx(1.0));
  CHECK(sb.b(0, 0) == doctest::Approx(0.5));

  const Policy eq = policy_from_json(spec, json::parse(R"({"kind":"equiprobable"})"));
  CHECK(std::get<ConstantB>(eq).b(0, 0) == doctest::Approx(0.5));

  // table_b round trip preserves entries exactly
  const json dumped = policy_to_json(spec, structured);
  CHECK(dumped.at("kind") == "table_b");
  const Policy reloaded = policy_from_json(spec, dumped);
  CHECK(std::get<ConstantB>(reloaded).b.t == sb.b.t);

  // invalid tables are rejected on load
  json bad = dumped;
  bad["b"][0][0] = 0.7;
  CHECK_THROWS_AS(static_cast<void>(policy_from_json(spec, bad)), SpecError);
  CHECK_THROWS_AS(
      static_cast<void>(policy_from_json(spec, json::parse(R"({"kind":"??"})"))),
      SpecError);

  // table_a: passthrough written out longhand
  const json ja = json::parse(
      R"({"kind":"table_a","a":[[[1,0],[1,0]],[[0,1],[0,1]]]})");
  const Policy pa = policy_from_json(spec, ja);
  CHECK(std::holds_alternative<BeliefPolicy>(pa));
}

TEST_CASE("leakage report serialization and unit conversion") {
  LeakageReport rep;
  rep.horizon = 2;
  rep.per_step = VectorXd::Constant(2, 0.5);
  rep.total_rate = 0.5;
  rep.method = "exact";
  const json jb = leakage_to_json(rep, Units::bits);
  CHECK(jb.at("total_rate").get<double>() == doctest::Approx(0.5));
  const json jn = leakage_to_json(rep, Units::nats);
  CHECK(jn.at("total_rate").get<double>() ==
        doctest::Approx(0.5 * kLn2).epsilon(1e-12));
  CHECK(jn.at("units") == "nats");

  const std::string csv = leakage_csv(rep, Units::bits);
  CHECK(csv.rfind("t,leakage\n", 0) == 0);

  CHECK(units_from_string("nats") == Units::nats);
  CHECK_THROWS_AS(units_from_string("trits"), SpecError);
}

TEST_CASE("solution JSON round trip revalidates invariants") {
  const SystemSpec spec = SystemSpec::binary();
  const SingleLetterSolution sol = minimize_leakage(spec);
  const json j = solution_to_json(sol);
  CHECK(j.at("J_star_nats").get<double>() ==
        doctest::Approx(sol.J_star_bits * kLn2));
  const SingleLetterSolution back = solution_from_json(spec, j);
  CHECK(back.J_star_bits == sol.J_star_bits);
  CHECK(back.theta_star.probs == sol.theta_star.probs);
  CHECK(back.b_star.t == sol.b_star.t);

  json corrupt = j;
  corrupt["b_star"][0][0] = 0.9;  // infeasible mass
  CHECK_THROWS_AS(static_cast<void>(solution_from_json(spec, corrupt)),
                  SpecError);
}
