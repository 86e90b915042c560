#include "bp/io.hpp"

#include <fstream>
#include <sstream>

namespace bp {

namespace {

VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw SpecError("expected a JSON array of numbers");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json vector_to_json(const VectorXd& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw SpecError("expected a JSON matrix");
  const std::size_t cols = j[0].size();
  MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw SpecError("ragged JSON matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const MatrixXd& m) {
  json j = json::array();
  for (int r = 0; r < m.rows(); ++r)
    j.push_back(vector_to_json(m.row(r).transpose()));
  return j;
}

}  // namespace

Units units_from_string(const std::string& s) {
  if (s == "bits") return Units::bits;
  if (s == "nats") return Units::nats;
  throw SpecError("units must be 'bits' or 'nats'");
}

json spec_to_json(const SystemSpec& spec) {
  json j;
  j["mx"] = spec.mx();
  j["my"] = spec.my();
  j["ms"] = spec.ms();
  if (spec.iid) {
    j["demand"] = {{"iid", vector_to_json(spec.demand_marginal.probs)}};
  } else {
    j["demand"] = {{"markov",
                    {{"Q", matrix_to_json(spec.demand_chain.rows)},
                     {"init", vector_to_json(spec.initial_demand.probs)}}}};
  }
  j["initial_battery"] = vector_to_json(spec.initial_battery.probs);
  return j;
}

SystemSpec spec_from_json(const json& j) {
  try {
    const int mx = j.at("mx").get<int>();
    const int my = j.at("my").get<int>();
    const int ms = j.at("ms").get<int>();
    const VectorXd battery = vector_from_json(j.at("initial_battery"));
    const json& demand = j.at("demand");
    if (demand.contains("iid"))
      return SystemSpec::make_iid(mx, my, ms, vector_from_json(demand["iid"]),
                                  battery);
    if (demand.contains("markov"))
      return SystemSpec::make_markov(
          mx, my, ms, matrix_from_json(demand["markov"].at("Q")),
          vector_from_json(demand["markov"].at("init")), battery);
    throw SpecError("demand must be 'iid' or 'markov'");
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed spec: ") + e.what());
  }
}

json policy_to_json(const SystemSpec& spec, const Policy& policy) {
  json j;
  if (const auto* c = std::get_if<ConstantB>(&policy)) {
    j["kind"] = "table_b";
    j["b"] = matrix_to_json(c->b.t);
    return j;
  }
  (void)spec;
  throw SpecError("only table policies serialize to JSON");
}

Policy policy_from_json(const SystemSpec& spec, const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "structured") {
      const Pmf theta(spec.battery, vector_from_json(j.at("theta")));
      return structured_policy(spec, theta);
    }
    if (kind == "equiprobable") return equiprobable_policy(spec);
    if (kind == "table_b") {
      ActionB b(spec.difference(), spec.consumption.size());
      b.t = matrix_from_json(j.at("b"));
      ConstantB out{std::move(b)};
      validate_action(spec, out.b);
      return out;
    }
    if (kind == "table_a") {
      const json& a_json = j.at("a");
      ActionA a(spec.demand.size(), spec.battery.size(),
                spec.consumption.size());
      for (int x = 0; x < a.nx; ++x)
        for (int s = 0; s < a.ns; ++s)
          for (int y = 0; y < a.ny; ++y)
            a.at(y, x, s) = a_json.at(x).at(s).at(y).get<double>();
      validate_action(spec, a);
      return BeliefPolicy{
          [a](const Belief& /*pi*/, int /*t*/) -> ActionA { return a; }};
    }
    throw SpecError("unknown policy kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed policy: ") + e.what());
  }
}

json leakage_to_json(const LeakageReport& report, Units units) {
  json j;
  j["horizon"] = report.horizon;
  j["units"] = units == Units::bits ? "bits" : "nats";
  j["method"] = report.method;
  j["total_rate"] = convert(report.total_rate, units);
  json steps = json::array();
  for (int t = 0; t < report.per_step.size(); ++t)
    steps.push_back(convert(report.per_step[t], units));
  j["per_step"] = steps;
  if (report.method == "monte_carlo") {
    j["ci_halfwidth"] = convert(report.ci_halfwidth, units);
    j["sample_count"] = report.sample_count;
  } else {
    j["pruned_mass"] = report.pruned_mass;
  }
  return j;
}

std::string leakage_csv(const LeakageReport& report, Units units) {
  std::ostringstream out;
  out << "t,leakage\n";
  out.precision(12);
  for (int t = 0; t < report.per_step.size(); ++t)
    out << (t + 1) << ',' << convert(report.per_step[t], units) << '\n';
  return out.str();
}

json solution_to_json(const SingleLetterSolution& sol) {
  json j;
  j["theta_star"] = vector_to_json(sol.theta_star.probs);
  j["xi_star"] = vector_to_json(sol.xi_star.xi);
  j["b_star"] = matrix_to_json(sol.b_star.t);
  j["J_star_bits"] = sol.J_star_bits;
  j["J_star_nats"] = sol.J_star_bits * kLn2;
  j["iterations"] = sol.iterations;
  j["gradient_norm"] = sol.gradient_norm;
  j["converged"] = sol.converged;
  return j;
}

SingleLetterSolution solution_from_json(const SystemSpec& spec, const json& j) {
  try {
    SingleLetterSolution sol;
    sol.theta_star = Pmf(spec.battery, vector_from_json(j.at("theta_star")));
    sol.xi_star = XiBelief(spec.difference(), vector_from_json(j.at("xi_star")));
    sol.b_star = ActionB(spec.difference(), spec.consumption.size());
    sol.b_star.t = matrix_from_json(j.at("b_star"));
    sol.J_star_bits = j.at("J_star_bits").get<double>();
    sol.iterations = j.value("iterations", 0L);
    sol.gradient_norm = j.value("gradient_norm", 0.0);
    sol.converged = j.value("converged", true);
    validate_action(spec, sol.b_star);
    return sol;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed solution: ") + e.what());
  }
}

json property_report_to_json(const PropertyReport& rep) {
  return json{{"symmetry_applicable", rep.symmetry_applicable},
              {"symmetry_ok", rep.symmetry_ok},
              {"symmetry_error", rep.symmetry_error},
              {"unimodal_applicable", rep.unimodal_applicable},
              {"unimodal_ok", rep.unimodal_ok},
              {"unimodal_error", rep.unimodal_error}};
}

json convexity_report_to_json(const ConvexityReport& rep) {
  return json{{"trials", rep.trials},
              {"violations", rep.violations},
              {"min_slack", rep.min_slack}};
}

json converse_report_to_json(const ConverseReport& rep) {
  return json{{"trials", rep.trials},
              {"min_slack", rep.min_slack},
              {"slack_at_optimum", rep.slack_at_optimum},
              {"violations", rep.violations}};
}

json convergence_report_to_json(const ConvergenceReport& rep,
                                const SubrectangularCertificate& cert) {
  json inits = json::array();
  for (const auto& init : rep.inits) {
    inits.push_back(json{{"theta_init", vector_to_json(init.theta_init)},
                         {"final_tv", init.final_tv},
                         {"cesaro_leakage", init.cesaro_leakage}});
  }
  return json{{"horizon", rep.horizon},
              {"target_rate", rep.target_rate},
              {"subrectangular", cert.ok},
              {"word_length", cert.word.size()},
              {"inits", inits}};
}

json value_function_to_json(const ValueFunction& v) {
  json j;
  j["dimension"] = v.grid->dim();
  j["resolution"] = v.grid->resolution();
  j["values"] = vector_to_json(v.values);
  if (!v.actions.empty()) {
    json acts = json::array();
    for (const MatrixXd& a : v.actions) acts.push_back(matrix_to_json(a));
    j["actions"] = std::move(acts);
  }
  return j;
}

json infinite_solution_to_json(const InfiniteHorizonSolution& sol,
                               Units units) {
  json j;
  j["J"] = convert(sol.J, units);
  j["units"] = units == Units::bits ? "bits" : "nats";
  j["converged"] = sol.converged;
  j["span"] = sol.span;
  j["iterations"] = sol.iterations;
  j["ergodicity_warning"] = sol.ergodicity_warning;
  j["value_function"] = value_function_to_json(sol.v);
  return j;
}

json finite_solution_to_json(const FiniteHorizonSolution& sol, Units units) {
  json j;
  j["rate"] = convert(sol.rate, units);
  j["units"] = units == Units::bits ? "bits" : "nats";
  j["inner_all_converged"] = sol.inner_all_converged;
  j["worst_inner_pg"] = sol.worst_inner_pg;
  j["value_function"] = value_function_to_json(sol.stages.front());
  return j;
}

std::string sweep_csv_header() { return "mx,ms,J_star,J_eq,ci\n"; }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SpecError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot open file for writing: " + path);
  out << content;
}

}  // namespace bp
