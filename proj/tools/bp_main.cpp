// Command-line front end: spec/policy I/O, solvers, evaluation, certificates,
// and sweep/bounds table export. Exit codes: 0 success, 2 validation error,
// 3 numerical non-convergence, 4 budget exceeded.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "bp/io.hpp"
#include "bp/parallel.hpp"
#include "bp/rng.hpp"

namespace {

using namespace bp;

void emit(const std::optional<std::string>& path, const std::string& content) {
  if (path)
    write_text_file(*path, content);
  else
    std::cout << content;
}

void emit_json(const std::optional<std::string>& path, const json& j) {
  emit(path, j.dump(2) + "\n");
}

// "2..50", "1:8", or a single number
std::pair<double, double> parse_range(const std::string& text) {
  for (const std::string sep : {"..", ":"}) {
    const auto pos = text.find(sep);
    if (pos != std::string::npos)
      return {std::stod(text.substr(0, pos)),
              std::stod(text.substr(pos + sep.size()))};
  }
  const double v = std::stod(text);
  return {v, v};
}

int run(int argc, char** argv) {
  CLI::App app{"battery charging policies that hide demand from the meter"};
  app.require_subcommand(1);

  std::string spec_path, policy_path, solution_path, units_name = "bits";
  std::optional<std::string> out_path;
  std::optional<std::string> csv_path;
  int horizon = 0;
  long samples = 0;
  std::uint64_t seed = 1;
  int resolution = 0;
  double tol = 0.0;
  bool infinite = false;
  std::string range_text, step_text = "0.5";
  int trials = 1000;
  int verify_T = 300;
  int sweep_horizon = 200;
  long sweep_samples = 10000;

  auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
    if (needs_spec)
      cmd->add_option("--spec", spec_path, "system spec JSON")->required();
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--units", units_name, "bits|nats")
        ->check(CLI::IsMember({"bits", "nats"}));
  };

  auto* solve_iid = app.add_subcommand("solve-iid", "single-letter optimum");
  add_common(solve_iid);
  solve_iid->add_option("--tol", tol, "projected-gradient tolerance");

  auto* solve_dp = app.add_subcommand("solve-dp", "belief-space dynamic program");
  add_common(solve_dp);
  solve_dp->add_option("--horizon", horizon, "finite horizon T");
  solve_dp->add_flag("--infinite", infinite, "infinite-horizon average cost");
  solve_dp->add_option("--resolution", resolution, "simplex grid resolution");
  solve_dp->add_option("--tol", tol, "stopping tolerance");

  auto* eval = app.add_subcommand("eval", "evaluate a policy's leakage");
  add_common(eval);
  std::size_t budget = ExactOptions{}.node_budget;
  eval->add_option("--policy", policy_path, "policy JSON")->required();
  eval->add_option("--horizon", horizon, "horizon T")->required();
  eval->add_option("--samples", samples, "Monte Carlo paths (default: exact)");
  eval->add_option("--seed", seed, "Monte Carlo seed");
  eval->add_option("--budget", budget, "exact enumeration node budget");
  eval->add_option("--csv", csv_path, "also write per-step CSV here");

  auto* simulate_cmd = app.add_subcommand("simulate", "sample a trajectory");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--policy", policy_path, "policy JSON")->required();
  simulate_cmd->add_option("--horizon", horizon, "steps")->required();
  simulate_cmd->add_option("--seed", seed, "RNG seed");

  auto* verify = app.add_subcommand("verify-convergence",
                                    "filter forgetting under a fixed policy");
  add_common(verify);
  verify->add_option("--solution", solution_path, "solve-iid output JSON")
      ->required();
  verify->add_option("--T", verify_T, "propagation horizon");

  auto* certify = app.add_subcommand(
      "certify", "property, convexity, and converse certificates");
  add_common(certify);
  certify->add_option("--solution", solution_path,
                      "solve-iid output JSON (default: solve now)");
  certify->add_option("--trials", trials, "random trials per certificate");
  certify->add_option("--seed", seed, "RNG seed");

  auto* bounds_cmd =
      app.add_subcommand("bounds", "continuous-alphabet closed-form bounds");
  add_common(bounds_cmd, /*needs_spec=*/false);
  bounds_cmd->add_option("--B", range_text, "capacity or range, e.g. 2..50")
      ->required();
  bounds_cmd->add_option("--step", step_text, "range step");

  auto* sweep = app.add_subcommand(
      "sweep", "optimal vs equiprobable leakage across battery sizes");
  add_common(sweep);
  sweep->add_option("--ms", range_text, "battery range, e.g. 1:8")->required();
  sweep->add_option("--horizon", sweep_horizon, "Monte Carlo horizon");
  sweep->add_option("--samples", sweep_samples, "Monte Carlo paths");
  sweep->add_option("--seed", seed, "base seed");

  CLI11_PARSE(app, argc, argv);
  const Units units = units_from_string(units_name);

  if (solve_iid->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    MinimizeOptions opt;
    if (tol > 0.0) opt.tol = tol;
    const SingleLetterSolution sol = minimize_leakage(spec, opt);
    emit_json(out_path, solution_to_json(sol));
    return sol.converged ? 0 : 3;
  }

  if (solve_dp->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    if (infinite == (horizon > 0))
      throw SpecError("choose exactly one of --horizon or --infinite");
    if (infinite) {
      if (resolution == 0)
        resolution = spec.difference().size() <= 3 ? 40 : 12;
      RviOptions opt;
      if (tol > 0.0) opt.tol = tol;
      const InfiniteHorizonSolution sol = solve_iid_infinite(spec, resolution, opt);
      emit_json(out_path, infinite_solution_to_json(sol, units));
      return sol.converged ? 0 : 3;
    }
    if (resolution == 0)
      resolution = spec.demand.size() * spec.battery.size() <= 4 ? 24 : 8;
    const FiniteHorizonSolution sol = solve_finite_horizon(spec, horizon, resolution);
    emit_json(out_path, finite_solution_to_json(sol, units));
    return 0;
  }

  if (eval->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    const Policy policy = policy_from_json(spec, read_json_file(policy_path));
    ExactOptions opt;
    opt.node_budget = budget;
    const LeakageReport report =
        samples > 0 ? monte_carlo_leakage(spec, policy, horizon, samples, seed)
                    : exact_leakage(spec, policy, horizon, opt);
    if (csv_path) write_text_file(*csv_path, leakage_csv(report, units));
    emit_json(out_path, leakage_to_json(report, units));
    return 0;
  }

  if (simulate_cmd->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    const Policy policy = policy_from_json(spec, read_json_file(policy_path));
    emit(out_path, simulate(spec, policy, horizon, seed).to_csv());
    return 0;
  }

  if (verify->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    const SingleLetterSolution sol =
        solution_from_json(spec, read_json_file(solution_path));
    const auto cert = subrectangular_certificate(spec, sol.b_star);
    std::vector<Pmf> inits = {
        Pmf::atom(spec.battery, 0), Pmf::atom(spec.battery, spec.ms()),
        Pmf::uniform(spec.battery), sol.theta_star};
    VectorXd ramp(spec.battery.size());
    for (int s = 0; s < ramp.size(); ++s) ramp[s] = s + 1.0;
    inits.emplace_back(spec.battery, ramp / ramp.sum());
    const ConvergenceReport rep = empirical_convergence(
        spec, sol.b_star, sol.theta_star, inits, verify_T);
    emit_json(out_path, convergence_report_to_json(rep, cert));
    return 0;
  }

  if (certify->parsed()) {
    const SystemSpec spec = spec_from_json(read_json_file(spec_path));
    const SingleLetterSolution sol =
        solution_path.empty()
            ? minimize_leakage(spec)
            : solution_from_json(spec, read_json_file(solution_path));
    json j;
    j["properties"] =
        property_report_to_json(certify_properties(sol, spec.demand_marginal));
    j["convexity"] = convexity_report_to_json(
        convexity_probe(spec.demand_marginal, spec.battery, trials, seed));
    j["converse"] = converse_report_to_json(
        verify_dp_converse(spec, sol, trials, derive_seed(seed, 1)));
    j["J_star_bits"] = sol.J_star_bits;
    emit_json(out_path, j);
    return 0;
  }

  if (bounds_cmd->parsed()) {
    const auto [lo, hi] = parse_range(range_text);
    const double step = std::stod(step_text);
    std::ostringstream csv;
    csv.precision(12);
    csv << "B,lower,achievable,gap\n";
    for (const auto& row : bounds_sweep(lo, hi, step))
      csv << row.B << ',' << convert(row.lower, units) << ','
          << convert(row.achievable, units) << ',' << convert(row.gap, units)
          << '\n';
    emit(out_path, csv.str());
    return 0;
  }

  if (sweep->parsed()) {
    const SystemSpec base = spec_from_json(read_json_file(spec_path));
    if (!base.iid) throw SpecError("sweep requires i.i.d. demand");
    const auto [lo, hi] = parse_range(range_text);
    std::ostringstream csv;
    csv.precision(10);
    csv << sweep_csv_header();
    bool any_failed = false;
    for (int ms = static_cast<int>(lo); ms <= static_cast<int>(hi); ++ms) {
      try {
        const SystemSpec cell = SystemSpec::make_iid(
            base.mx(), base.my(), ms, base.demand_marginal.probs,
            VectorXd::Constant(ms + 1, 1.0 / (ms + 1)));
        const SingleLetterSolution sol = minimize_leakage(cell);
        const std::uint64_t cell_seed =
            derive_seed(derive_seed(seed, cell.mx()), ms);
        const LeakageReport eq = monte_carlo_leakage(
            cell, equiprobable_policy(cell), sweep_horizon, sweep_samples, cell_seed);
        csv << cell.mx() << ',' << ms << ',' << convert(sol.J_star_bits, units)
            << ',' << convert(eq.total_rate, units) << ','
            << convert(eq.ci_halfwidth, units) << '\n';
      } catch (const std::exception& e) {
        any_failed = true;
        std::cerr << json{{"cell_ms", ms}, {"error", e.what()}}.dump() << '\n';
        csv << base.mx() << ',' << ms << ",nan,nan,nan\n";
      }
    }
    emit(out_path, csv.str());
    return any_failed ? 3 : 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bp::BudgetExceededError& e) {
    std::cerr << bp::json{{"error", e.what()}, {"code", 4}}.dump() << '\n';
    return 4;
  } catch (const bp::SpecError& e) {
    std::cerr << bp::json{{"error", e.what()}, {"code", 2}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << bp::json{{"error", e.what()}, {"code", 1}}.dump() << '\n';
    return 1;
  }
}
