#pragma once

#include <string>

#include <json.hpp>

#include "bp/bounds.hpp"
#include "bp/convergence.hpp"
#include "bp/dp.hpp"
#include "bp/iidopt.hpp"
#include "bp/leakage.hpp"

namespace bp {

using nlohmann::json;

enum class Units { bits, nats };

Units units_from_string(const std::string& s);
inline double convert(double bits, Units u) {
  return u == Units::bits ? bits : bits * kLn2;
}

// System specifications:
// { "mx": int, "my": int, "ms": int,
//   "demand": {"iid": [p...]} | {"markov": {"Q": [[...]], "init": [...]}},
//   "initial_battery": [p...] }
json spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const json& j);

// Policies:
// {"kind": "structured", "theta": [...]}
// {"kind": "equiprobable"}
// {"kind": "table_b", "b": [[...]]}       rows ordered w = -mx ... ms
// {"kind": "table_a", "a": [[[...]]]}     nested [x][s][y]
// Callback policies are process-local and do not serialize.
json policy_to_json(const SystemSpec& spec, const Policy& policy);
Policy policy_from_json(const SystemSpec& spec, const json& j);

json leakage_to_json(const LeakageReport& report, Units units);
std::string leakage_csv(const LeakageReport& report, Units units);

json solution_to_json(const SingleLetterSolution& sol);
SingleLetterSolution solution_from_json(const SystemSpec& spec, const json& j);

json property_report_to_json(const PropertyReport& rep);
json convexity_report_to_json(const ConvexityReport& rep);
json converse_report_to_json(const ConverseReport& rep);
json convergence_report_to_json(const ConvergenceReport& rep,
                                const SubrectangularCertificate& cert);

json value_function_to_json(const ValueFunction& v);
json infinite_solution_to_json(const InfiniteHorizonSolution& sol, Units units);
json finite_solution_to_json(const FiniteHorizonSolution& sol, Units units);

std::string sweep_csv_header();

// file helpers
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bp
