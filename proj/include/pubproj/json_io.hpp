#pragma once

#include <string>

#include <json.hpp>

#include "pubproj/audit.hpp"
#include "pubproj/instance.hpp"
#include "pubproj/lottery.hpp"
#include "pubproj/mechanism.hpp"

namespace pubproj {

using Json = nlohmann::ordered_json;

// Canonical artifact form: fixed field order (construction order), 2-space
// indentation, floating-point numbers at 17 significant digits so a reparse
// reproduces the exact doubles.
std::string canonical_dump(const Json& j);

MrsValuation valuation_from_json(const nlohmann::json& j, int project_count);
Json valuation_to_json(const MrsValuation& v);

Instance instance_from_json(const nlohmann::json& j);
Json instance_to_json(const Instance& inst);

// Parses a file; parse and schema errors surface as InputError with
// line/column or the offending field.
Instance load_instance_file(const std::string& path);

Json solve_report_to_json(const SolveReport& rep);
Json outcome_to_json(const MechanismOutcome& out);
Json distribution_to_json(const ExactDistribution& dist);
Json audit_to_json(const AuditReport& rep);

}  // namespace pubproj
