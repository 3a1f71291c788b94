#pragma once

// JSON forms of models, measures, convex functions and solver reports.

#include <string>

#include "json.hpp"
#include "parisi/duality.hpp"
#include "parisi/hopf.hpp"
#include "parisi/measures.hpp"
#include "parisi/models.hpp"
#include "parisi/parisi.hpp"

namespace parisi::io {

using nlohmann::json;

/// {"terms": [{"degree": 2, "coeff": 1}], "dim": 1,
///  "spins": {"kind": "ising"} | {"kind": "atoms", "values": [[..]], "weights": [..]}}
/// or the shorthand {"name": "sk"}.
MixtureModel model_from_json(const json& j);
json to_json(const MixtureModel& m);

/// {"atoms": [..], "weights": [..]}
DiscreteMeasure measure_from_json(const json& j);
json to_json(const DiscreteMeasure& mu);

/// {"knots": [..], "slopes": [..]}
PLConvexFn chi_from_json(const json& j);
json to_json(const PLConvexFn& chi);

json to_json(const PsiValue& v);
json to_json(const SolverReport& r);

/// Reads a file, or parses the argument itself when it starts with '{'.
json load(const std::string& path_or_text);

}  // namespace parisi::io
