#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qisdp/cone.hpp"
#include "qisdp/modeling.hpp"
#include "qisdp/npa.hpp"
#include "qisdp/qi_apps.hpp"

namespace qisdp {

using Json = nlohmann::json;

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

// SDPA sparse format. Matrix 0 is C, matrix k is A_k; negative block sizes
// are diagonal (LP) blocks and are merged into the nonnegative orthant.
ConeProblem parse_sdpa(const std::string& text);
// Free coordinates are written as pairs of LP entries (see split_free).
std::string write_sdpa(const ConeProblem& p);

// {"re": [[...]], "im": [[...]]}; "im" is optional. A bare nested array is
// read as a real matrix.
Json matrix_to_json(const CMat& m);
CMat matrix_from_json(const Json& j);

Json model_to_json(const Model& m);
Model model_from_json(const Json& j);

// Bell scenario: {"outcomes": [[2,2],[2,2]], "bell": {"constant": c, "terms":
// [{"outcomes": [a,b], "settings": [x,y], "coef": v}]}, "local_dims": [2,2]}.
// Prepare-and-measure: {"type": "prepare_measure", "preparations": 4,
// "measurements": 2, "outcomes": 2, "dimension": 2, "witness": [{"b","x","y","coef"}]}.
struct ScenarioFile {
  bool prepare_measure = false;
  Scenario scenario;
  BellExpr bell;
  std::vector<int> local_dims;
  int preparations = 0;
  int measurements = 0;
  int outcomes = 2;
  int dimension = 0;  // 0 when absent
  std::vector<PmTerm> witness;
};

ScenarioFile scenario_from_json(const Json& j);
Json scenario_to_json(const ScenarioFile& s);

// Edge list: first line the vertex count, then "u v" per edge and optional
// "w i weight" lines. '#' starts a comment.
Graph parse_graph(const std::string& text);
std::string write_graph(const Graph& g);

// {"nvars": n, "terms": [{"exps": [...], "coef": c}]}
Polynomial polynomial_from_json(const Json& j);

}  // namespace qisdp
