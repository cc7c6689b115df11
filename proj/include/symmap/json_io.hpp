#pragma once

// JSON forms of matrices, problems, preconditioner configs and expressions.

#include <string>
#include <vector>

#include <json.hpp>

#include "symmap/expr.hpp"
#include "symmap/precond.hpp"
#include "symmap/problems.hpp"
#include "symmap/sparse.hpp"

namespace symmap {

using json = nlohmann::ordered_json;

/// {nrows, ncols, triplets: [[i, j, v], ...]}
json matrix_to_json(const CsrMatrix& a);
CsrMatrix matrix_from_json(const json& j);

/// {family, features, grid_n, seed, matrix, b}
json problem_to_json(const ProblemInstance& p);
ProblemInstance problem_from_json(const json& j);

/// One problem per line. Errors name the offending line.
void write_problems_jsonl(const std::string& path, const std::vector<ProblemInstance>& problems);
std::vector<ProblemInstance> read_problems_jsonl(const std::string& path);

/// {kind, omega?, theta?, sweeps?, smoother?}; only fields the kind uses are written.
json precond_to_json(const PrecondConfig& c);
PrecondConfig precond_from_json(const json& j);

/// {tokens: [ids], constants: [...], infix: "..."}; the infix is display only.
json expression_to_json(const Expression& e);
Expression expression_from_json(const json& j);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

} // namespace symmap
