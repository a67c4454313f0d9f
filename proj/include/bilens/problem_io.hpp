#pragma once

// JSON problem files. Three shapes are accepted:
//
//   single problem   {"n", "m", "A", "B", "Blist", "g", "x0", "xd", "tf", "R",
//                     "terminal_weight"?, "noise"?}
//   explicit ensemble {"n", "m", "tf", "R", "samples": [{"A", "B", "Blist",
//                     "g", "x0", "xd"}, ...], "noise"?}
//   built-in         {"scenario": name, "overrides"?: {name: value}}
//
// Matrices are row-major nested arrays. "noise" is {"kind": "poisson" |
// "wiener", "G": n x k, "lambda": k} and applies to every member.

#include <string>

#include "bilens/scenarios.hpp"

namespace bilens {

/// Throws InvalidArgument naming the line (syntax errors) or the field
/// (schema errors) at fault.
Scenario parse_problem_json(const std::string& text, const std::string& origin = "<string>");

Scenario load_problem_file(const std::string& path);

}  // namespace bilens
