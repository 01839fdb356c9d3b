// Copyright 2026 The shapeabs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

inline constexpr double kForbiddenEdge = 10000.0;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Exact min-cost assignment of every row to a distinct column.
/// Requires rows <= cols. Returns the column for each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

/// Mean absolute difference over (w, h, x, y).
double prim_distance(const Primitive& a, const Primitive& b);

struct Match {
  bool valid = false;
  double error = 0.0;               // sum of matched distances
  std::vector<int> assignment;      // out[i] -> target[assignment[i]]
};

/// Optimal injective match of `out` into `target`. In program mode the two
/// sets must have equal size, otherwise the match is invalid.
Match match_primitives(std::span<const Primitive> out,
                       std::span<const Primitive> target, double threshold,
                       bool program_mode = false);

/// Weighted token count of an expression. Calls count one shape token plus
/// their arguments; bodies are not expanded.
double program_complexity(const Expr& p, const TokenWeights& w);
inline double program_complexity(const Expr& p, const Library& lib) {
  return program_complexity(p, lib.config.weights);
}

/// Library weight of an abstraction, or nullopt when it must be rejected.
std::optional<double> omega(const Abstraction& f, const OmegaPolicy& policy);

/// One scene's contribution: complexity + error_weight * err, or infinity.
double scene_term(const Expr& p, const Scene& d, const Library& lib);

/// Mean scene term plus the sum of omegas. Infinity if any program is
/// invalid for its scene.
double objective(const Library& lib, std::span<const Expr> programs,
                 std::span<const Scene> scenes);

double library_weight(const Library& lib);

}  // namespace shapeabs
