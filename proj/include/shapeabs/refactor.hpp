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

#include <map>
#include <string>
#include <vector>

#include "shapeabs/egraph.hpp"

namespace shapeabs {

struct RefactorConfig {
  double cond_tolerance = 0.005;
  double value_tolerance = 0.005;
  SaturationBudget budget;
  bool verify = true;
};

/// The sixteen value-aware identities of the 2D language.
std::vector<Rewrite> semantic_rewrites(double cond_tolerance);

/// A slot whose value must equal `expected` (an expression over the
/// abstraction's parameters) for the abstraction rewrite to fire.
struct SlotCondition {
  int var = 0;
  Expr expected;
};

/// Left-hand side of an abstraction rewrite plus its lazy conditions.
struct CompiledAbstraction {
  std::string name;
  Pattern lhs;
  int nvars = 0;
  std::vector<int> param_var;  // pattern variable bound for each parameter
  std::vector<SlotCondition> conditions;
  std::vector<Type> param_types;
};

enum class ConditionScheme {
  Conditional,  // parametric slots checked against the value map
  Structural,   // parametric slots matched as Add/Sub/... e-nodes
};

/// `resolve` maps an abstraction name to its call index in the graph.
CompiledAbstraction compile_abstraction(
    const Abstraction& a, const std::function<int(const std::string&)>& resolve,
    ConditionScheme scheme = ConditionScheme::Conditional);

/// Human-readable `lhs | conditions` form, e.g.
/// `SymRef(Move(Rect(?0,?1),?2,?3),AX) | ?2=Add(P0,P1), ?3=Sub(P1,P0)`.
std::string describe(const CompiledAbstraction& c,
                     const std::vector<std::string>& call_names = {});

Rewrite make_abstraction_rewrite(const CompiledAbstraction& c, int call_index,
                                 double cond_tolerance);

/// Registers the library's names in `g` (in library order) and returns one
/// rewrite per abstraction.
std::vector<Rewrite> abstraction_rewrites(
    EGraph& g, const Library& lib, double cond_tolerance,
    ConditionScheme scheme = ConditionScheme::Conditional);

struct RefactorResult {
  Expr program;
  double cost_before = 0.0;
  double cost_after = 0.0;
  bool fallback = false;  // soundness guard replaced the extracted program
  SaturationStats stats;
  std::size_t nodes = 0;
  std::size_t classes = 0;
  std::size_t conflicts = 0;
  std::map<Op, std::size_t> census;
};

/// Builds, saturates, and extracts the cheapest equivalent program.
RefactorResult refactor(const Expr& p, const Library& lib,
                        const RefactorConfig& cfg = {});

}  // namespace shapeabs
