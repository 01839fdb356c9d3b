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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

using ClassId = std::uint32_t;
using NodeId = std::uint32_t;
inline constexpr ClassId kNoClass = 0xffffffffu;

/// Leaf and operator payloads:
///   Param -> float variable index (one per float occurrence at build time)
///   Float -> constant index
///   Int   -> integer value
///   Call  -> abstraction index in the graph's name table
struct ENode {
  Op op = Op::Float;
  std::uint8_t arity = 0;
  std::uint32_t payload = 0;
  std::uint32_t offset = 0;  // first child in the shared child arena
};

class EGraph {
 public:
  explicit EGraph(double value_tolerance = 0.005);

  // Construction. Children are canonicalised; identical nodes are shared.
  ClassId add_var(double v);
  ClassId add_const(double v);
  ClassId add_int(int k);
  ClassId add_axis(bool x_axis);
  ClassId add_op(Op op, std::initializer_list<ClassId> kids);
  ClassId add_op(Op op, const std::vector<ClassId>& kids);
  ClassId add_call(int fn, const std::vector<ClassId>& kids);

  /// Adds an expression tree. Floats become fresh variables; parameters
  /// resolve through `env`; calls also receive their inlined body in the
  /// same class when `lib` is given.
  ClassId add_expr(const Expr& e, const Library* lib = nullptr,
                   const std::vector<ClassId>& env = {});

  int call_index(const std::string& name);
  const std::vector<std::string>& call_names() const { return call_names_; }

  ClassId find(ClassId c) const;
  /// Unions two classes. Refused (returns false, logged) when both carry
  /// values that disagree beyond the tolerance.
  bool merge(ClassId a, ClassId b);
  /// Restores congruence closure and refreshes per-class node lists.
  void rebuild();

  /// Values every parametric class whose children are valued. Returns the
  /// number of newly valued classes.
  std::size_t value_pass();

  std::optional<double> value(ClassId c) const;
  bool is_float_class(ClassId c) const;

  std::size_t node_count() const { return live_; }
  std::size_t class_count() const;
  std::size_t conflicts() const { return conflicts_; }
  std::size_t unions() const { return unions_; }
  const std::vector<std::string>& conflict_log() const { return conflict_log_; }

  const ENode& node(NodeId n) const { return nodes_[n]; }
  ClassId node_class(NodeId n) const { return find(node_class_[n]); }
  ClassId child(const ENode& n, int i) const {
    return find(arena_[n.offset + static_cast<std::uint32_t>(i)]);
  }
  double const_value(std::uint32_t idx) const { return consts_[idx]; }
  double var_value(std::uint32_t idx) const { return vars_[idx]; }

  /// Nodes of a canonical class (valid after rebuild, appended to by adds).
  const std::vector<NodeId>& class_nodes(ClassId c) const;
  std::vector<ClassId> classes() const;
  /// Live nodes with the given operator, for rule indexing.
  const std::vector<NodeId>& nodes_with_op(Op op) const;

  std::map<Op, std::size_t> census() const;

 private:
  struct NodeHash {
    const EGraph* g;
    std::size_t operator()(NodeId n) const;
  };
  struct NodeEq {
    const EGraph* g;
    bool operator()(NodeId a, NodeId b) const;
  };

  ClassId intern(ENode n, const ClassId* kids);
  ClassId new_class(NodeId n);

  double tol_;
  std::vector<ENode> nodes_;
  std::vector<ClassId> arena_;
  std::vector<ClassId> node_class_;
  std::vector<char> dead_;
  std::size_t live_ = 0;
  mutable std::vector<ClassId> parent_;
  std::vector<std::optional<double>> values_;
  std::vector<std::vector<NodeId>> class_nodes_;
  std::vector<std::vector<NodeId>> by_op_;
  std::vector<char> float_class_;
  std::vector<double> vars_;
  std::vector<double> consts_;
  std::map<std::uint64_t, std::uint32_t> const_index_;
  std::vector<std::string> call_names_;
  std::unordered_set<NodeId, NodeHash, NodeEq> memo_;
  std::size_t conflicts_ = 0;
  std::size_t unions_ = 0;
  std::vector<std::string> conflict_log_;
};

// ---------------------------------------------------------------------------
// Patterns and rewrites
// ---------------------------------------------------------------------------

struct Pattern {
  int var = -1;  // >= 0: binds any class
  Op op = Op::Float;
  std::optional<std::uint32_t> payload;
  std::vector<Pattern> kids;
};

namespace pat {
Pattern v(int k);
Pattern node(Op op, std::vector<Pattern> kids);
Pattern leaf(Op op, std::uint32_t payload = 0);
}  // namespace pat

using Subst = std::vector<ClassId>;

/// All substitutions under which `p` matches some node of class `c`.
void ematch(const EGraph& g, const Pattern& p, ClassId c, Subst& s,
            std::vector<Subst>& out);

enum class RuleKind { Semantic, Abstraction, Arithmetic };

struct Rewrite {
  std::string name;
  RuleKind kind = RuleKind::Semantic;
  Pattern lhs;
  int nvars = 0;
  /// Checks conditions against the value map and adds the right-hand side.
  /// Returns the class to merge with the matched root, or kNoClass.
  std::function<ClassId(EGraph&, const Subst&)> apply;
};

struct SaturationBudget {
  int max_rounds = 8;
  std::size_t max_nodes = 50000;
  double max_seconds = 5.0;
};

struct SaturationStats {
  int rounds = 0;
  bool saturated = false;
  bool hit_node_limit = false;
  bool hit_time_limit = false;
  double seconds = 0.0;
  std::map<std::string, std::size_t> fired;
};

/// Rounds of match-all, apply-all, rebuild, value pass. `extra_round` runs
/// after the rules each round (used by the arithmetic-expansion scheme);
/// it returns true when it changed the graph.
SaturationStats saturate(EGraph& g, const std::vector<Rewrite>& rules,
                         const SaturationBudget& budget,
                         const std::function<bool(EGraph&)>& extra_round = {});

/// Minimum-cost term of a class under the token weights; ties prefer fewer
/// nodes. Variables and constants print as their real values.
Expr extract(const EGraph& g, ClassId root, const TokenWeights& w,
             double* cost_out = nullptr);

}  // namespace shapeabs
