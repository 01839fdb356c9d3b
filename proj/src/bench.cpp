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

#include "shapeabs/bench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "shapeabs/wake.hpp"

namespace shapeabs {

Expr bench_expression(int float_params) {
  if (float_params < 4 || float_params % 4 != 0)
    throw std::invalid_argument("benchmark needs a positive multiple of 4 parameters");
  std::vector<Expr> bars;
  for (int i = 0; i < float_params / 4; ++i) {
    // distinct sizes so no two bars share values
    const double w = (5 + 3 * i) / 100.0, h = (11 + 7 * i) / 100.0;
    bars.push_back(ex::symref(
        ex::move(ex::rect(ex::lit(w), ex::lit(h)), ex::lit(std::round((w + h) * 100) / 100),
                 ex::lit(std::round((h - w) * 100) / 100)),
        ex::axis_x()));
  }
  return fold_union(bars);
}

Abstraction bench_abstraction() {
  std::vector<std::optional<Type>> slots;
  Abstraction a;
  a.name = "Abs_0";
  a.body = parse("SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)", nullptr, &slots);
  a.params = {Type::Float, Type::Float};
  return a;
}

std::function<bool(EGraph&)> arithmetic_expansion(int depth, double tolerance,
                                                  std::size_t max_nodes) {
  struct State {
    int level = 0;
    std::unordered_map<long long, ClassId> leaves;  // program floats by value
  };
  auto st = std::make_shared<State>();
  return [st, depth, tolerance, max_nodes](EGraph& g) {
    if (st->level >= depth) return false;
    std::vector<ClassId> floats;
    for (ClassId c : g.classes()) {
      const auto v = g.value(c);
      if (!v || !g.is_float_class(c)) continue;
      floats.push_back(c);
      if (st->level == 0) st->leaves.emplace(std::llround(*v / tolerance), c);
    }
    ++st->level;
    bool changed = false;
    for (ClassId a : floats)
      for (ClassId b : floats)
        for (Op op : {Op::Add, Op::Sub}) {
          if (g.node_count() > max_nodes) return true;  // saturate reports the limit
          if (op == Op::Add && b < a) continue;
          const double va = *g.value(a), vb = *g.value(b);
          const double v = op == Op::Add ? va + vb : va - vb;
          const std::size_t before = g.node_count();
          const ClassId c = g.add_op(op, {a, b});
          changed |= g.node_count() != before;
          // a term equal in value to a program float joins that float's class
          auto it = st->leaves.find(std::llround(v / tolerance));
          if (it != st->leaves.end() && g.find(it->second) != g.find(c)) g.merge(it->second, c);
        }
    return changed;
  };
}

BenchCell bench_one(int params, ConditionScheme scheme, const BenchConfig& cfg) {
  Library lib;
  lib.add(bench_abstraction());
  const Expr p = bench_expression(params);
  RefactorConfig rc;
  EGraph g(rc.value_tolerance);
  std::vector<Rewrite> rules = abstraction_rewrites(g, lib, rc.cond_tolerance, scheme);
  for (auto& r : semantic_rewrites(rc.cond_tolerance)) rules.push_back(std::move(r));
  const ClassId root = g.add_expr(p, &lib);
  SaturationBudget budget{cfg.max_rounds, cfg.max_nodes, cfg.timeout};
  std::function<bool(EGraph&)> extra;
  if (scheme == ConditionScheme::Structural)
    extra = arithmetic_expansion(cfg.expansion_depth, rc.value_tolerance, cfg.max_nodes);
  const SaturationStats st = saturate(g, rules, budget, extra);
  BenchCell cell;
  cell.seconds = st.seconds;
  cell.saturated = st.saturated;
  cell.timed_out = st.hit_time_limit;
  cell.node_limit = st.hit_node_limit;
  cell.nodes = g.node_count();
  if (!cell.timed_out && !cell.node_limit) {
    const Expr out = extract(g, g.find(root), lib.config.weights);
    std::vector<std::string> calls;
    collect_calls(out, calls);
    cell.calls = calls.size();
  }
  return cell;
}

std::vector<BenchRow> bench_rewrites(const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (int n : cfg.params) {
    BenchRow r;
    r.params = n;
    r.conditional = bench_one(n, ConditionScheme::Conditional, cfg);
    r.naive = bench_one(n, ConditionScheme::Structural, cfg);
    rows.push_back(r);
  }
  return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  auto cell = [](const BenchCell& c) {
    if (c.timed_out || c.node_limit) return std::string("X");
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << c.seconds;
    return os.str();
  };
  std::ostringstream os;
  os << "params\tconditional\tnaive\n";
  for (const auto& r : rows)
    os << r.params << '\t' << cell(r.conditional) << '\t' << cell(r.naive) << '\n';
  return os.str();
}

}  // namespace shapeabs
