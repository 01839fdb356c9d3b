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

#include "shapeabs/refactor.hpp"

#include <cmath>

#include "shapeabs/objective.hpp"

namespace shapeabs {

namespace {

struct Compiler {
  const Abstraction& a;
  const std::function<int(const std::string&)>& resolve;
  ConditionScheme scheme;
  CompiledAbstraction out;

  int fresh() { return out.nvars++; }

  int param_var(int k) {
    int& slot = out.param_var[static_cast<std::size_t>(k)];
    if (slot < 0) slot = fresh();
    return slot;
  }

  // Float-typed position: a bare parameter binds or repeats; anything else
  // becomes a value condition (or a structural sub-pattern).
  Pattern float_slot(const Expr& e, bool direct) {
    if (e.op == Op::Param) {
      int& slot = out.param_var[static_cast<std::size_t>(e.index)];
      if (slot < 0 && direct) {
        slot = fresh();
        return pat::v(slot);
      }
      if (scheme == ConditionScheme::Structural) return pat::v(param_var(e.index));
      const int w = fresh();
      out.conditions.push_back({w, e});
      return pat::v(w);
    }
    if (scheme == ConditionScheme::Structural && is_parametric_op(e.op))
      return pat::node(e.op, {float_slot(e.children[0], false),
                              float_slot(e.children[1], false)});
    const int w = fresh();
    out.conditions.push_back({w, e});
    return pat::v(w);
  }

  Pattern walk(const Expr& e, Type expected) {
    switch (expected) {
      case Type::Float: return float_slot(e, true);
      case Type::Int:
        if (e.op == Op::Param) return pat::v(param_var(e.index));
        return pat::leaf(Op::Int, static_cast<std::uint32_t>(e.index));
      case Type::Axis:
        if (e.op == Op::Param) return pat::v(param_var(e.index));
        return pat::leaf(e.op);
      case Type::Shape: break;
    }
    std::vector<Type> kid_types;
    switch (e.op) {
      case Op::Union: kid_types = {Type::Shape, Type::Shape}; break;
      case Op::SymRef: kid_types = {Type::Shape, Type::Axis}; break;
      case Op::SymTrans: kid_types = {Type::Shape, Type::Axis, Type::Int, Type::Float}; break;
      case Op::Move: kid_types = {Type::Shape, Type::Float, Type::Float}; break;
      case Op::Rect: kid_types = {Type::Float, Type::Float}; break;
      case Op::Call:
        throw DslError(DslError::Kind::Invalid, "nested call needs callee types");
      default:
        throw DslError(DslError::Kind::Type, "SHAPE expected in abstraction body");
    }
    std::vector<Pattern> kids;
    for (std::size_t i = 0; i < e.children.size(); ++i)
      kids.push_back(walk(e.children[i], kid_types[i]));
    return pat::node(e.op, std::move(kids));
  }
};

std::string describe_pattern(const Pattern& p, const std::vector<std::string>& names) {
  if (p.var >= 0) return "?" + std::to_string(p.var);
  std::string s;
  switch (p.op) {
    case Op::AxisX: return "AX";
    case Op::AxisY: return "AY";
    case Op::Int: return std::to_string(p.payload.value_or(0));
    case Op::Call:
      s = p.payload && *p.payload < names.size() ? names[*p.payload]
                                                 : "Call#" + std::to_string(p.payload.value_or(0));
      break;
    default: s = std::string(op_name(p.op)); break;
  }
  s += '(';
  for (std::size_t i = 0; i < p.kids.size(); ++i) {
    if (i) s += ',';
    s += describe_pattern(p.kids[i], names);
  }
  return s + ')';
}

double eval_with(const Expr& e, const std::vector<double>& params) {
  switch (e.op) {
    case Op::Float: return e.value;
    case Op::Param: return params[static_cast<std::size_t>(e.index)];
    case Op::Add: return eval_with(e.children[0], params) + eval_with(e.children[1], params);
    case Op::Sub: return eval_with(e.children[0], params) - eval_with(e.children[1], params);
    case Op::Mul: return eval_with(e.children[0], params) * eval_with(e.children[1], params);
    case Op::Div: return eval_with(e.children[0], params) / eval_with(e.children[1], params);
    default: return std::nan("");
  }
}

}  // namespace

CompiledAbstraction compile_abstraction(
    const Abstraction& a, const std::function<int(const std::string&)>& resolve,
    ConditionScheme scheme) {
  Compiler c{a, resolve, scheme, {}};
  c.out.name = a.name;
  c.out.param_types = a.params;
  c.out.param_var.assign(a.params.size(), -1);
  // Calls inside the body: walk needs callee slot types, which the resolver
  // cannot give, so they are handled here by a local recursion.
  std::function<Pattern(const Expr&, Type)> walk = [&](const Expr& e, Type t) -> Pattern {
    if (t == Type::Shape && e.op == Op::Call) {
      const int idx = resolve(e.name);
      std::vector<Pattern> kids;
      for (const auto& k : e.children) {
        Type kt = Type::Float;
        if (k.op == Op::Int) kt = Type::Int;
        if (k.op == Op::AxisX || k.op == Op::AxisY) kt = Type::Axis;
        if (k.op == Op::Param) kt = a.params[static_cast<std::size_t>(k.index)];
        if (kt == Type::Float)
          kids.push_back(c.float_slot(k, true));
        else
          kids.push_back(c.walk(k, kt));
      }
      Pattern p = pat::node(Op::Call, std::move(kids));
      p.payload = static_cast<std::uint32_t>(idx);
      return p;
    }
    if (t != Type::Shape || e.op == Op::Rect) return c.walk(e, t);
    std::vector<Type> kid_types;
    switch (e.op) {
      case Op::Union: kid_types = {Type::Shape, Type::Shape}; break;
      case Op::SymRef: kid_types = {Type::Shape, Type::Axis}; break;
      case Op::SymTrans: kid_types = {Type::Shape, Type::Axis, Type::Int, Type::Float}; break;
      case Op::Move: kid_types = {Type::Shape, Type::Float, Type::Float}; break;
      default: return c.walk(e, t);
    }
    std::vector<Pattern> kids;
    for (std::size_t i = 0; i < e.children.size(); ++i)
      kids.push_back(walk(e.children[i], kid_types[i]));
    return pat::node(e.op, std::move(kids));
  };
  c.out.lhs = walk(a.body, Type::Shape);
  for (std::size_t k = 0; k < a.params.size(); ++k)
    if (c.out.param_var[k] < 0)
      throw DslError(DslError::Kind::Invalid,
                     a.name + ": parameter P" + std::to_string(k) +
                         " has no direct occurrence");
  return c.out;
}

std::string describe(const CompiledAbstraction& c,
                     const std::vector<std::string>& call_names) {
  std::string s = describe_pattern(c.lhs, call_names);
  if (!c.conditions.empty()) {
    s += " |";
    for (std::size_t i = 0; i < c.conditions.size(); ++i) {
      s += i ? ", " : " ";
      s += "?" + std::to_string(c.conditions[i].var) + "=" +
           print(c.conditions[i].expected);
    }
  }
  return s;
}

Rewrite make_abstraction_rewrite(const CompiledAbstraction& c, int call_index,
                                 double tol) {
  Rewrite r;
  r.name = c.name;
  r.kind = RuleKind::Abstraction;
  r.lhs = c.lhs;
  r.nvars = c.nvars;
  r.apply = [c, call_index, tol](EGraph& g, const Subst& s) -> ClassId {
    std::vector<double> params(c.param_types.size(), 0.0);
    for (std::size_t k = 0; k < c.param_types.size(); ++k) {
      if (c.param_types[k] != Type::Float) continue;
      const auto v = g.value(s[static_cast<std::size_t>(c.param_var[k])]);
      if (!v) return kNoClass;
      params[k] = *v;
    }
    for (const auto& cond : c.conditions) {
      const auto v = g.value(s[static_cast<std::size_t>(cond.var)]);
      if (!v) return kNoClass;
      const double want = eval_with(cond.expected, params);
      if (!std::isfinite(want) || std::abs(*v - want) > tol) return kNoClass;
    }
    std::vector<ClassId> args;
    args.reserve(c.param_var.size());
    for (int pv : c.param_var) args.push_back(s[static_cast<std::size_t>(pv)]);
    return g.add_call(call_index, args);
  };
  return r;
}

std::vector<Rewrite> abstraction_rewrites(EGraph& g, const Library& lib,
                                          double tol, ConditionScheme scheme) {
  for (const auto& a : lib.abstractions()) g.call_index(a.name);
  std::vector<Rewrite> rules;
  auto resolve = [&g](const std::string& n) { return g.call_index(n); };
  for (const auto& a : lib.abstractions()) {
    const CompiledAbstraction c = compile_abstraction(a, resolve, scheme);
    rules.push_back(make_abstraction_rewrite(c, g.call_index(a.name), tol));
  }
  return rules;
}

RefactorResult refactor(const Expr& p, const Library& lib, const RefactorConfig& cfg) {
  RefactorResult res;
  res.cost_before = program_complexity(p, lib);
  EGraph g(cfg.value_tolerance);
  std::vector<Rewrite> rules = abstraction_rewrites(g, lib, cfg.cond_tolerance);
  for (auto& r : semantic_rewrites(cfg.cond_tolerance)) rules.push_back(std::move(r));
  const ClassId root = g.add_expr(p, &lib);
  res.stats = saturate(g, rules, cfg.budget);
  res.program = extract(g, root, lib.config.weights, &res.cost_after);
  res.nodes = g.node_count();
  res.classes = g.class_count();
  res.conflicts = g.conflicts();
  res.census = g.census();
  if (res.cost_after > res.cost_before + 1e-9) {
    res.program = p;
    res.cost_after = res.cost_before;
  }
  if (cfg.verify && !(res.program == p)) {
    bool ok = false;
    try {
      const auto want = execute(p, &lib);
      const auto got = execute(res.program, &lib);
      if (!got.empty()) {
        const Match m = match_primitives(got, want, lib.config.max_prim_error, true);
        ok = m.valid;
      }
    } catch (const DslError&) {
      ok = false;
    }
    if (!ok) {
      res.fallback = true;
      res.program = p;
      res.cost_after = res.cost_before;
    }
  }
  return res;
}

}  // namespace shapeabs
