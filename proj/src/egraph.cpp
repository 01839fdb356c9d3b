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

#include "shapeabs/egraph.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace shapeabs {

namespace {

bool float_op(Op op) {
  return op == Op::Param || op == Op::Float || is_parametric_op(op);
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

std::size_t EGraph::NodeHash::operator()(NodeId id) const {
  const ENode& n = g->nodes_[id];
  std::size_t h = mix(static_cast<std::size_t>(n.op), n.payload);
  h = mix(h, n.arity);
  for (std::uint32_t i = 0; i < n.arity; ++i) h = mix(h, g->arena_[n.offset + i]);
  return h;
}

bool EGraph::NodeEq::operator()(NodeId a, NodeId b) const {
  const ENode& x = g->nodes_[a];
  const ENode& y = g->nodes_[b];
  if (x.op != y.op || x.payload != y.payload || x.arity != y.arity) return false;
  for (std::uint32_t i = 0; i < x.arity; ++i)
    if (g->arena_[x.offset + i] != g->arena_[y.offset + i]) return false;
  return true;
}

EGraph::EGraph(double value_tolerance)
    : tol_(value_tolerance),
      by_op_(static_cast<std::size_t>(Op::Call) + 1),
      memo_(64, NodeHash{this}, NodeEq{this}) {}

ClassId EGraph::find(ClassId c) const {
  ClassId r = c;
  while (parent_[r] != r) r = parent_[r];
  while (parent_[c] != r) {
    const ClassId next = parent_[c];
    parent_[c] = r;
    c = next;
  }
  return r;
}

ClassId EGraph::new_class(NodeId n) {
  const ClassId c = static_cast<ClassId>(parent_.size());
  parent_.push_back(c);
  const ENode& node = nodes_[n];
  std::optional<double> v;
  if (node.op == Op::Param) v = vars_[node.payload];
  if (node.op == Op::Float) v = consts_[node.payload];
  values_.push_back(v);
  class_nodes_.push_back({n});
  float_class_.push_back(float_op(node.op) ? 1 : 0);
  node_class_[n] = c;
  by_op_[static_cast<std::size_t>(node.op)].push_back(n);
  return c;
}

ClassId EGraph::intern(ENode n, const ClassId* kids) {
  n.offset = static_cast<std::uint32_t>(arena_.size());
  for (std::uint32_t i = 0; i < n.arity; ++i) arena_.push_back(find(kids[i]));
  const NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(n);
  node_class_.push_back(kNoClass);
  dead_.push_back(0);
  auto it = memo_.find(id);
  if (it != memo_.end()) {
    const NodeId hit = *it;
    nodes_.pop_back();
    node_class_.pop_back();
    dead_.pop_back();
    arena_.resize(n.offset);
    return find(node_class_[hit]);
  }
  memo_.insert(id);
  ++live_;
  return new_class(id);
}

ClassId EGraph::add_var(double v) {
  ENode n;
  n.op = Op::Param;
  n.payload = static_cast<std::uint32_t>(vars_.size());
  vars_.push_back(v);
  return intern(n, nullptr);
}

ClassId EGraph::add_const(double v) {
  if (v == 0.0) v = 0.0;
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  auto it = const_index_.find(bits);
  std::uint32_t idx;
  if (it == const_index_.end()) {
    idx = static_cast<std::uint32_t>(consts_.size());
    consts_.push_back(v);
    const_index_.emplace(bits, idx);
  } else {
    idx = it->second;
  }
  ENode n;
  n.op = Op::Float;
  n.payload = idx;
  return intern(n, nullptr);
}

ClassId EGraph::add_int(int k) {
  ENode n;
  n.op = Op::Int;
  n.payload = static_cast<std::uint32_t>(k);
  return intern(n, nullptr);
}

ClassId EGraph::add_axis(bool x_axis) {
  ENode n;
  n.op = x_axis ? Op::AxisX : Op::AxisY;
  return intern(n, nullptr);
}

ClassId EGraph::add_op(Op op, std::initializer_list<ClassId> kids) {
  ENode n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(kids.size());
  return intern(n, kids.begin());
}

ClassId EGraph::add_op(Op op, const std::vector<ClassId>& kids) {
  ENode n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(kids.size());
  return intern(n, kids.data());
}

ClassId EGraph::add_call(int fn, const std::vector<ClassId>& kids) {
  ENode n;
  n.op = Op::Call;
  n.payload = static_cast<std::uint32_t>(fn);
  n.arity = static_cast<std::uint8_t>(kids.size());
  return intern(n, kids.data());
}

int EGraph::call_index(const std::string& name) {
  for (std::size_t i = 0; i < call_names_.size(); ++i)
    if (call_names_[i] == name) return static_cast<int>(i);
  call_names_.push_back(name);
  return static_cast<int>(call_names_.size() - 1);
}

namespace {
ClassId add_expr_impl(EGraph& g, const Expr& e, const Library* lib,
                      const std::vector<ClassId>& env, bool in_body) {
  switch (e.op) {
    case Op::Float: return in_body ? g.add_const(e.value) : g.add_var(e.value);
    case Op::Int: return g.add_int(e.index);
    case Op::AxisX: return g.add_axis(true);
    case Op::AxisY: return g.add_axis(false);
    case Op::Param:
      if (e.index < 0 || static_cast<std::size_t>(e.index) >= env.size())
        throw DslError(DslError::Kind::Eval,
                       "unbound parameter P" + std::to_string(e.index));
      return env[static_cast<std::size_t>(e.index)];
    default: break;
  }
  std::vector<ClassId> kids;
  kids.reserve(e.children.size());
  for (const auto& c : e.children)
    kids.push_back(add_expr_impl(g, c, lib, env, in_body));
  if (e.op != Op::Call) return g.add_op(e.op, kids);
  const ClassId call = g.add_call(g.call_index(e.name), kids);
  if (lib) {
    const Abstraction* a = lib->find(e.name);
    if (!a)
      throw DslError(DslError::Kind::UnknownFunction,
                     "unknown abstraction '" + e.name + "'");
    const ClassId body = add_expr_impl(g, a->body, lib, kids, true);
    g.merge(call, body);
  }
  return g.find(call);
}
}  // namespace

ClassId EGraph::add_expr(const Expr& e, const Library* lib,
                         const std::vector<ClassId>& env) {
  return add_expr_impl(*this, e, lib, env, !env.empty());
}

bool EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return true;
  const auto& va = values_[a];
  const auto& vb = values_[b];
  if (va && vb && std::abs(*va - *vb) > tol_) {
    ++conflicts_;
    if (conflict_log_.size() < 64)
      conflict_log_.push_back("refused merge of classes " + std::to_string(a) +
                              " (" + format_float(*va) + ") and " +
                              std::to_string(b) + " (" + format_float(*vb) + ")");
    return false;
  }
  if (class_nodes_[a].size() < class_nodes_[b].size() ||
      (class_nodes_[a].size() == class_nodes_[b].size() && b < a))
    std::swap(a, b);
  parent_[b] = a;
  if (!values_[a]) values_[a] = values_[b];
  float_class_[a] = float_class_[a] | float_class_[b];
  auto& dst = class_nodes_[a];
  auto& src = class_nodes_[b];
  dst.insert(dst.end(), src.begin(), src.end());
  src.clear();
  src.shrink_to_fit();
  ++unions_;
  return true;
}

void EGraph::rebuild() {
  bool changed = true;
  while (changed) {
    changed = false;
    memo_.clear();
    memo_.reserve(nodes_.size());
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      if (dead_[id]) continue;
      const ENode& n = nodes_[id];
      for (std::uint32_t i = 0; i < n.arity; ++i)
        arena_[n.offset + i] = find(arena_[n.offset + i]);
      auto [it, inserted] = memo_.insert(id);
      if (inserted) continue;
      const ClassId ca = find(node_class_[id]);
      const ClassId cb = find(node_class_[*it]);
      if (ca == cb) {
        dead_[id] = 1;
        --live_;
      } else if (merge(ca, cb)) {
        changed = true;
      }
    }
  }
  for (auto& l : class_nodes_) l.clear();
  for (auto& l : by_op_) l.clear();
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (dead_[id]) continue;
    class_nodes_[find(node_class_[id])].push_back(id);
    by_op_[static_cast<std::size_t>(nodes_[id].op)].push_back(id);
  }
}

std::size_t EGraph::value_pass() {
  std::size_t added = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div}) {
      for (NodeId id : by_op_[static_cast<std::size_t>(op)]) {
        if (dead_[id]) continue;
        const ClassId c = find(node_class_[id]);
        if (values_[c]) continue;
        const ENode& n = nodes_[id];
        const auto& a = values_[child(n, 0)];
        const auto& b = values_[child(n, 1)];
        if (!a || !b) continue;
        double v = 0.0;
        switch (op) {
          case Op::Add: v = *a + *b; break;
          case Op::Sub: v = *a - *b; break;
          case Op::Mul: v = *a * *b; break;
          default:
            if (std::abs(*b) < 1e-12) continue;
            v = *a / *b;
            break;
        }
        if (!std::isfinite(v)) continue;
        values_[c] = v;
        ++added;
        changed = true;
      }
    }
  }
  return added;
}

std::optional<double> EGraph::value(ClassId c) const { return values_[find(c)]; }

bool EGraph::is_float_class(ClassId c) const { return float_class_[find(c)] != 0; }

std::size_t EGraph::class_count() const {
  std::size_t n = 0;
  for (ClassId c = 0; c < parent_.size(); ++c)
    if (parent_[c] == c) ++n;
  return n;
}

const std::vector<NodeId>& EGraph::class_nodes(ClassId c) const {
  return class_nodes_[find(c)];
}

std::vector<ClassId> EGraph::classes() const {
  std::vector<ClassId> out;
  for (ClassId c = 0; c < parent_.size(); ++c)
    if (find(c) == c) out.push_back(c);
  return out;
}

const std::vector<NodeId>& EGraph::nodes_with_op(Op op) const {
  return by_op_[static_cast<std::size_t>(op)];
}

std::map<Op, std::size_t> EGraph::census() const {
  std::map<Op, std::size_t> out;
  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (!dead_[id]) ++out[nodes_[id].op];
  return out;
}

// ---------------------------------------------------------------------------
// Patterns
// ---------------------------------------------------------------------------

namespace pat {
Pattern v(int k) {
  Pattern p;
  p.var = k;
  return p;
}
Pattern node(Op op, std::vector<Pattern> kids) {
  Pattern p;
  p.op = op;
  p.kids = std::move(kids);
  return p;
}
Pattern leaf(Op op, std::uint32_t payload) {
  Pattern p;
  p.op = op;
  if (op == Op::Int || op == Op::Call || op == Op::Float) p.payload = payload;
  return p;
}
}  // namespace pat

void ematch(const EGraph& g, const Pattern& p, ClassId c, Subst& s,
            std::vector<Subst>& out) {
  c = g.find(c);
  if (p.var >= 0) {
    ClassId& slot = s[static_cast<std::size_t>(p.var)];
    if (slot == kNoClass) {
      slot = c;
      out.push_back(s);
      slot = kNoClass;
    } else if (g.find(slot) == c) {
      out.push_back(s);
    }
    return;
  }
  for (NodeId id : g.class_nodes(c)) {
    const ENode& n = g.node(id);
    if (n.op != p.op || n.arity != p.kids.size()) continue;
    if (p.payload && n.payload != *p.payload) continue;
    std::vector<Subst> cur{s};
    for (std::size_t i = 0; i < p.kids.size() && !cur.empty(); ++i) {
      std::vector<Subst> next;
      for (auto& t : cur) ematch(g, p.kids[i], g.child(n, static_cast<int>(i)), t, next);
      cur = std::move(next);
    }
    out.insert(out.end(), cur.begin(), cur.end());
  }
}

// ---------------------------------------------------------------------------
// Saturation
// ---------------------------------------------------------------------------

SaturationStats saturate(EGraph& g, const std::vector<Rewrite>& rules,
                         const SaturationBudget& budget,
                         const std::function<bool(EGraph&)>& extra_round) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  SaturationStats st;
  g.rebuild();
  g.value_pass();
  for (int round = 0; round < budget.max_rounds; ++round) {
    if (elapsed() > budget.max_seconds) {
      st.hit_time_limit = true;
      break;
    }
    const std::size_t n0 = g.node_count();
    const std::size_t u0 = g.unions();
    struct Hit {
      std::size_t rule;
      ClassId root;
      Subst subst;
    };
    std::vector<Hit> hits;
    bool stop = false;
    for (std::size_t r = 0; r < rules.size() && !stop; ++r) {
      const Rewrite& rule = rules[r];
      std::vector<ClassId> roots;
      if (rule.lhs.var >= 0) {
        roots = g.classes();
      } else {
        for (NodeId id : g.nodes_with_op(rule.lhs.op)) roots.push_back(g.node_class(id));
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
      }
      for (ClassId c : roots) {
        Subst s(static_cast<std::size_t>(rule.nvars), kNoClass);
        std::vector<Subst> found;
        ematch(g, rule.lhs, c, s, found);
        for (auto& f : found) hits.push_back({r, c, std::move(f)});
        if ((hits.size() & 1023) == 0 && elapsed() > budget.max_seconds) {
          st.hit_time_limit = true;
          stop = true;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < hits.size() && !stop; ++i) {
      if (g.node_count() > budget.max_nodes) {
        st.hit_node_limit = true;
        stop = true;
        break;
      }
      if ((i & 255) == 0 && elapsed() > budget.max_seconds) {
        st.hit_time_limit = true;
        stop = true;
        break;
      }
      const Rewrite& rule = rules[hits[i].rule];
      const std::size_t before = g.node_count();
      const ClassId rhs = rule.apply(g, hits[i].subst);
      bool fired = g.node_count() != before;
      if (rhs != kNoClass && g.find(rhs) != g.find(hits[i].root)) {
        if (g.merge(rhs, hits[i].root)) fired = true;
      }
      if (fired) ++st.fired[rule.name];
    }
    g.rebuild();
    g.value_pass();
    bool extra = false;
    if (!stop && extra_round) {
      extra = extra_round(g);
      g.rebuild();
      g.value_pass();
      if (g.node_count() > budget.max_nodes) {
        st.hit_node_limit = true;
        stop = true;
      }
      if (elapsed() > budget.max_seconds) {
        st.hit_time_limit = true;
        stop = true;
      }
    }
    st.rounds = round + 1;
    if (stop) break;
    if (g.node_count() == n0 && g.unions() == u0 && !extra) {
      st.saturated = true;
      break;
    }
  }
  st.seconds = elapsed();
  return st;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

namespace {
constexpr double kInfinityCost = 1e300;

double token_cost(Op op, const TokenWeights& w) {
  switch (op) {
    case Op::Param:
    case Op::Float: return w.float_literal;
    case Op::Int:
    case Op::AxisX:
    case Op::AxisY: return w.categorical;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: return w.float_fn;
    default: return w.shape_fn;
  }
}
}  // namespace

Expr extract(const EGraph& g, ClassId root, const TokenWeights& w,
             double* cost_out) {
  std::vector<ClassId> all = g.classes();
  ClassId max_id = 0;
  for (ClassId c : all) max_id = std::max(max_id, c);
  std::vector<double> cost(max_id + 1, kInfinityCost);
  std::vector<double> size(max_id + 1, kInfinityCost);
  std::vector<NodeId> best(max_id + 1, 0xffffffffu);
  bool changed = true;
  while (changed) {
    changed = false;
    for (ClassId c : all) {
      for (NodeId id : g.class_nodes(c)) {
        const ENode& n = g.node(id);
        double cs = token_cost(n.op, w);
        double sz = 1.0;
        bool finite = true;
        for (int i = 0; i < n.arity; ++i) {
          const ClassId k = g.child(n, i);
          if (!(cost[k] < kInfinityCost)) {
            finite = false;
            break;
          }
          cs += cost[k];
          sz += size[k];
        }
        if (!finite) continue;
        const double eps = 1e-9;
        if (cs < cost[c] - eps || (cs <= cost[c] + eps && sz < size[c])) {
          cost[c] = cs;
          size[c] = sz;
          best[c] = id;
          changed = true;
        }
      }
    }
  }
  root = g.find(root);
  if (!(cost[root] < kInfinityCost))
    throw std::logic_error("root class has no finite term");
  if (cost_out) *cost_out = cost[root];
  std::function<Expr(ClassId)> build = [&](ClassId c) -> Expr {
    const ENode& n = g.node(best[g.find(c)]);
    switch (n.op) {
      case Op::Param: return ex::lit(g.var_value(n.payload));
      case Op::Float: return ex::lit(g.const_value(n.payload));
      case Op::Int: return ex::integer(static_cast<int>(n.payload));
      case Op::AxisX: return ex::axis_x();
      case Op::AxisY: return ex::axis_y();
      default: break;
    }
    Expr e;
    e.op = n.op;
    if (n.op == Op::Call) e.name = g.call_names()[n.payload];
    for (int i = 0; i < n.arity; ++i) e.children.push_back(build(g.child(n, i)));
    return e;
  };
  return build(root);
}

}  // namespace shapeabs
