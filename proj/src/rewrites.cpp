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

#include <cmath>
#include <optional>

#include "shapeabs/refactor.hpp"

namespace shapeabs {

namespace {

using pat::node;
using pat::v;

Pattern rect(Pattern w, Pattern h) { return node(Op::Rect, {std::move(w), std::move(h)}); }
Pattern move(Pattern s, Pattern a, Pattern b) {
  return node(Op::Move, {std::move(s), std::move(a), std::move(b)});
}
Pattern unite(Pattern a, Pattern b) { return node(Op::Union, {std::move(a), std::move(b)}); }
Pattern symref(Pattern s, Pattern axis) {
  return node(Op::SymRef, {std::move(s), std::move(axis)});
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Reuses an existing Mul(x, -1) rather than stacking another one.
ClassId negate(EGraph& g, ClassId c) {
  for (NodeId id : g.class_nodes(c)) {
    const ENode& n = g.node(id);
    if (n.op != Op::Mul) continue;
    const auto k = g.value(g.child(n, 1));
    bool is_const = false;
    for (NodeId kid : g.class_nodes(g.child(n, 1)))
      if (g.node(kid).op == Op::Float) is_const = true;
    if (is_const && k && *k == -1.0) return g.child(n, 0);
  }
  return g.add_op(Op::Mul, {c, g.add_const(-1.0)});
}

Rewrite rule(std::string name, Pattern lhs, int nvars,
             std::function<ClassId(EGraph&, const Subst&)> apply) {
  Rewrite r;
  r.name = std::move(name);
  r.kind = RuleKind::Semantic;
  r.lhs = std::move(lhs);
  r.nvars = nvars;
  r.apply = std::move(apply);
  return r;
}

}  // namespace

std::vector<Rewrite> semantic_rewrites(double tol) {
  std::vector<Rewrite> rules;

  rules.push_back(rule("union-commute", unite(v(0), v(1)), 2,
                       [](EGraph& g, const Subst& s) {
                         return g.add_op(Op::Union, {s[1], s[0]});
                       }));
  rules.push_back(rule("union-assoc-left", unite(v(0), unite(v(1), v(2))), 3,
                       [](EGraph& g, const Subst& s) {
                         return g.add_op(Op::Union,
                                         {g.add_op(Op::Union, {s[0], s[1]}), s[2]});
                       }));
  rules.push_back(rule("union-assoc-right", unite(unite(v(0), v(1)), v(2)), 3,
                       [](EGraph& g, const Subst& s) {
                         return g.add_op(Op::Union,
                                         {s[0], g.add_op(Op::Union, {s[1], s[2]})});
                       }));

  // Move(Move(s,a,b),c,d) -> Move(s,a+c,b+d), the sums as fresh constants.
  rules.push_back(rule(
      "move-fuse", move(move(v(0), v(1), v(2)), v(3), v(4)), 5,
      [](EGraph& g, const Subst& s) -> ClassId {
        const auto a = g.value(s[1]), b = g.value(s[2]);
        const auto c = g.value(s[3]), d = g.value(s[4]);
        if (!a || !b || !c || !d) return kNoClass;
        return g.add_op(Op::Move, {s[0], g.add_const(*a + *c), g.add_const(*b + *d)});
      }));

  // Move(s,a,b) -> Move(Move(s,a,0),0,b); only when both offsets are nonzero.
  rules.push_back(rule(
      "move-split", move(v(0), v(1), v(2)), 3,
      [tol](EGraph& g, const Subst& s) -> ClassId {
        const auto a = g.value(s[1]), b = g.value(s[2]);
        if (!a || !b || std::abs(*a) <= tol || std::abs(*b) <= tol) return kNoClass;
        const ClassId zero = g.add_const(0.0);
        return g.add_op(Op::Move, {g.add_op(Op::Move, {s[0], s[1], zero}), zero, s[2]});
      }));

  rules.push_back(rule("move-zero-elim", move(v(0), v(1), v(2)), 3,
                       [tol](EGraph& g, const Subst& s) -> ClassId {
                         const auto a = g.value(s[1]), b = g.value(s[2]);
                         if (!a || !b || std::abs(*a) > tol || std::abs(*b) > tol)
                           return kNoClass;
                         return s[0];
                       }));

  rules.push_back(rule("move-zero-intro", rect(v(0), v(1)), 2,
                       [](EGraph& g, const Subst& s) {
                         const ClassId zero = g.add_const(0.0);
                         return g.add_op(Op::Move,
                                         {g.add_op(Op::Rect, {s[0], s[1]}), zero, zero});
                       }));

  rules.push_back(rule("move-distribute-union", move(unite(v(0), v(1)), v(2), v(3)), 4,
                       [](EGraph& g, const Subst& s) {
                         return g.add_op(Op::Union,
                                         {g.add_op(Op::Move, {s[0], s[2], s[3]}),
                                          g.add_op(Op::Move, {s[1], s[2], s[3]})});
                       }));

  rules.push_back(rule(
      "move-factor-union",
      unite(move(v(0), v(1), v(2)), move(v(3), v(4), v(5))), 6,
      [tol](EGraph& g, const Subst& s) -> ClassId {
        const auto a = g.value(s[1]), b = g.value(s[2]);
        const auto c = g.value(s[4]), d = g.value(s[5]);
        if (!a || !b || !c || !d || !near(*a, *c, tol) || !near(*b, *d, tol))
          return kNoClass;
        return g.add_op(Op::Move, {g.add_op(Op::Union, {s[0], s[3]}), s[1], s[2]});
      }));

  // A centered rectangle is its own mirror image, so the reflected copy of
  // Move(Rect,a,b) sits at (-a,b).
  rules.push_back(rule(
      "symref-negate-x",
      symref(move(rect(v(0), v(1)), v(2), v(3)), pat::leaf(Op::AxisX)), 4,
      [](EGraph& g, const Subst& s) {
        const ClassId r = g.add_op(Op::Rect, {s[0], s[1]});
        return g.add_op(Op::SymRef,
                        {g.add_op(Op::Move, {r, negate(g, s[2]), s[3]}),
                         g.add_axis(true)});
      }));
  rules.push_back(rule(
      "symref-negate-y",
      symref(move(rect(v(0), v(1)), v(2), v(3)), pat::leaf(Op::AxisY)), 4,
      [](EGraph& g, const Subst& s) {
        const ClassId r = g.add_op(Op::Rect, {s[0], s[1]});
        return g.add_op(Op::SymRef,
                        {g.add_op(Op::Move, {r, s[2], negate(g, s[3])}),
                         g.add_axis(false)});
      }));

  rules.push_back(rule(
      "move-into-symtrans",
      move(node(Op::SymTrans, {v(0), v(1), v(2), v(3)}), v(4), v(5)), 6,
      [](EGraph& g, const Subst& s) {
        return g.add_op(Op::SymTrans,
                        {g.add_op(Op::Move, {s[0], s[4], s[5]}), s[1], s[2], s[3]});
      }));
  rules.push_back(rule(
      "symtrans-hoist-move",
      node(Op::SymTrans, {move(v(0), v(1), v(2)), v(3), v(4), v(5)}), 6,
      [](EGraph& g, const Subst& s) {
        return g.add_op(Op::Move,
                        {g.add_op(Op::SymTrans, {s[0], s[3], s[4], s[5]}), s[1], s[2]});
      }));

  auto mirror = [tol](bool x_axis) {
    return [tol, x_axis](EGraph& g, const Subst& s) -> ClassId {
      double val[8];
      for (int i = 0; i < 8; ++i) {
        const auto q = g.value(s[static_cast<std::size_t>(i)]);
        if (!q) return kNoClass;
        val[i] = *q;
      }
      if (!near(val[0], val[4], tol) || !near(val[1], val[5], tol)) return kNoClass;
      const bool ok = x_axis ? near(val[6], -val[2], tol) && near(val[7], val[3], tol)
                             : near(val[6], val[2], tol) && near(val[7], -val[3], tol);
      if (!ok) return kNoClass;
      const ClassId r = g.add_op(Op::Rect, {s[0], s[1]});
      return g.add_op(Op::SymRef,
                      {g.add_op(Op::Move, {r, s[2], s[3]}), g.add_axis(x_axis)});
    };
  };
  const Pattern pair = unite(move(rect(v(0), v(1)), v(2), v(3)),
                             move(rect(v(4), v(5)), v(6), v(7)));
  rules.push_back(rule("mirror-pair-x", pair, 8, mirror(true)));
  rules.push_back(rule("mirror-pair-y", pair, 8, mirror(false)));

  rules.push_back(rule("symref-distribute-union", symref(unite(v(0), v(1)), v(2)), 3,
                       [](EGraph& g, const Subst& s) {
                         return g.add_op(Op::Union,
                                         {g.add_op(Op::SymRef, {s[0], s[2]}),
                                          g.add_op(Op::SymRef, {s[1], s[2]})});
                       }));
  return rules;
}

}  // namespace shapeabs
