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

#include "shapeabs/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace shapeabs {

// Shortest-augmenting-path Hungarian method with potentials, rows <= cols.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  if (m < n) throw std::invalid_argument("assignment needs rows <= cols");
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInfinity);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInfinity;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j]) assign[p[j] - 1] = j - 1;
  return assign;
}

double prim_distance(const Primitive& a, const Primitive& b) {
  return (std::abs(a.w - b.w) + std::abs(a.h - b.h) + std::abs(a.x - b.x) +
          std::abs(a.y - b.y)) /
         4.0;
}

Match match_primitives(std::span<const Primitive> out,
                       std::span<const Primitive> target, double threshold,
                       bool program_mode) {
  if (out.empty()) throw std::invalid_argument("empty primitive set");
  Match m;
  if (out.size() > target.size()) return m;
  if (program_mode && out.size() != target.size()) return m;
  std::vector<std::vector<double>> cost(out.size(),
                                        std::vector<double>(target.size()));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double d = prim_distance(out[i], target[j]);
      cost[i][j] = d > threshold ? kForbiddenEdge : d;
    }
  m.assignment = solve_assignment(cost);
  m.valid = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double c = cost[i][static_cast<std::size_t>(m.assignment[i])];
    if (c >= kForbiddenEdge) {
      m.valid = false;
      m.error = kInfinity;
      return m;
    }
    m.error += c;
  }
  return m;
}

double program_complexity(const Expr& p, const TokenWeights& w) {
  double c = 0.0;
  switch (p.op) {
    case Op::Float: c = w.float_literal; break;
    case Op::Int:
    case Op::AxisX:
    case Op::AxisY: c = w.categorical; break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: c = w.float_fn; break;
    case Op::Union:
    case Op::SymRef:
    case Op::SymTrans:
    case Op::Move:
    case Op::Rect:
    case Op::Call: c = w.shape_fn; break;
    case Op::Param:
      throw DslError(DslError::Kind::Eval, "cannot price an unbound parameter");
  }
  for (const auto& ch : p.children) c += program_complexity(ch, w);
  return c;
}

namespace {
void collect_parametric(const Expr& e, std::set<std::string>& out) {
  if (is_parametric_op(e.op)) {
    out.insert(print(e));
    return;
  }
  for (const auto& c : e.children) collect_parametric(c, out);
}
}  // namespace

std::optional<double> omega(const Abstraction& f, const OmegaPolicy& policy) {
  int float_slots = 0;
  for (Type t : f.params)
    if (t == Type::Float) ++float_slots;
  if (float_slots > policy.max_float_slots) return std::nullopt;
  std::set<std::string> exprs;
  collect_parametric(f.body, exprs);
  double w = policy.base;
  w += policy.per_expression * static_cast<double>(exprs.size());
  w += f.body.op == Op::Union ? policy.doubleton : policy.singleton;
  const int extra = static_cast<int>(f.params.size()) - policy.free_slots;
  if (extra > 0) w += policy.per_extra_slot * extra;
  return std::clamp(w, policy.min, policy.max);
}

double scene_term(const Expr& p, const Scene& d, const Library& lib) {
  std::vector<Primitive> out;
  try {
    out = execute(p, &lib);
  } catch (const DslError&) {
    return kInfinity;
  }
  if (out.empty()) return kInfinity;
  const Match m =
      match_primitives(out, d.prims, lib.config.max_prim_error, true);
  if (!m.valid) return kInfinity;
  return program_complexity(p, lib) + lib.config.error_weight * m.error;
}

double library_weight(const Library& lib) {
  double s = 0.0;
  for (const auto& a : lib.abstractions()) s += a.omega;
  return s;
}

double objective(const Library& lib, std::span<const Expr> programs,
                 std::span<const Scene> scenes) {
  if (programs.size() != scenes.size())
    throw std::invalid_argument("programs and scenes differ in count");
  if (programs.empty()) return library_weight(lib);
  double sum = 0.0;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const double t = scene_term(programs[i], scenes[i], lib);
    if (!std::isfinite(t)) return kInfinity;
    sum += t;
  }
  return sum / static_cast<double>(programs.size()) + library_weight(lib);
}

}  // namespace shapeabs
