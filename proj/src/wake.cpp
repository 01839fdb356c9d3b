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

#include "shapeabs/wake.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace shapeabs {

Expr naive_expr(const Primitive& p) {
  Expr r = ex::rect(ex::lit(p.w), ex::lit(p.h));
  if (p.x == 0.0 && p.y == 0.0) return r;
  return ex::move(std::move(r), ex::lit(p.x), ex::lit(p.y));
}

Expr naive_program(const Scene& d) {
  if (d.prims.empty())
    throw DslError(DslError::Kind::Invalid, "naive program of an empty scene");
  std::vector<Expr> parts;
  for (const auto& p : d.prims) parts.push_back(naive_expr(p));
  return fold_union(parts);
}

std::vector<Expr> split_union(const Expr& p) {
  if (p.op != Op::Union) return {p};
  auto left = split_union(p.children[0]);
  auto right = split_union(p.children[1]);
  left.insert(left.end(), right.begin(), right.end());
  return left;
}

Expr fold_union(const std::vector<Expr>& parts) {
  if (parts.empty()) throw DslError(DslError::Kind::Invalid, "empty union");
  Expr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = ex::unite(std::move(acc), parts[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Search proposer
// ---------------------------------------------------------------------------

namespace {

struct Template {
  std::string call;  // empty for base skeletons
  Expr body;
  std::vector<Type> params;
};

const std::vector<Template>& base_templates() {
  static const std::vector<Template> t = [] {
    std::vector<Template> out;
    auto add = [&](const char* text) {
      std::vector<std::optional<Type>> slots;
      Template tp;
      tp.body = parse(text, nullptr, &slots);
      for (const auto& s : slots) tp.params.push_back(*s);
      out.push_back(std::move(tp));
    };
    add("Rect(P0,P1)");
    add("Move(Rect(P0,P1),P2,P3)");
    add("SymRef(Move(Rect(P0,P1),P2,P3),P4)");
    add("SymTrans(Move(Rect(P0,P1),P2,P3),P4,P5,P6)");
    add("SymRef(SymRef(Move(Rect(P0,P1),P2,P3),AX),AY)");
    add("SymRef(SymTrans(Move(Rect(P0,P1),P2,P3),P4,P5,P6),P7)");
    return out;
  }();
  return t;
}

// One template with its discrete slots fixed.
struct Instance {
  const Template* tpl;
  std::vector<Expr> args;       // discrete args set, float args placeholder
  std::vector<int> float_slots;  // indices of float params
};

Expr instantiate(const Instance& in, const std::vector<double>& theta) {
  std::vector<Expr> args = in.args;
  for (std::size_t j = 0; j < in.float_slots.size(); ++j)
    args[static_cast<std::size_t>(in.float_slots[j])] = ex::lit(theta[j]);
  if (!in.tpl->call.empty()) return ex::call(in.tpl->call, std::move(args));
  return substitute(in.tpl->body, args);
}

std::vector<Instance> discrete_instances(const Template& t, std::size_t cap) {
  std::vector<Instance> out;
  Instance base{&t, std::vector<Expr>(t.params.size(), ex::lit(0.0)), {}};
  for (std::size_t i = 0; i < t.params.size(); ++i)
    if (t.params[i] == Type::Float) base.float_slots.push_back(static_cast<int>(i));
  std::function<void(std::size_t, Instance&)> rec = [&](std::size_t i, Instance& cur) {
    if (out.size() >= cap) return;
    if (i == t.params.size()) {
      out.push_back(cur);
      return;
    }
    switch (t.params[i]) {
      case Type::Axis:
        for (bool x : {true, false}) {
          cur.args[i] = x ? ex::axis_x() : ex::axis_y();
          rec(i + 1, cur);
        }
        break;
      case Type::Int:
        for (int k = 1; k <= 4; ++k) {
          cur.args[i] = ex::integer(k);
          rec(i + 1, cur);
        }
        break;
      default: rec(i + 1, cur); break;
    }
  };
  rec(0, base);
  return out;
}

// Affine model of an instance: fields(theta) = c + A theta.
struct Affine {
  std::size_t outputs = 0;
  std::vector<double> c;               // 4 * outputs
  std::vector<std::vector<double>> a;  // (4 * outputs) x k
  std::vector<int> anchors;            // output prims pinned to reach full rank
};

bool fields(const Instance& in, const std::vector<double>& theta, const Library& lib,
            std::vector<double>& out) {
  try {
    const auto prims = execute(instantiate(in, theta), &lib);
    out.clear();
    for (const auto& p : prims) {
      out.push_back(p.w);
      out.push_back(p.h);
      out.push_back(p.x);
      out.push_back(p.y);
    }
    return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
  } catch (const DslError&) {
    return false;
  }
}

int rank_of(std::vector<std::vector<double>> m) {
  int rank = 0;
  const std::size_t cols = m.empty() ? 0 : m[0].size();
  for (std::size_t col = 0; col < cols && rank < static_cast<int>(m.size()); ++col) {
    std::size_t piv = static_cast<std::size_t>(rank);
    for (std::size_t r = piv; r < m.size(); ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-9) continue;
    std::swap(m[piv], m[static_cast<std::size_t>(rank)]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == static_cast<std::size_t>(rank)) continue;
      const double f = m[r][col] / m[static_cast<std::size_t>(rank)][col];
      for (std::size_t c = col; c < cols; ++c) m[r][c] -= f * m[static_cast<std::size_t>(rank)][c];
    }
    ++rank;
  }
  return rank;
}

std::optional<Affine> build_affine(const Instance& in, const Library& lib) {
  const std::size_t k = in.float_slots.size();
  Affine af;
  std::vector<double> theta(k, 0.0);
  if (!fields(in, theta, lib, af.c)) return std::nullopt;
  af.outputs = af.c.size() / 4;
  if (af.outputs == 0) return std::nullopt;
  af.a.assign(af.c.size(), std::vector<double>(k, 0.0));
  std::vector<double> f;
  for (std::size_t j = 0; j < k; ++j) {
    theta.assign(k, 0.0);
    theta[j] = 1.0;
    if (!fields(in, theta, lib, f) || f.size() != af.c.size()) return std::nullopt;
    for (std::size_t r = 0; r < f.size(); ++r) af.a[r][j] = f[r] - af.c[r];
  }
  // Reject anything not affine in its float slots.
  for (std::size_t j = 0; j < k; ++j) theta[j] = 0.37 + 0.11 * static_cast<double>(j);
  if (!fields(in, theta, lib, f) || f.size() != af.c.size()) return std::nullopt;
  for (std::size_t r = 0; r < f.size(); ++r) {
    double pred = af.c[r];
    for (std::size_t j = 0; j < k; ++j) pred += af.a[r][j] * theta[j];
    if (std::abs(pred - f[r]) > 1e-9) return std::nullopt;
  }
  std::vector<std::vector<double>> rows;
  int rank = 0;
  for (std::size_t o = 0; o < af.outputs && rank < static_cast<int>(k); ++o) {
    auto trial = rows;
    for (int q = 0; q < 4; ++q) trial.push_back(af.a[o * 4 + static_cast<std::size_t>(q)]);
    const int r = rank_of(trial);
    if (r > rank) {
      rows = std::move(trial);
      rank = r;
      af.anchors.push_back(static_cast<int>(o));
    }
  }
  if (rank < static_cast<int>(k)) return std::nullopt;
  return af;
}

// Least squares via normal equations; k is small.
bool solve_ls(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
              std::vector<double>& x) {
  const std::size_t k = a.empty() ? 0 : a[0].size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) m[i][j] += a[r][i] * a[r][j];
      m[i][k] += a[r][i] * b[r];
    }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col; r < k; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-12) return false;
    std::swap(m[piv], m[col]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
    }
  }
  x.resize(k);
  for (std::size_t i = 0; i < k; ++i) x[i] = m[i][k] / m[i][i];
  return true;
}

double snap(double v) {
  const double r = std::round(v * 1e10) / 1e10;
  return r == 0.0 ? 0.0 : r;
}

}  // namespace

std::vector<Expr> SearchProposer::propose(const std::vector<Primitive>& canvas,
                                          const Library& lib, const ProposerBudget& budget) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::vector<Expr> out;
  std::set<std::string> seen;
  std::vector<Template> templates = base_templates();
  for (const auto& a : lib.abstractions()) {
    Template t;
    t.call = a.name;
    t.body = a.body;
    t.params = a.params;
    templates.push_back(std::move(t));
  }
  const double thr = lib.config.max_prim_error;
  const std::size_t n = canvas.size();
  std::size_t tried = 0;
  auto over_budget = [&] {
    return tried >= budget.max_candidates ||
           std::chrono::duration<double>(Clock::now() - start).count() > budget.max_seconds;
  };
  for (const auto& tpl : templates) {
    for (const auto& inst : discrete_instances(tpl, 64)) {
      if (over_budget()) return out;
      const auto af = build_affine(inst, lib);
      if (!af || af->outputs > n) continue;
      const std::size_t r = af->anchors.size();
      std::vector<int> pick(r, -1);
      std::vector<char> used(n, 0);
      std::function<void(std::size_t)> dfs = [&](std::size_t depth) {
        if (over_budget()) return;
        if (depth == r) {
          ++tried;
          std::vector<std::vector<double>> a;
          std::vector<double> b;
          for (std::size_t i = 0; i < r; ++i) {
            const auto o = static_cast<std::size_t>(af->anchors[i]);
            const Primitive& p = canvas[static_cast<std::size_t>(pick[i])];
            const double tgt[4] = {p.w, p.h, p.x, p.y};
            for (std::size_t q = 0; q < 4; ++q) {
              a.push_back(af->a[o * 4 + q]);
              b.push_back(tgt[q] - af->c[o * 4 + q]);
            }
          }
          std::vector<double> theta;
          if (!solve_ls(a, b, theta)) return;
          for (auto& t : theta) t = snap(t);
          const Expr e = instantiate(inst, theta);
          std::vector<Primitive> prims;
          try {
            prims = execute(e, &lib);
          } catch (const DslError&) {
            return;
          }
          if (prims.empty() || prims.size() > n) return;
          if (!match_primitives(prims, canvas, thr).valid) return;
          std::string key = print(e);
          if (seen.insert(key).second) out.push_back(e);
          return;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (used[j]) continue;
          used[j] = 1;
          pick[depth] = static_cast<int>(j);
          dfs(depth + 1);
          used[j] = 0;
        }
      };
      dfs(0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Covers and the cache
// ---------------------------------------------------------------------------

bool expression_covers(const std::vector<Expr>& parts, const Scene& d, const Library& lib,
                       std::vector<std::vector<int>>& covers) {
  covers.clear();
  std::vector<int> remaining(d.prims.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
  for (const auto& e : parts) {
    std::vector<Primitive> out;
    try {
      out = execute(e, &lib);
    } catch (const DslError&) {
      return false;
    }
    if (out.empty() || out.size() > remaining.size()) return false;
    std::vector<Primitive> rem;
    for (int i : remaining) rem.push_back(d.prims[static_cast<std::size_t>(i)]);
    const Match m = match_primitives(out, rem, lib.config.max_prim_error);
    if (!m.valid) return false;
    std::vector<int> cov;
    std::vector<char> take(remaining.size(), 0);
    for (int j : m.assignment) {
      cov.push_back(remaining[static_cast<std::size_t>(j)]);
      take[static_cast<std::size_t>(j)] = 1;
    }
    std::sort(cov.begin(), cov.end());
    covers.push_back(std::move(cov));
    std::vector<int> next;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (!take[i]) next.push_back(remaining[i]);
    remaining = std::move(next);
  }
  return remaining.empty();
}

void ExprCache::add(const Expr& e, const Scene& d, const Library& lib) {
  std::vector<Primitive> out;
  try {
    out = execute(e, &lib);
  } catch (const DslError&) {
    return;
  }
  if (out.empty() || out.size() > d.prims.size()) return;
  const Match m = match_primitives(out, d.prims, lib.config.max_prim_error);
  if (!m.valid) return;
  CacheEntry c{e, m.assignment, program_complexity(e, lib)};
  std::sort(c.covered.begin(), c.covered.end());
  for (const auto& x : entries)
    if (x.covered == c.covered && x.expr == c.expr) return;
  entries.push_back(std::move(c));
}

void ExprCache::add_program(const Expr& p, const Scene& d, const Library& lib) {
  const auto parts = split_union(p);
  std::vector<std::vector<int>> covers;
  if (!expression_covers(parts, d, lib, covers)) return;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    CacheEntry c{parts[i], covers[i], program_complexity(parts[i], lib)};
    bool dup = false;
    for (const auto& x : entries)
      if (x.covered == c.covered && x.expr == c.expr) dup = true;
    if (!dup) entries.push_back(std::move(c));
  }
}

// ---------------------------------------------------------------------------
// Wake
// ---------------------------------------------------------------------------

namespace {

struct Scored {
  double per_prim = kInfinity;
  std::size_t cover = 0;
  std::size_t tokens = 0;
  std::string text;
};

bool better(const Scored& a, const Scored& b) {
  if (std::abs(a.per_prim - b.per_prim) > 1e-9) return a.per_prim < b.per_prim;
  if (a.cover != b.cover) return a.cover > b.cover;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.text < b.text;
}

}  // namespace

Expr wake_solve(const Scene& d, const Library& lib, Proposer& proposer,
                const ProposerBudget& budget, ExprCache* cache, WakeStats* stats) {
  if (d.prims.empty())
    throw DslError(DslError::Kind::Invalid, "wake on an empty scene");
  std::vector<int> remaining(d.prims.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
  std::vector<Expr> chosen;
  while (!remaining.empty()) {
    std::vector<Primitive> canvas;
    for (int i : remaining) canvas.push_back(d.prims[static_cast<std::size_t>(i)]);
    std::vector<Expr> cands = proposer.propose(canvas, lib, budget);
    for (const auto& p : canvas) cands.push_back(naive_expr(p));
    if (stats) {
      ++stats->steps;
      stats->candidates += cands.size();
    }
    Scored best;
    const Expr* best_expr = nullptr;
    std::vector<int> best_assign;
    for (const auto& e : cands) {
      std::vector<Primitive> out;
      try {
        out = execute(e, &lib);
      } catch (const DslError&) {
        continue;
      }
      if (out.empty() || out.size() > canvas.size()) continue;
      const Match m = match_primitives(out, canvas, lib.config.max_prim_error);
      if (!m.valid) continue;
      Scored s;
      // matched error is priced as in the objective so lossy fits pay for it
      s.per_prim = (program_complexity(e, lib) + lib.config.error_weight * m.error) /
                   static_cast<double>(out.size());
      s.cover = out.size();
      s.tokens = expr_size(e);
      if (best_expr && s.per_prim > best.per_prim + 1e-9) continue;
      s.text = print(e);
      if (!best_expr || better(s, best)) {
        best = std::move(s);
        best_expr = &e;
        best_assign = m.assignment;
      }
    }
    if (!best_expr) throw std::logic_error("wake found no valid expression");
    chosen.push_back(*best_expr);
    std::vector<char> take(remaining.size(), 0);
    for (int j : best_assign) take[static_cast<std::size_t>(j)] = 1;
    std::vector<int> next;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (!take[i]) next.push_back(remaining[i]);
    remaining = std::move(next);
    if (cache) cache->add(chosen.back(), d, lib);
  }
  return fold_union(chosen);
}

// ---------------------------------------------------------------------------
// Combine
// ---------------------------------------------------------------------------

namespace {

bool uses_only(const Expr& e, const Library& lib) {
  std::vector<std::string> calls;
  collect_calls(e, calls);
  return std::all_of(calls.begin(), calls.end(),
                     [&](const std::string& c) { return lib.contains(c); });
}

std::optional<Expr> splice(const Expr& prev, const Expr& fresh, const Scene& d,
                           const Library& lib) {
  auto pparts = split_union(prev);
  const auto nparts = split_union(fresh);
  std::vector<std::vector<int>> pcov, ncov;
  if (!expression_covers(pparts, d, lib, pcov)) return std::nullopt;
  if (!expression_covers(nparts, d, lib, ncov)) return std::nullopt;
  std::vector<double> pcost;
  for (const auto& e : pparts) pcost.push_back(program_complexity(e, lib));
  bool changed = false;
  for (std::size_t f = 0; f < nparts.size(); ++f) {
    const auto& target = ncov[f];
    std::vector<std::size_t> hit;
    std::vector<int> uni;
    double sum = 0.0;
    for (std::size_t i = 0; i < pparts.size(); ++i) {
      bool meets = false;
      for (int x : pcov[i])
        if (std::binary_search(target.begin(), target.end(), x)) meets = true;
      if (!meets) continue;
      hit.push_back(i);
      uni.insert(uni.end(), pcov[i].begin(), pcov[i].end());
      sum += pcost[i];
    }
    std::sort(uni.begin(), uni.end());
    if (uni != target) continue;
    const double c = program_complexity(nparts[f], lib);
    if (c >= sum - 1e-12) continue;
    for (auto it = hit.rbegin(); it != hit.rend(); ++it) {
      pparts.erase(pparts.begin() + static_cast<std::ptrdiff_t>(*it));
      pcov.erase(pcov.begin() + static_cast<std::ptrdiff_t>(*it));
      pcost.erase(pcost.begin() + static_cast<std::ptrdiff_t>(*it));
    }
    pparts.push_back(nparts[f]);
    pcov.push_back(target);
    pcost.push_back(c);
    changed = true;
  }
  if (!changed) return std::nullopt;
  return fold_union(pparts);
}

std::optional<Expr> rebuild(const ExprCache& cache, const Scene& d, const Library& lib) {
  std::vector<CacheEntry> pool;
  for (const auto& e : cache.entries) {
    if (!uses_only(e.expr, lib)) continue;
    bool ok = !e.covered.empty();
    for (int i : e.covered)
      if (i < 0 || static_cast<std::size_t>(i) >= d.prims.size()) ok = false;
    if (!ok) throw std::invalid_argument("cache entry covers primitives outside the scene");
    pool.push_back(e);
  }
  for (std::size_t i = 0; i < d.prims.size(); ++i) {
    const Expr e = naive_expr(d.prims[i]);
    pool.push_back({e, {static_cast<int>(i)}, program_complexity(e, lib)});
  }
  std::vector<char> covered(d.prims.size(), 0);
  std::size_t left = d.prims.size();
  std::vector<Expr> parts;
  while (left > 0) {
    const CacheEntry* best = nullptr;
    Scored bs;
    for (const auto& e : pool) {
      bool clash = false;
      for (int i : e.covered)
        if (covered[static_cast<std::size_t>(i)]) clash = true;
      if (clash) continue;
      Scored s{e.cost / static_cast<double>(e.covered.size()), e.covered.size(),
               expr_size(e.expr), print(e.expr)};
      if (!best || better(s, bs)) {
        best = &e;
        bs = std::move(s);
      }
    }
    if (!best) return std::nullopt;
    for (int i : best->covered) covered[static_cast<std::size_t>(i)] = 1;
    left -= best->covered.size();
    parts.push_back(best->expr);
  }
  return fold_union(parts);
}

}  // namespace

CombineResult combine(const Expr* prev, const Expr& fresh, const ExprCache& cache,
                      const Scene& d, const Library& lib) {
  CombineResult best;
  best.term = kInfinity;
  auto consider = [&](const Expr& p, CombineChoice c) {
    if (!uses_only(p, lib)) return;
    const double t = scene_term(p, d, lib);
    if (t < best.term - 1e-12) {
      best.program = p;
      best.choice = c;
      best.term = t;
    }
  };
  if (prev) consider(*prev, CombineChoice::Previous);
  consider(fresh, CombineChoice::New);
  if (prev) {
    if (auto m = splice(*prev, fresh, d, lib)) consider(*m, CombineChoice::Merged);
  }
  if (auto r = rebuild(cache, d, lib)) consider(*r, CombineChoice::Rebuilt);
  if (!std::isfinite(best.term)) {
    best.program = naive_program(d);
    best.choice = CombineChoice::Rebuilt;
    best.term = scene_term(best.program, d, lib);
  }
  return best;
}

}  // namespace shapeabs
