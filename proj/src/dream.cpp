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

#include "shapeabs/dream.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "shapeabs/parallel.hpp"

namespace shapeabs {

std::vector<std::string> base_dream_sources() {
  return {"Rect", "Move", "SymRef", "SymTrans", "Union"};
}

std::pair<Expr, std::vector<Type>> dream_source(const std::string& name, const Library& lib) {
  static const std::map<std::string, std::string> base = {
      {"Rect", "Rect(P0,P1)"},
      {"Move", "Move(Rect(P0,P1),P2,P3)"},
      {"SymRef", "SymRef(Move(Rect(P0,P1),P2,P3),P4)"},
      {"SymTrans", "SymTrans(Move(Rect(P0,P1),P2,P3),P4,P5,P6)"},
      {"Union", "Union(Move(Rect(P0,P1),P2,P3),Move(Rect(P4,P5),P6,P7))"},
  };
  if (const Abstraction* a = lib.find(name)) return {a->body, a->params};
  auto it = base.find(name);
  if (it == base.end())
    throw DslError(DslError::Kind::UnknownFunction, "unknown dream source " + name);
  std::vector<std::optional<Type>> slots;
  Expr body = parse(it->second, nullptr, &slots);
  std::vector<Type> types;
  for (const auto& s : slots) types.push_back(*s);
  return {body, types};
}

namespace {

enum class Role { Dim, OffsetX, OffsetY, Distance, Other };

// Role of each parameter from its first direct occurrence; callee roles are
// inherited through direct arguments.
void find_roles(const Expr& e, const Library& lib, std::vector<Role>& roles,
                std::vector<char>& set) {
  auto mark = [&](const Expr& c, Role r) {
    if (c.op == Op::Param && !set[static_cast<std::size_t>(c.index)]) {
      roles[static_cast<std::size_t>(c.index)] = r;
      set[static_cast<std::size_t>(c.index)] = 1;
    }
  };
  switch (e.op) {
    case Op::Rect:
      mark(e.children[0], Role::Dim);
      mark(e.children[1], Role::Dim);
      break;
    case Op::Move:
      mark(e.children[1], Role::OffsetX);
      mark(e.children[2], Role::OffsetY);
      break;
    case Op::SymTrans: mark(e.children[3], Role::Distance); break;
    case Op::Call:
      if (const Abstraction* a = lib.find(e.name)) {
        std::vector<Role> inner(a->params.size(), Role::Other);
        std::vector<char> iset(a->params.size(), 0);
        find_roles(a->body, lib, inner, iset);
        for (std::size_t i = 0; i < e.children.size(); ++i) mark(e.children[i], inner[i]);
      }
      break;
    default: break;
  }
  for (const auto& c : e.children) find_roles(c, lib, roles, set);
}

double draw(const std::vector<DreamDistributions::Component>& mix, std::mt19937_64& rng) {
  std::vector<double> w;
  for (const auto& c : mix) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  const auto& c = mix[pick(rng)];
  return std::normal_distribution<double>(c.mean, c.stddev)(rng);
}

bool redundant(const Expr& e) {
  if (e.op == Op::Move && e.children[0].op == Op::Move) return true;
  if (e.op == Op::SymRef && e.children[0].op == Op::SymRef &&
      e.children[0].children[1].op == e.children[1].op)
    return true;
  for (const auto& c : e.children)
    if (redundant(c)) return true;
  return false;
}

bool inside(const Primitive& p, double x, double y) {
  return std::abs(x - p.x) < p.w / 2 && std::abs(y - p.y) < p.h / 2;
}

double round_to(double v, int decimals) {
  const double s = std::pow(10.0, decimals);
  const double r = std::round(v * s) / s;
  return r == 0.0 ? 0.0 : r;
}

}  // namespace

// Exact uncovered area: split p at every edge of the others that crosses it
// and test each cell centre.
double visible_fraction(const Primitive& p, const std::vector<Primitive>& others) {
  const double x0 = p.x - p.w / 2, x1 = p.x + p.w / 2;
  const double y0 = p.y - p.h / 2, y1 = p.y + p.h / 2;
  std::vector<double> xs{x0, x1}, ys{y0, y1};
  for (const auto& o : others) {
    for (double x : {o.x - o.w / 2, o.x + o.w / 2})
      if (x > x0 && x < x1) xs.push_back(x);
    for (double y : {o.y - o.h / 2, o.y + o.h / 2})
      if (y > y0 && y < y1) ys.push_back(y);
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double seen = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double cx = (xs[i] + xs[i + 1]) / 2, cy = (ys[j] + ys[j + 1]) / 2;
      bool covered = false;
      for (const auto& o : others)
        if (inside(o, cx, cy)) {
          covered = true;
          break;
        }
      if (!covered) seen += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  return seen / (p.w * p.h);
}

std::string dream_rejection(const Expr& inlined, const std::vector<Primitive>& prims,
                            const DreamRules& rules) {
  if (prims.empty()) return "empty";
  if (static_cast<int>(prims.size()) > rules.max_prims) return "too many primitives";
  for (const auto& p : prims)
    if (!(p.w > 0.0 && p.h > 0.0)) return "non-positive dimension";
  for (const auto& p : prims)
    if (!primitive_in_bounds(p)) return "out of bounds";
  for (const auto& p : prims)
    if (p.w * p.h < rules.min_area) return "area below floor";
  for (std::size_t i = 0; i < prims.size(); ++i) {
    std::vector<Primitive> others;
    for (std::size_t j = 0; j < prims.size(); ++j)
      if (j != i) others.push_back(prims[j]);
    if (visible_fraction(prims[i], others) < rules.min_visible)
      return "occluded";
  }
  if (redundant(inlined)) return "redundant operators";
  return {};
}

Dream sample_dream(const std::string& source, const Library& lib, std::mt19937_64& rng,
                   const DreamDistributions& dist, const DreamRules& rules) {
  const auto [body, types] = dream_source(source, lib);
  std::vector<Role> roles(types.size(), Role::Other);
  std::vector<char> set(types.size(), 0);
  find_roles(body, lib, roles, set);
  const bool is_call = lib.contains(source);
  for (int attempt = 0; attempt < rules.max_rejections; ++attempt) {
    std::vector<Expr> args;
    for (std::size_t i = 0; i < types.size(); ++i) {
      switch (types[i]) {
        case Type::Axis:
          args.push_back(std::uniform_int_distribution<int>(0, 1)(rng) ? ex::axis_x()
                                                                        : ex::axis_y());
          break;
        case Type::Int: args.push_back(ex::integer(std::uniform_int_distribution<int>(1, 4)(rng))); break;
        default: {
          const auto& mix = roles[i] == Role::Dim        ? dist.dim
                            : roles[i] == Role::Distance ? dist.distance
                            : roles[i] == Role::Other    ? dist.other
                                                         : dist.offset;
          args.push_back(ex::lit(round_to(draw(mix, rng), dist.decimals)));
        }
      }
    }
    const Expr e = is_call ? ex::call(source, args) : substitute(body, args);
    Expr inlined;
    std::vector<Primitive> prims;
    try {
      inlined = inline_calls(e, lib);
      prims = execute(inlined);
    } catch (const DslError&) {
      continue;
    }
    if (dream_rejection(inlined, prims, rules).empty()) return Dream{e, std::move(prims), source};
  }
  throw DreamTimeout("no acceptable dream for " + source + " after " +
                     std::to_string(rules.max_rejections) + " rejections");
}

std::vector<std::string> expr_tokens(const Expr& e) {
  std::vector<std::string> out;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    switch (x.op) {
      case Op::Float: out.push_back(format_float(x.value)); return;
      case Op::Int: out.push_back(std::to_string(x.index)); return;
      case Op::AxisX: out.push_back("AX"); return;
      case Op::AxisY: out.push_back("AY"); return;
      case Op::Param: out.push_back("P" + std::to_string(x.index)); return;
      case Op::Call: out.push_back(x.name); break;
      default: out.push_back(std::string(op_name(x.op))); break;
    }
    for (const auto& c : x.children) walk(c);
  };
  walk(e);
  return out;
}

CompositeScene make_composite(const std::map<std::string, std::vector<Dream>>& pool,
                              const std::vector<Scene>& corpus,
                              std::map<std::string, std::size_t>& counts, std::mt19937_64& rng,
                              const DreamRules& rules) {
  std::vector<std::string> sources;
  for (const auto& [s, ds] : pool)
    if (!ds.empty()) sources.push_back(s);
  if (sources.empty()) throw std::invalid_argument("empty dream pool");
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> shift(0.0, 0.2);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CompositeScene c;
    const int k = attempt < 900 ? std::uniform_int_distribution<int>(1, 4)(rng) : 1;
    std::map<std::string, std::size_t> local = counts;
    for (int t = 0; t < k; ++t) {
      // least represented source, ties broken at random
      std::size_t low = SIZE_MAX;
      std::vector<const std::string*> ties;
      for (const auto& s : sources) {
        const std::size_t n = local[s];
        if (n < low) {
          low = n;
          ties.clear();
        }
        if (n == low) ties.push_back(&s);
      }
      const std::string& s = *ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
      const auto& ds = pool.at(s);
      c.targets.push_back(ds[std::uniform_int_distribution<std::size_t>(0, ds.size() - 1)(rng)]);
      ++local[s];
      double dx = 0.0, dy = 0.0;
      if (attempt < 900 && coin(rng)) {
        dx = round_to(shift(rng), 2);
        dy = round_to(shift(rng), 2);
      }
      c.offsets.emplace_back(dx, dy);
      for (auto p : c.targets.back().prims) {
        p.x += dx;
        p.y += dy;
        c.scene.prims.push_back(p);
      }
    }
    if (!corpus.empty() && attempt < 900 && coin(rng)) {
      const Scene& d = corpus[std::uniform_int_distribution<std::size_t>(0, corpus.size() - 1)(rng)];
      if (!d.prims.empty()) {
        std::vector<Primitive> ps = d.prims;
        std::shuffle(ps.begin(), ps.end(), rng);
        const auto n = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(4, ps.size()))(rng);
        c.distractors = n;
        c.scene.prims.insert(c.scene.prims.end(), ps.begin(), ps.begin() + static_cast<std::ptrdiff_t>(n));
      }
    }
    if (static_cast<int>(c.scene.prims.size()) > rules.max_prims) continue;
    bool ok = true;
    for (std::size_t i = 0; ok && i < c.scene.prims.size(); ++i) {
      if (!primitive_in_bounds(c.scene.prims[i])) ok = false;
      std::vector<Primitive> others;
      for (std::size_t j = 0; j < c.scene.prims.size(); ++j)
        if (j != i) others.push_back(c.scene.prims[j]);
      if (ok && visible_fraction(c.scene.prims[i], others) <
                    rules.min_visible)
        ok = false;
    }
    if (!ok) continue;
    counts = std::move(local);
    return c;
  }
  // a lone unshifted dream already passed the rules
  CompositeScene c;
  const std::string& s = sources.front();
  c.targets.push_back(pool.at(s).front());
  c.offsets.emplace_back(0.0, 0.0);
  c.scene.prims = c.targets.back().prims;
  ++counts[s];
  return c;
}

DreamPhaseResult dream_phase(const Library& lib, const std::vector<Scene>& corpus,
                             const DreamPhaseConfig& cfg, std::uint64_t seed) {
  std::vector<std::string> sources = base_dream_sources();
  for (const auto& a : lib.abstractions()) sources.push_back(a.name);
  std::mt19937_64 master(seed);
  std::vector<std::uint64_t> seeds(sources.size());
  for (auto& s : seeds) s = master();
  std::vector<std::vector<Dream>> dreams(sources.size());
  std::vector<char> timed_out(sources.size(), 0);
  parallel_for(sources.size(), cfg.workers, [&](std::size_t i) {
    std::mt19937_64 rng(seeds[i]);
    try {
      for (std::size_t k = 0; k < cfg.per_source; ++k)
        dreams[i].push_back(sample_dream(sources[i], lib, rng, cfg.dist, cfg.rules));
    } catch (const DreamTimeout&) {
      timed_out[i] = 1;
      dreams[i].clear();
    }
  });
  DreamPhaseResult res;
  std::map<std::string, std::vector<Dream>> pool;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (timed_out[i]) {
      res.skipped.push_back(sources[i]);
      continue;
    }
    pool[sources[i]] = std::move(dreams[i]);
    res.counts[sources[i]] = 0;
  }
  if (pool.empty() || cfg.per_source == 0) return res;
  std::mt19937_64 rng(master());
  auto done = [&] {
    return std::all_of(res.counts.begin(), res.counts.end(),
                       [&](const auto& kv) { return kv.second >= cfg.per_source; });
  };
  while (!done()) res.composites.push_back(make_composite(pool, corpus, res.counts, rng, cfg.rules));
  return res;
}

std::string format_dream_records(const std::vector<CompositeScene>& composites) {
  std::ostringstream os;
  for (const auto& c : composites) {
    nlohmann::json scene = nlohmann::json::array();
    for (const auto& p : c.scene.prims) scene.push_back({p.w, p.h, p.x, p.y});
    for (const auto& t : c.targets) {
      nlohmann::json rec;
      rec["scene"] = scene;
      rec["target_tokens"] = expr_tokens(t.expr);
      os << rec.dump() << '\n';
    }
  }
  return os.str();
}

}  // namespace shapeabs
