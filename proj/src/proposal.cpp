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

#include "shapeabs/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "shapeabs/objective.hpp"
#include "shapeabs/parallel.hpp"
#include "shapeabs/wake.hpp"

namespace shapeabs {

std::size_t StructureTable::row_count(const std::string& key) const {
  auto it = rows.find(key);
  return it == rows.end() ? 0 : it->second.size();
}

namespace {

bool is_float_expr(const Expr& e) {
  return e.op == Op::Float || is_parametric_op(e.op);
}

Expr lift(const Expr& e, std::vector<Type>& slots, std::vector<double>& values) {
  if (is_float_expr(e)) {
    values.push_back(eval_float(e));
    slots.push_back(Type::Float);
    return ex::param(static_cast<int>(slots.size()) - 1);
  }
  if (e.op == Op::Int) {
    values.push_back(static_cast<double>(e.index));
    slots.push_back(Type::Int);
    return ex::param(static_cast<int>(slots.size()) - 1);
  }
  Expr out = e;
  for (auto& c : out.children) c = lift(c, slots, values);
  return out;
}

void shape_subtrees(const Expr& e, std::vector<const Expr*>& out) {
  if (!is_shape_op(e.op)) return;
  out.push_back(&e);
  for (const auto& c : e.children) shape_subtrees(c, out);
}

}  // namespace

Structure structure_of(const Expr& e, std::vector<double>* values) {
  Structure s;
  std::vector<double> v;
  s.body = lift(e, s.slots, v);
  s.key = print(s.body);
  if (values) *values = std::move(v);
  return s;
}

StructureTable record_structures(const std::vector<Expr>& programs, double min_fraction) {
  StructureTable t;
  t.programs = programs.size();
  std::map<std::string, std::set<int>> seen_in;
  auto record = [&](const Expr& e, int prog) {
    std::vector<double> values;
    Structure s = structure_of(e, &values);
    seen_in[s.key].insert(prog);
    t.rows[s.key].push_back({std::move(values), prog});
    if (!t.structures.count(s.key)) t.structures.emplace(s.key, std::move(s));
  };
  for (std::size_t pi = 0; pi < programs.size(); ++pi) {
    const int prog = static_cast<int>(pi);
    const auto parts = split_union(programs[pi]);
    std::vector<std::string> keys;
    std::vector<std::vector<double>> vals;
    for (const auto& part : parts) {
      std::vector<const Expr*> subs;
      shape_subtrees(part, subs);
      for (const Expr* s : subs) record(*s, prog);
      std::vector<double> v;
      keys.push_back(structure_of(part, &v).key);
      vals.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = i + 1; j < parts.size(); ++j) {
        // canonical order: by key, then by values
        const bool swap = keys[j] < keys[i] || (keys[j] == keys[i] && vals[j] < vals[i]);
        record(swap ? ex::unite(parts[j], parts[i]) : ex::unite(parts[i], parts[j]), prog);
      }
  }
  const double need = min_fraction * static_cast<double>(programs.size());
  for (const auto& [key, progs] : seen_in) {
    if (static_cast<double>(progs.size()) < need) {
      t.rows.erase(key);
      t.structures.erase(key);
    }
  }
  return t;
}

Cluster sample_cluster(const StructureTable& table, std::mt19937_64& rng, std::size_t max_rows) {
  if (table.rows.empty()) throw std::invalid_argument("empty structure table");
  std::vector<const std::string*> keys;
  std::vector<double> weights;
  for (const auto& [k, r] : table.rows) {
    keys.push_back(&k);
    weights.push_back(static_cast<double>(r.size()));
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  Cluster c;
  c.key = *keys[pick(rng)];
  const auto& all = table.rows.at(c.key);
  if (all.size() <= max_rows) {
    c.rows = all;
  } else {
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // partial Fisher-Yates
    for (std::size_t i = 0; i < max_rows; ++i) {
      std::uniform_int_distribution<std::size_t> u(i, idx.size() - 1);
      std::swap(idx[i], idx[u(rng)]);
    }
    idx.resize(max_rows);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) c.rows.push_back(all[i]);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Greedy search
// ---------------------------------------------------------------------------

namespace {

// Value of a slot expression for one row. P<k> reads the slot that
// introduced variable k.
double slot_value(const Expr& e, const StructureRow& row, const std::vector<int>& var_slot) {
  switch (e.op) {
    case Op::Param: return row.values[static_cast<std::size_t>(var_slot[static_cast<std::size_t>(e.index)])];
    case Op::Float: return e.value;
    case Op::Int: return static_cast<double>(e.index);
    case Op::Add: return slot_value(e.children[0], row, var_slot) + slot_value(e.children[1], row, var_slot);
    case Op::Sub: return slot_value(e.children[0], row, var_slot) - slot_value(e.children[1], row, var_slot);
    case Op::Mul: return slot_value(e.children[0], row, var_slot) * slot_value(e.children[1], row, var_slot);
    case Op::Div: {
      const double d = slot_value(e.children[1], row, var_slot);
      if (std::abs(d) < 1e-12) return std::nan("");
      return slot_value(e.children[0], row, var_slot) / d;
    }
    default: return std::nan("");
  }
}

struct Option {
  Expr expr;
  std::vector<char> mask;
  std::size_t count = 0;
  bool fresh = false;
};

// Float expressions over previously introduced float variables, by level.
std::vector<std::vector<Expr>> float_levels(const std::vector<int>& float_vars) {
  std::vector<std::vector<Expr>> lv(4);
  lv[0].push_back(ex::lit(0.0));
  for (int k : float_vars) {
    lv[1].push_back(ex::param(k));
    lv[1].push_back(ex::arith(Op::Add, ex::param(k), ex::param(k)));
    lv[1].push_back(ex::arith(Op::Mul, ex::param(k), ex::param(k)));
  }
  for (int i : float_vars)
    for (int j : float_vars) {
      if (i == j) continue;
      for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div}) {
        if ((op == Op::Add || op == Op::Mul) && j < i) continue;  // commutative
        lv[2].push_back(ex::arith(op, ex::param(i), ex::param(j)));
      }
    }
  // left-nested with Add/Sub covers every sign pattern of a +- b +- c
  for (int a : float_vars)
    for (int b : float_vars)
      for (int c : float_vars) {
        if (a == b || b == c || a == c) continue;
        for (Op o2 : {Op::Add, Op::Sub})
          for (Op o1 : {Op::Add, Op::Sub}) {
            if (o2 == Op::Add && b < a) continue;
            lv[3].push_back(ex::arith(o1, ex::arith(o2, ex::param(a), ex::param(b)), ex::param(c)));
          }
      }
  return lv;
}

}  // namespace

bool fits(const CandidateAbstraction& c, const StructureRow& row, double tol) {
  std::vector<int> var_slot;
  for (std::size_t s = 0; s < c.slot_exprs.size(); ++s) {
    const Expr& e = c.slot_exprs[s];
    if (e.op == Op::Param && static_cast<std::size_t>(e.index) == var_slot.size())
      var_slot.push_back(static_cast<int>(s));
  }
  for (std::size_t s = 0; s < c.slot_exprs.size(); ++s) {
    const double v = slot_value(c.slot_exprs[s], row, var_slot);
    if (!(std::abs(v - row.values[s]) <= tol)) return false;
  }
  return true;
}

CandidateAbstraction greedy_abstraction_search(const Cluster& cluster,
                                               const StructureTable& table,
                                               const Library& lib, double tol,
                                               double min_support) {
  if (cluster.rows.empty()) throw std::invalid_argument("empty cluster");
  const Structure& st = table.structures.at(cluster.key);
  const auto& rows = cluster.rows;
  const std::size_t n = rows.size();
  const TokenWeights& w = lib.config.weights;

  std::vector<char> cov(n, 1);
  std::size_t cov_count = n;
  std::vector<int> var_slot;
  std::vector<Type> var_type;
  std::vector<int> float_vars, int_vars;
  std::vector<Expr> slot_exprs(st.slots.size());
  double gain = 0.0;

  auto evaluate = [&](const Expr& e, std::size_t s) {
    Option o{e, std::vector<char>(n, 0), 0, false};
    for (std::size_t r = 0; r < n; ++r) {
      if (!cov[r]) continue;
      const double v = slot_value(e, rows[r], var_slot);
      if (std::abs(v - rows[r].values[s]) <= tol) {
        o.mask[r] = 1;
        ++o.count;
      }
    }
    return o;
  };

  for (std::size_t s = 0; s < st.slots.size(); ++s) {
    const bool is_float = st.slots[s] == Type::Float;
    const double add = is_float ? w.float_literal : w.categorical;
    Option best{ex::param(static_cast<int>(var_slot.size())), cov, cov_count, true};
    double best_score = static_cast<double>(cov_count) / static_cast<double>(n) * gain;
    auto consider = [&](Option o) {
      if (o.count == 0) return;  // voided
      // chance coincidences in a few rows would otherwise beat a fresh
      // variable whenever the gain so far is zero
      if (static_cast<double>(o.count) < min_support * static_cast<double>(n)) return;
      const double sc = static_cast<double>(o.count) / static_cast<double>(n) * (gain + add);
      if (sc > best_score + 1e-12) {
        best_score = sc;
        best = std::move(o);
      }
    };
    if (is_float) {
      std::vector<char> any(n, 0);
      std::size_t any_count = 0;
      for (const auto& level : float_levels(float_vars)) {
        for (const auto& e : level) {
          Option o = evaluate(e, s);
          for (std::size_t r = 0; r < n; ++r)
            if (o.mask[r] && !any[r]) {
              any[r] = 1;
              ++any_count;
            }
          consider(std::move(o));
        }
        if (any_count == cov_count) break;  // this level already explains the cluster
      }
    } else {
      std::set<int> statics;
      for (std::size_t r = 0; r < n; ++r)
        if (cov[r]) statics.insert(static_cast<int>(std::lround(rows[r].values[s])));
      for (int v : statics) consider(evaluate(ex::integer(v), s));
      for (int k : int_vars) consider(evaluate(ex::param(k), s));
    }
    if (best.fresh) {
      var_slot.push_back(static_cast<int>(s));
      var_type.push_back(st.slots[s]);
      (is_float ? float_vars : int_vars).push_back(static_cast<int>(var_type.size()) - 1);
    } else {
      gain += add;
      cov = best.mask;
      cov_count = best.count;
    }
    slot_exprs[s] = best.expr;
  }

  CandidateAbstraction c;
  c.key = cluster.key;
  c.slot_exprs = slot_exprs;
  c.abstraction.params = var_type;
  c.abstraction.body = substitute(st.body, slot_exprs);
  c.gain = gain;
  c.frequency = static_cast<double>(cov_count) / static_cast<double>(n);
  c.score = c.frequency * c.gain;
  c.degenerate = gain <= 0.0;
  std::set<int> progs;
  for (std::size_t r = 0; r < n; ++r)
    if (cov[r]) progs.insert(rows[r].program);
  c.coverage.assign(progs.begin(), progs.end());
  const auto om = omega(c.abstraction, lib.config.omega);
  c.admissible = om.has_value();
  if (om) c.abstraction.omega = *om;
  if (c.admissible) {
    Abstraction probe = c.abstraction;
    probe.name = "__probe";
    try {
      validate_abstraction(probe, &lib);
    } catch (const DslError&) {
      c.admissible = false;
    }
  }
  return c;
}

std::vector<CandidateAbstraction> propose(const std::vector<Expr>& programs,
                                          const Library& lib, const ProposalConfig& cfg,
                                          std::uint64_t seed) {
  if (cfg.iterations == 0) throw std::invalid_argument("proposal needs at least one iteration");
  const StructureTable table = record_structures(programs, cfg.min_fraction);
  if (table.rows.empty()) return {};
  std::mt19937_64 master(seed);
  std::vector<std::uint64_t> seeds(cfg.iterations);
  for (auto& s : seeds) s = master();
  std::vector<CandidateAbstraction> found(cfg.iterations);
  parallel_for(cfg.iterations, cfg.workers, [&](std::size_t i) {
    std::mt19937_64 rng(seeds[i]);
    const Cluster c = sample_cluster(table, rng, cfg.cluster_rows);
    found[i] = greedy_abstraction_search(c, table, lib, cfg.tolerance, cfg.min_support);
  });

  std::map<std::string, CandidateAbstraction> merged;
  for (auto& c : found) {
    if (!c.admissible || c.degenerate) continue;
    std::string id = print(c.abstraction.body);
    for (Type t : c.abstraction.params) id += std::string(":") + std::string(type_name(t));
    auto it = merged.find(id);
    if (it == merged.end()) {
      merged.emplace(std::move(id), std::move(c));
    } else {
      std::set<int> u(it->second.coverage.begin(), it->second.coverage.end());
      u.insert(c.coverage.begin(), c.coverage.end());
      it->second.coverage.assign(u.begin(), u.end());
    }
  }
  std::vector<CandidateAbstraction> out;
  for (auto& [id, c] : merged) {
    // frequency over all of P: programs with any fitting row
    std::set<int> progs(c.coverage.begin(), c.coverage.end());
    for (const auto& row : table.rows.at(c.key))
      if (fits(c, row, cfg.tolerance)) progs.insert(row.program);
    c.coverage.assign(progs.begin(), progs.end());
    c.frequency = static_cast<double>(progs.size()) / static_cast<double>(programs.size());
    c.score = c.frequency * c.gain;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return print(a.abstraction.body) < print(b.abstraction.body);
  });
  return out;
}

std::string format_candidates(const std::vector<CandidateAbstraction>& cands) {
  std::ostringstream os;
  os << "rank\tscore\tfrequency\tgain\tcoverage\tbody\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    os << i + 1 << '\t' << format_float(c.score) << '\t' << format_float(c.frequency) << '\t'
       << format_float(c.gain) << '\t' << c.coverage.size() << '\t'
       << print(c.abstraction.body) << '\n';
  }
  return os.str();
}

}  // namespace shapeabs
