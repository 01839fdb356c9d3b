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

#include <map>
#include <set>
#include <random>

#include "doctest.h"
#include "shapeabs/objective.hpp"
#include "shapeabs/proposal.hpp"
#include "shapeabs/wake.hpp"

using namespace shapeabs;

namespace {

std::string f2(double v) { return format_float(std::round(v * 100.0) / 100.0); }

// Mirrored bars whose offsets are tied to their size.
Expr bar_pair(double w, double h) {
  return parse("SymRef(Move(Rect(" + f2(w) + "," + f2(h) + ")," + f2(w + h) + "," + f2(h - w) +
               "),AX)");
}

Cluster cluster_of(const StructureTable& t, const std::string& key) {
  return Cluster{key, t.rows.at(key)};
}

}  // namespace

TEST_CASE("record counts every occurrence of a skeleton") {
  std::vector<Expr> progs;
  for (int i = 0; i < 10; ++i)
    progs.push_back(parse("Union(Move(Rect(0.1,0.2),0.3," + f2(0.01 * i) + "),Rect(0.5,0.5))"));
  const auto t = record_structures(progs);
  CHECK(t.row_count("Move(Rect(P0,P1),P2,P3)") >= 10);
  CHECK(t.row_count("Rect(P0,P1)") == 20);
  CHECK(t.row_count("Union(Move(Rect(P0,P1),P2,P3),Rect(P4,P5))") == 10);
}

TEST_CASE("rare skeletons are filtered") {
  std::vector<Expr> progs(99, parse("Rect(0.1,0.2)"));
  progs.push_back(parse("SymRef(Move(Rect(0.1,0.2),0.3,0.1),AX)"));
  const auto t = record_structures(progs);
  CHECK(t.row_count("SymRef(Move(Rect(P0,P1),P2,P3),AX)") == 0);
  CHECK(t.row_count("Rect(P0,P1)") == 100);
}

TEST_CASE("paired keys ignore operand order") {
  const Expr a = parse("Move(Rect(0.1,0.2),0.3,0.4)");
  const Expr b = parse("SymRef(Rect(0.5,0.6),AY)");
  const auto t1 = record_structures({ex::unite(a, b)});
  const auto t2 = record_structures({ex::unite(b, a)});
  std::vector<std::string> k1, k2;
  for (const auto& [k, r] : t1.rows) k1.push_back(k);
  for (const auto& [k, r] : t2.rows) k2.push_back(k);
  CHECK(k1 == k2);
  for (const auto& [k, r] : t1.rows) {
    std::multiset<std::vector<double>> v1, v2;
    for (const auto& row : r) v1.insert(row.values);
    for (const auto& row : t2.rows.at(k)) v2.insert(row.values);
    CHECK(v1 == v2);
  }
}

TEST_CASE("cluster sampling") {
  std::mt19937_64 rng(3);
  StructureTable one;
  one.structures["A"] = {};
  one.rows["A"] = std::vector<StructureRow>(500, StructureRow{{1.0}, 0});
  for (int i = 0; i < 20; ++i) {
    const auto c = sample_cluster(one, rng);
    CHECK(c.key == "A");
    CHECK(c.rows.size() == 64);
  }

  StructureTable two;
  two.rows["A"] = std::vector<StructureRow>(90, StructureRow{{1.0}, 0});
  two.rows["B"] = std::vector<StructureRow>(10, StructureRow{{1.0}, 0});
  int a = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) a += sample_cluster(two, rng).key == "A";
  CHECK(static_cast<double>(a) / draws == doctest::Approx(0.9).epsilon(0.02));
  CHECK(sample_cluster(two, rng).rows.size() <= 90);
}

TEST_CASE("greedy search recovers the mirrored bar abstraction") {
  std::vector<Expr> progs;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(5, 40);
  for (int i = 0; i < 30; ++i) progs.push_back(bar_pair(u(rng) * 0.01, u(rng) * 0.01));
  const auto t = record_structures(progs);
  const std::string key = "SymRef(Move(Rect(P0,P1),P2,P3),AX)";
  Library lib;
  const auto c = greedy_abstraction_search(cluster_of(t, key), t, lib);
  CHECK(print(c.abstraction.body) == "SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)");
  CHECK(c.gain == doctest::Approx(4.0));
  CHECK(c.frequency == doctest::Approx(1.0));
  CHECK(c.score == doctest::Approx(4.0));
  CHECK(c.admissible);
  CHECK_FALSE(c.degenerate);

  // cross-check: the gain equals the float-token difference of a witness rewrite
  Library wit;
  wit.config.weights.shape_fn = 0.0;
  wit.config.weights.categorical = 0.0;
  Abstraction a = c.abstraction;
  a.name = "Abs_0";
  wit.add(a);
  const Expr p = progs[0];
  const auto vals = [&] {
    std::vector<double> v;
    structure_of(p, &v);
    return v;
  }();
  const Expr pa = ex::call("Abs_0", {ex::lit(vals[0]), ex::lit(vals[1])});
  const Match same = match_primitives(execute(pa, &wit), execute(p), 0.05, true);
  CHECK(same.valid);
  CHECK(same.error < 1e-9);
  CHECK(program_complexity(p, wit) - program_complexity(pa, wit) == doctest::Approx(c.gain));
}

TEST_CASE("unrelated slots stay free with zero gain") {
  Cluster c{"Move(Rect(P0,P1),P2,P3)", {}};
  StructureTable t;
  t.structures[c.key] = structure_of(parse("Move(Rect(0.1,0.2),0.3,0.4)"));
  const double rows[4][4] = {{0.137, 0.291, 0.523, 0.711},
                             {0.173, 0.389, 0.647, 0.853},
                             {0.211, 0.457, 0.769, 0.947},
                             {0.239, 0.563, 0.881, 0.95}};
  for (const auto& r : rows) c.rows.push_back({{r[0], r[1], r[2], r[3]}, 0});
  t.rows[c.key] = c.rows;
  Library lib;
  const auto cand = greedy_abstraction_search(c, t, lib);
  CHECK(cand.gain == 0.0);
  CHECK(cand.degenerate);
  CHECK(print(cand.abstraction.body) == "Move(Rect(P0,P1),P2,P3)");
}

TEST_CASE("slot choice is the argmax of frequency times gain") {
  // slot 2 is zero in 8 of 10 rows; slot 3 always equals slot 1
  Cluster c{"Move(Rect(P0,P1),P2,P3)", {}};
  StructureTable t;
  t.structures[c.key] = structure_of(parse("Move(Rect(0.1,0.2),0.3,0.4)"));
  for (int i = 0; i < 10; ++i) {
    const double w = 0.1 + 0.037 * i, h = 0.2 + 0.041 * i;
    c.rows.push_back({{w, h, i < 8 ? 0.0 : 0.77 + 0.013 * i, h}, 0});
  }
  t.rows[c.key] = c.rows;
  Library lib;
  const auto cand = greedy_abstraction_search(c, t, lib);
  // slot 2: fresh scores 1.0 * 0 = 0, zero scores 0.8 * 2 = 1.6 -> zero.
  // slot 3: P1 over the remaining rows scores 0.8 * 4 = 3.2, fresh 0.8 * 2 = 1.6.
  CHECK(print(cand.abstraction.body) == "Move(Rect(P0,P1),0,P1)");
  CHECK(cand.frequency == doctest::Approx(0.8));
  CHECK(cand.score == doctest::Approx(3.2));

  // with zero fitting everywhere but a relation only on 80%, freq*gain decides
  Cluster d = c;
  for (int i = 0; i < 10; ++i) {
    d.rows[static_cast<std::size_t>(i)].values[2] = 0.0;
    if (i >= 8) d.rows[static_cast<std::size_t>(i)].values[3] = 0.9;
  }
  const auto cd = greedy_abstraction_search(d, t, lib);
  // slot 3: P1 fits 8/10 -> 0.8 * 4 = 3.2 beats fresh at 1.0 * 2 = 2.0
  CHECK(print(cd.abstraction.body) == "Move(Rect(P0,P1),0,P1)");
  CHECK(cd.score == doctest::Approx(3.2));
}

TEST_CASE("property: candidates reproduce every row they count") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> u(5, 40), kind(0, 2);
  std::vector<Expr> progs;
  for (int i = 0; i < 60; ++i) {
    const double w = u(rng) * 0.01, h = u(rng) * 0.01;
    switch (kind(rng)) {
      case 0: progs.push_back(bar_pair(w, h)); break;
      case 1:
        progs.push_back(parse("SymTrans(Move(Rect(" + f2(w) + "," + f2(w) + "),0," + f2(h) +
                              "),AX,3," + f2(2 * h) + ")"));
        break;
      default:
        progs.push_back(ex::unite(bar_pair(w, h), parse("Rect(" + f2(h) + "," + f2(w) + ")")));
    }
  }
  Library lib;
  ProposalConfig cfg;
  cfg.iterations = 200;
  const auto cands = propose(progs, lib, cfg, 1);
  REQUIRE_FALSE(cands.empty());
  const auto t = record_structures(progs);
  for (const auto& c : cands) {
    CHECK(c.gain >= 0.0);
    CHECK(c.score == doctest::Approx(c.frequency * c.gain));
    CHECK(c.admissible);
    Library l2;
    Abstraction a = c.abstraction;
    a.name = "Abs_0";
    l2.add(a);
    for (const auto& row : t.rows.at(c.key)) {
      if (!fits(c, row, cfg.tolerance)) continue;
      // rebuild the concrete expression from the call and compare
      std::vector<Expr> args;
      for (std::size_t s = 0; s < c.slot_exprs.size(); ++s) {
        const Expr& e = c.slot_exprs[s];
        if (e.op == Op::Param && static_cast<std::size_t>(e.index) == args.size())
          args.push_back(c.abstraction.params[args.size()] == Type::Int
                             ? ex::integer(static_cast<int>(row.values[s]))
                             : ex::lit(row.values[s]));
      }
      std::vector<Expr> concrete;
      for (std::size_t s = 0; s < row.values.size(); ++s)
        concrete.push_back(t.structures.at(c.key).slots[s] == Type::Int
                               ? ex::integer(static_cast<int>(row.values[s]))
                               : ex::lit(row.values[s]));
      const auto got = execute(ex::call("Abs_0", args), &l2);
      const auto want = execute(substitute(t.structures.at(c.key).body, concrete));
      REQUIRE(got.size() == want.size());
      const Match m = match_primitives(got, want, 0.05, true);
      CHECK(m.valid);
      CHECK(m.error <= 0.005 * static_cast<double>(got.size()) * 4 + 1e-9);
    }
  }
  CHECK(cands.front().gain >= 4.0);
}

TEST_CASE("propose merges duplicates and ranks by score") {
  std::vector<Expr> progs;
  for (int i = 0; i < 20; ++i) progs.push_back(bar_pair(0.05 + 0.01 * i, 0.3 - 0.01 * i));
  Library lib;
  ProposalConfig cfg;
  cfg.iterations = 1;
  CHECK(propose(progs, lib, cfg, 2).size() <= 1);
  cfg.iterations = 100;
  const auto cands = propose(progs, lib, cfg, 2);
  std::map<std::string, int> bodies;
  for (const auto& c : cands) ++bodies[print(c.abstraction.body)];
  for (const auto& [b, n] : bodies) CHECK(n == 1);
  for (std::size_t i = 1; i < cands.size(); ++i) CHECK(cands[i - 1].score >= cands[i].score);
  const auto it = std::find_if(cands.begin(), cands.end(), [](const auto& c) {
    return print(c.abstraction.body) == "SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)";
  });
  REQUIRE(it != cands.end());
  CHECK(it->coverage.size() == 20);
}

TEST_CASE("candidates over the slot limit are never proposed") {
  // six independent moves: a pair of three-prim unions would need 24 floats
  std::vector<Expr> progs;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> u(1, 90);
  for (int i = 0; i < 20; ++i) {
    std::vector<Expr> parts;
    for (int k = 0; k < 3; ++k)
      parts.push_back(parse("Move(Rect(" + f2(u(rng) * 0.01) + "," + f2(u(rng) * 0.01) + ")," +
                            f2(u(rng) * 0.01) + "," + f2(u(rng) * 0.01) + ")"));
    progs.push_back(fold_union(parts));
  }
  Library lib;
  ProposalConfig cfg;
  cfg.iterations = 100;
  for (const auto& c : propose(progs, lib, cfg, 4)) {
    int floats = 0;
    for (Type t : c.abstraction.params) floats += t == Type::Float;
    CHECK(floats <= 10);
  }
}
