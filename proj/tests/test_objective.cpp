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

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "shapeabs/objective.hpp"

using namespace shapeabs;

namespace {

Library fig_lib() {
  Library lib;
  std::vector<std::optional<Type>> slots;
  Abstraction a;
  a.name = "Abs_0";
  a.body = parse("SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)", nullptr, &slots);
  a.params = {Type::Float, Type::Float};
  lib.add(a);
  return lib;
}

double brute_force(const std::vector<std::vector<double>>& c) {
  const std::size_t n = c.size(), m = c[0].size();
  std::vector<int> cols(m);
  std::iota(cols.begin(), cols.end(), 0);
  double best = kInfinity;
  // Every injective row->column map appears as a prefix of some permutation.
  do {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += c[i][static_cast<std::size_t>(cols[i])];
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

}  // namespace

TEST_CASE("program complexity counts weighted tokens") {
  Library lib = fig_lib();
  CHECK(program_complexity(parse("Move(Rect(0.4,0.2),0.1,0.3)"), lib) == doctest::Approx(10.0));
  CHECK(program_complexity(
            parse("Union(Move(Rect(0.1,0.2),0.3,0.4),Move(Rect(0.5,0.6),0.7,0.8))"), lib) ==
        doctest::Approx(21.0));
  CHECK(program_complexity(parse("Abs_0(0.1,0.2)", &lib), lib) == doctest::Approx(5.0));
  CHECK(program_complexity(parse("Rect(0.1,0.1)"), lib) == doctest::Approx(5.0));
  CHECK(program_complexity(parse("SymRef(Move(Rect(0.1,0.2),0.3,0.1),AX)"), lib) ==
        doctest::Approx(11.5));
}

TEST_CASE("match_primitives examples") {
  const std::vector<Primitive> t{{0.4, 0.2, 0.1, 0.08}};
  const std::vector<Primitive> o{{0.4, 0.2, 0.1, 0.0}};
  const Match m = match_primitives(o, t, 0.05);
  CHECK(m.valid);
  CHECK(m.error == doctest::Approx(0.02));

  const std::vector<Primitive> far{{0.4, 0.2, 0.1, 0.5}};
  const std::vector<Primitive> t0{{0.4, 0.2, 0.1, 0.0}};
  CHECK_FALSE(match_primitives(far, t0, 0.05).valid);

  const std::vector<Primitive> same{{0.1, 0.2, 0.3, 0.4}, {0.5, 0.1, -0.2, 0.0}};
  const Match id = match_primitives(same, same, 0.05, true);
  CHECK(id.valid);
  CHECK(id.error == 0.0);
  CHECK(id.assignment == std::vector<int>{0, 1});

  CHECK_FALSE(match_primitives(o, same, 0.05, true).valid);  // not square
  CHECK_THROWS(match_primitives(std::vector<Primitive>{}, same, 0.05));
}

TEST_CASE("property: assignment equals brute force minimum") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int it = 0; it < 300; ++it) {
    const std::size_t m = 1 + rng() % 7;
    const std::size_t n = 1 + rng() % m;
    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (auto& row : c)
      for (auto& x : row) x = rng() % 5 == 0 ? kForbiddenEdge : u(rng);
    const auto a = solve_assignment(c);
    double s = 0;
    std::vector<int> used(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      s += c[i][static_cast<std::size_t>(a[i])];
      CHECK(used[static_cast<std::size_t>(a[i])]++ == 0);
    }
    CHECK(s == doctest::Approx(brute_force(c)).epsilon(1e-9));
  }
}

TEST_CASE("objective examples") {
  Library lib;
  const Expr p = parse("Union(Move(Rect(0.1,0.2),0.3,0.4),Move(Rect(0.5,0.6),0.7,0.2))");
  const std::vector<Scene> scenes{{"s", execute(p)}};
  const std::vector<Expr> progs{p};
  CHECK(objective(lib, progs, scenes) == doctest::Approx(21.0));
  Library with = fig_lib();
  CHECK(objective(with, progs, scenes) == doctest::Approx(21.0 + with.abstractions()[0].omega));
  const std::vector<Expr> wrong{parse("Move(Rect(0.1,0.2),0.3,0.4)")};
  CHECK(std::isinf(objective(lib, wrong, scenes)));
}

TEST_CASE("property: objective is monotone in error") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.012);
  Library lib;
  const Expr p = parse("Union(Move(Rect(0.3,0.2),0.3,0.4),Move(Rect(0.5,0.6),-0.4,0.2))");
  for (int it = 0; it < 200; ++it) {
    std::vector<Primitive> prims = execute(p);
    const std::vector<Expr> progs{p};
    const double before = objective(lib, progs, std::vector<Scene>{{"s", prims}});
    prims[rng() % 2].x += u(rng);
    const double after = objective(lib, progs, std::vector<Scene>{{"s", prims}});
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("removing an unused abstraction lowers F by its omega") {
  Library lib = fig_lib();
  const Expr p = parse("Move(Rect(0.1,0.2),0.3,0.4)");
  const std::vector<Scene> scenes{{"s", execute(p)}};
  const std::vector<Expr> progs{p};
  const double with = objective(lib, progs, scenes);
  const double w = lib.abstractions()[0].omega;
  lib.remove("Abs_0");
  CHECK(with - objective(lib, progs, scenes) == doctest::Approx(w));
}

TEST_CASE("omega policy") {
  OmegaPolicy pol;
  std::vector<std::optional<Type>> slots;
  Abstraction d;
  d.name = "D";
  d.body = parse("Union(Move(Rect(P0,P1),Add(P0,P1),P2),Move(Rect(P0,P3),Sub(P1,P0),P2))",
                 nullptr, &slots);
  d.params.assign(4, Type::Float);
  const auto wd = omega(d, pol);
  REQUIRE(wd);
  CHECK(*wd >= 0.125);
  CHECK(*wd < 0.25);

  Abstraction big;
  big.name = "B";
  std::string body = "Union(Move(Rect(P0,P1),P2,P3),Union(Move(Rect(P4,P5),P6,P7),"
                     "SymTrans(Move(Rect(P8,P9),P10,0),AX,2,0.5)))";
  slots.clear();
  big.body = parse(body, nullptr, &slots);
  big.params.assign(11, Type::Float);
  CHECK_FALSE(omega(big, pol).has_value());

  Abstraction single;
  single.name = "S";
  slots.clear();
  single.body = parse("SymTrans(Move(Rect(P0,P1),P2,P3),AX,P5,P4)", nullptr, &slots);
  single.params = {Type::Float, Type::Float, Type::Float, Type::Float, Type::Float, Type::Int,
                   Type::Float};
  // P6 unused by the body, but omega only looks at slots and expressions.
  const auto ws = omega(single, pol);
  REQUIRE(ws);
  CHECK(*ws > 0.25);
  CHECK(*ws <= 0.5);
}
