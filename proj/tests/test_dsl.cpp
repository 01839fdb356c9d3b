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
#include <random>

#include "doctest.h"
#include "shapeabs/dsl.hpp"

using namespace shapeabs;

namespace {

std::vector<Primitive> sorted(std::vector<Primitive> v) {
  std::sort(v.begin(), v.end(), [](const Primitive& a, const Primitive& b) {
    return std::tie(a.w, a.h, a.x, a.y) < std::tie(b.w, b.h, b.x, b.y);
  });
  return v;
}

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

// Random closed shape expression over the base grammar.
Expr random_shape(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> val(-0.5, 0.5);
  std::uniform_real_distribution<double> dim(0.05, 0.4);
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 0 : 4);
  switch (pick(rng)) {
    case 0: return ex::rect(ex::lit(dim(rng)), ex::lit(dim(rng)));
    case 1: return ex::move(random_shape(rng, depth - 1), ex::lit(val(rng)), ex::lit(val(rng)));
    case 2:
      return ex::symref(random_shape(rng, depth - 1),
                        rng() % 2 ? ex::axis_x() : ex::axis_y());
    case 3:
      return ex::symtrans(random_shape(rng, depth - 1),
                          rng() % 2 ? ex::axis_x() : ex::axis_y(),
                          ex::integer(1 + static_cast<int>(rng() % 4)), ex::lit(val(rng)));
    default:
      return ex::unite(random_shape(rng, depth - 1), random_shape(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("parse builds a Rect node") {
  const Expr e = parse("Rect(0.4,0.2)");
  CHECK(e.op == Op::Rect);
  REQUIRE(e.children.size() == 2);
  CHECK(e.children[0].value == 0.4);
  CHECK(e.children[1].value == 0.2);
}

TEST_CASE("parse reports syntax errors at end of input") {
  try {
    parse("Union(Rect(1,1)");
    FAIL("expected an error");
  } catch (const DslError& e) {
    CHECK(e.kind() == DslError::Kind::Syntax);
    CHECK(std::string(e.what()).find("end-of-input") != std::string::npos);
  }
}

TEST_CASE("parse reports type errors with expected and found types") {
  try {
    parse("Move(Rect(0.1,0.1),AX,0)");
    FAIL("expected an error");
  } catch (const DslError& e) {
    CHECK(e.kind() == DslError::Kind::Type);
    CHECK(std::string(e.what()).find("FLOAT expected, AXIS found") != std::string::npos);
  }
}

TEST_CASE("parse rejects unknown functions") {
  CHECK_THROWS_AS(parse("Circle(0.1)"), DslError);
  try {
    parse("Abs_3(0.1)");
  } catch (const DslError& e) {
    CHECK(e.kind() == DslError::Kind::UnknownFunction);
  }
}

TEST_CASE("print and parse round trip") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const Expr e = random_shape(rng, 4);
    const std::string text = print(e);
    CHECK(parse(text) == e);
    CHECK(print(parse(text)) == text);
  }
}

TEST_CASE("execute Move of Rect") {
  const auto out = execute(parse("Move(Rect(0.4,0.2),0.1,0.3)"));
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Primitive{0.4, 0.2, 0.1, 0.3});
}

TEST_CASE("execute SymRef negates x") {
  const auto out = execute(parse("SymRef(Move(Rect(0.2,0.1),0.3,0.5),AX)"));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == Primitive{0.2, 0.1, 0.3, 0.5});
  CHECK(out[1] == Primitive{0.2, 0.1, -0.3, 0.5});
}

TEST_CASE("execute SymTrans spaces copies by d/k") {
  const auto out = execute(parse("SymTrans(Move(Rect(0.1,0.1),-0.4,0),AX,2,0.8)"));
  REQUIRE(out.size() == 3);
  std::vector<double> xs;
  for (const auto& p : out) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(xs[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(xs[2] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("execute rejects out-of-range integers and unbound parameters") {
  Expr bad = parse("SymTrans(Rect(0.1,0.1),AX,2,0.8)");
  bad.children[2].index = 5;
  CHECK_THROWS_AS(execute(bad), DslError);
  CHECK_THROWS_AS(execute(ex::rect(ex::param(0), ex::lit(0.1))), DslError);
}

TEST_CASE("inline substitutes call arguments") {
  const Library lib = fig_lib();
  const Expr call = parse("Abs_0(0.1,0.2)", &lib);
  CHECK(print(inline_calls(call, lib)) ==
        "SymRef(Move(Rect(0.1,0.2),Add(0.1,0.2),Sub(0.2,0.1)),AX)");
  const Expr plain = parse("Move(Rect(0.4,0.2),0.1,0.3)");
  CHECK(inline_calls(plain, lib) == plain);
}

TEST_CASE("inline flattens nested abstractions in one pass") {
  Library lib = fig_lib();
  Abstraction b;
  b.name = "Abs_1";
  std::vector<std::optional<Type>> slots;
  b.body = parse("Union(Abs_0(P0,P1),Move(Rect(P2,P0),0,P1))", &lib, &slots);
  b.params = {Type::Float, Type::Float, Type::Float};
  lib.add(b);
  const Expr call = parse("Abs_1(0.1,0.2,0.6)", &lib);
  const Expr flat = inline_calls(call, lib);
  CHECK_FALSE(uses_calls(flat));
  CHECK(sorted(execute(flat)) == sorted(execute(call, &lib)));
  CHECK(execute(flat).size() == 3);
}

TEST_CASE("property: Union execution is order insensitive") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Expr a = random_shape(rng, 3), b = random_shape(rng, 3);
    CHECK(sorted(execute(ex::unite(a, b))) == sorted(execute(ex::unite(b, a))));
  }
}

TEST_CASE("property: parametric subtrees match direct arithmetic") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const Expr e = ex::arith(Op::Sub, ex::arith(Op::Add, ex::lit(a), ex::lit(b)),
                             ex::arith(Op::Mul, ex::lit(c), ex::lit(a)));
    CHECK(std::abs(eval_float(e) - ((a + b) - c * a)) <= 1e-9);
  }
}

TEST_CASE("property: inline preserves execution bitwise") {
  const Library lib = fig_lib();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Expr call = ex::call("Abs_0", {ex::lit(u(rng)), ex::lit(u(rng))});
    const Expr e = ex::unite(call, random_shape(rng, 2));
    CHECK(execute(inline_calls(e, lib)) == execute(e, &lib));
  }
}

TEST_CASE("property: accepted expressions execute without type failure") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(print(random_shape(rng, 4)));
    CHECK_NOTHROW(execute(e));
  }
}

TEST_CASE("library validation") {
  Library lib = fig_lib();
  Abstraction dup = lib.abstractions()[0];
  CHECK_THROWS_AS(lib.add(dup), DslError);
  Abstraction hidden;
  hidden.name = "Abs_9";
  std::vector<std::optional<Type>> slots;
  hidden.body = parse("Move(Rect(P0,0.1),Add(P0,P1),0)", nullptr, &slots);
  hidden.params = {Type::Float, Type::Float};
  CHECK_THROWS_AS(lib.add(hidden), DslError);  // P1 only inside Add
  CHECK(lib.fresh_name() == "Abs_1");
  lib.remove("Abs_0");
  CHECK(lib.abstractions().empty());
}

TEST_CASE("removing a callee inlines it into dependents") {
  Library lib = fig_lib();
  Abstraction b;
  b.name = "Abs_1";
  std::vector<std::optional<Type>> slots;
  b.body = parse("Union(Abs_0(P0,P1),Rect(P0,P1))", &lib, &slots);
  b.params = {Type::Float, Type::Float};
  lib.add(b);
  const Expr call = parse("Abs_1(0.1,0.2)", &lib);
  const auto before = sorted(execute(call, &lib));
  lib.remove("Abs_0");
  CHECK_FALSE(uses_calls(lib.abstractions()[0].body));
  CHECK(sorted(execute(call, &lib)) == before);
}

TEST_CASE("scene validation") {
  Scene s{"a", {{0.2, 0.2, 0.0, 0.0}}};
  CHECK_NOTHROW(validate_scene(s));
  s.prims[0].x = 1.05;  // corner at 1.15
  CHECK_THROWS_AS(validate_scene(s), DslError);
  s.prims[0] = {-0.1, 0.2, 0, 0};
  CHECK_THROWS_AS(validate_scene(s), DslError);
  Scene big{"b", std::vector<Primitive>(17, Primitive{0.1, 0.1, 0, 0})};
  CHECK_THROWS_AS(validate_scene(big), DslError);
}
