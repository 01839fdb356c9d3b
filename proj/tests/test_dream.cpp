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

#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "shapeabs/dream.hpp"
#include "shapeabs/synthetic.hpp"

using namespace shapeabs;

namespace {

Library mirror_lib() {
  Library lib;
  std::vector<std::optional<Type>> slots;
  Abstraction a;
  a.name = "Abs_0";
  a.body = parse("SymRef(Move(Rect(P0,P1),Add(P0,P1),Sub(P1,P0)),AX)", nullptr, &slots);
  a.params = {Type::Float, Type::Float};
  lib.add(a);
  return lib;
}

std::string reject(const std::string& text) {
  const Expr e = parse(text);
  return dream_rejection(e, execute(e), DreamRules{});
}

}  // namespace

TEST_CASE("dream rejection examples") {
  CHECK(reject("Rect(-0.1,0.2)") == "non-positive dimension");
  // right edge at 1.15
  CHECK(reject("Move(Rect(0.3,0.2),1.0,0)") == "out of bounds");
  CHECK(reject("Move(Rect(0.2,0.2),0.89,0)").empty());
  CHECK(reject("Rect(0.04,0.1)") == "area below floor");
  CHECK(reject("Rect(0.05,0.1)").empty());
  CHECK(reject("SymRef(Move(Rect(0.2,0.2),0,0.3),AX)") == "occluded");
  CHECK(reject("Move(Move(Rect(0.2,0.2),0.1,0),0.1,0)") == "redundant operators");
  CHECK(reject("SymRef(SymRef(Move(Rect(0.2,0.2),0.5,0.5),AX),AY)").empty());
}

TEST_CASE("visible fraction on simple overlaps") {
  const Primitive a{0.4, 0.4, 0.0, 0.0};
  CHECK(visible_fraction(a, {}) == 1.0);
  CHECK(visible_fraction(a, {{0.4, 0.4, 0.2, 0.0}}) == doctest::Approx(0.5));
  CHECK(visible_fraction(a, {{1.0, 1.0, 0.0, 0.0}}) == 0.0);
  // overlapping coverers count once
  CHECK(visible_fraction(a, {{0.2, 0.4, -0.1, 0.0}, {0.2, 0.2, -0.1, 0.1}}) == doctest::Approx(0.5));
  // L-shaped cover leaves one quadrant
  CHECK(visible_fraction(a, {{0.2, 0.4, -0.1, 0.0}, {0.2, 0.2, 0.1, 0.1}}) == doctest::Approx(0.25));
  // a sliver across the middle
  CHECK(visible_fraction(a, {{1.0, 0.04, 0.0, 0.0}}) == doctest::Approx(0.9));
}

TEST_CASE("property: sampled dreams obey every rejection rule") {
  const Library lib = mirror_lib();
  std::mt19937_64 rng(9);
  DreamRules rules;
  std::vector<std::string> sources = base_dream_sources();
  sources.push_back("Abs_0");
  std::size_t total = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string& s = sources[static_cast<std::size_t>(i) % sources.size()];
    const Dream d = sample_dream(s, lib, rng);
    const Expr inl = inline_calls(d.expr, lib);
    REQUIRE(dream_rejection(inl, d.prims, rules).empty());
    CHECK(execute(d.expr, &lib) == d.prims);
    CHECK(d.source == s);
    for (const auto& p : d.prims) {
      CHECK(p.w > 0.0);
      CHECK(p.w * p.h >= 0.005);
      CHECK(primitive_in_bounds(p));
    }
    ++total;
  }
  CHECK(total == 10000);
}

TEST_CASE("degenerate functions time out") {
  Library lib;
  std::vector<std::optional<Type>> slots;
  Abstraction a;
  a.name = "Abs_0";
  // the copy always lands on the original
  a.body = parse("SymRef(Rect(P0,P1),AX)", nullptr, &slots);
  a.params = {Type::Float, Type::Float};
  lib.add(a);
  std::mt19937_64 rng(1);
  DreamRules rules;
  rules.max_rejections = 200;
  CHECK_THROWS_AS(sample_dream("Abs_0", lib, rng, {}, rules), DreamTimeout);
}

TEST_CASE("composites") {
  const Library lib = mirror_lib();
  std::mt19937_64 rng(4);
  std::map<std::string, std::vector<Dream>> pool;
  for (const auto& s : {std::string("Move"), std::string("Abs_0")})
    for (int i = 0; i < 50; ++i) pool[s].push_back(sample_dream(s, lib, rng));
  const auto corpus = gen_synthetic_corpus(5, 3).scenes;
  std::map<std::string, std::size_t> counts;
  std::set<std::size_t> ks;
  bool saw_distractor = false, saw_offset = false;
  for (int i = 0; i < 300; ++i) {
    const auto c = make_composite(pool, corpus, counts, rng);
    ks.insert(c.targets.size());
    CHECK(c.scene.prims.size() <= 16);
    CHECK(c.targets.size() >= 1);
    CHECK(c.targets.size() <= 4);
    saw_distractor |= c.distractors > 0;
    // every target's (shifted) primitives are in the scene
    std::size_t need = c.distractors;
    for (std::size_t t = 0; t < c.targets.size(); ++t) {
      need += c.targets[t].prims.size();
      const auto [dx, dy] = c.offsets[t];
      saw_offset |= dx != 0.0 || dy != 0.0;
      for (auto p : c.targets[t].prims) {
        p.x += dx;
        p.y += dy;
        CHECK(std::find(c.scene.prims.begin(), c.scene.prims.end(), p) != c.scene.prims.end());
      }
    }
    CHECK(c.scene.prims.size() == need);
  }
  CHECK(ks.size() == 4);
  CHECK(saw_distractor);
  CHECK(saw_offset);
  // balanced draws across sources
  const double a = static_cast<double>(counts["Move"]), b = static_cast<double>(counts["Abs_0"]);
  CHECK(std::abs(a - b) <= 4.0);
}

TEST_CASE("dream phase covers every source and exports records") {
  const Library lib = mirror_lib();
  DreamPhaseConfig cfg;
  cfg.per_source = 30;
  const auto r = dream_phase(lib, {}, cfg, 5);
  CHECK(r.skipped.empty());
  CHECK(r.counts.size() == base_dream_sources().size() + 1);
  for (const auto& [s, n] : r.counts) CHECK(n >= 30);
  const std::string text = format_dream_records(r.composites);
  std::size_t lines = 0, targets = 0;
  for (const auto& c : r.composites) targets += c.targets.size();
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    REQUIRE(j["scene"].is_array());
    CHECK(j["scene"][0].size() == 4);
    REQUIRE(j["target_tokens"].is_array());
    CHECK_FALSE(j["target_tokens"].empty());
    ++lines;
  }
  CHECK(lines == targets);
  // same seed, same dreams
  CHECK(format_dream_records(dream_phase(lib, {}, cfg, 5).composites) == text);
}

TEST_CASE("expression tokens are prefix order") {
  const auto t = expr_tokens(parse("SymRef(Move(Rect(0.1,0.2),0.3,0),AX)"));
  CHECK(t == std::vector<std::string>{"SymRef", "Move", "Rect", "0.1", "0.2", "0.3", "0", "AX"});
}

TEST_CASE("synthetic corpus") {
  const auto a = gen_synthetic_corpus(1, 7), b = gen_synthetic_corpus(1, 7);
  CHECK(a.scenes[0].prims == b.scenes[0].prims);
  CHECK_THROWS(gen_synthetic_corpus(0, 7));
  const auto c = gen_synthetic_corpus(200, 11);
  REQUIRE(c.scenes.size() == 200);
  std::set<std::string> cats(c.categories.begin(), c.categories.end());
  CHECK(cats.size() == 3);
  for (std::size_t i = 0; i < c.scenes.size(); ++i) {
    CHECK_NOTHROW(validate_scene(c.scenes[i]));
    CHECK(execute(c.latent[i]) == c.scenes[i].prims);
  }
}

TEST_CASE("four-leg scenes hold two mirror pairs") {
  const auto c = gen_synthetic_corpus(200, 13);
  int checked = 0;
  for (std::size_t i = 0; i < c.scenes.size(); ++i) {
    // latent form: slab, then one or two reflected leg pairs, then the rest
    const auto parts = [&] {
      std::vector<Expr> out;
      std::function<void(const Expr&)> walk = [&](const Expr& e) {
        if (e.op == Op::Union) {
          walk(e.children[0]);
          walk(e.children[1]);
        } else {
          out.push_back(e);
        }
      };
      walk(c.latent[i]);
      return out;
    }();
    int pairs = 0;
    for (const auto& p : parts) pairs += p.op == Op::SymRef && c.categories[i] != "shelf";
    if (pairs != 2) continue;
    ++checked;
    for (const auto& part : parts) {
      if (part.op != Op::SymRef) continue;
      for (const auto& p : execute(part)) {
        if (p.x >= 0.0) continue;
        bool twin = false;
        for (const auto& q : c.scenes[i].prims)
          twin |= std::abs(q.x + p.x) <= 1e-9 && q.y == p.y && q.w == p.w && q.h == p.h;
        CHECK(twin);
      }
    }
  }
  CHECK(checked > 10);
}
