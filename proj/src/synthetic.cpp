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

#include "shapeabs/synthetic.hpp"

#include <cmath>
#include <random>

#include "shapeabs/dream.hpp"
#include "shapeabs/wake.hpp"

namespace shapeabs {

namespace {

double r2(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  // uniform on the 2-decimal grid in [lo, hi]
  double grid(double lo, double hi) {
    const long a = std::lround(lo * 100), b = std::lround(hi * 100);
    return static_cast<double>(std::uniform_int_distribution<long>(a, b)(rng_)) / 100.0;
  }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }
  // 0 or a value in [lo, hi]; never in between, so a dropped offset can't
  // pass as a near match
  double zero_or(double lo, double hi) { return coin() ? 0.0 : grid(lo, hi); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

Expr mv(double w, double h, double x, double y) {
  return ex::move(ex::rect(ex::lit(r2(w)), ex::lit(r2(h))), ex::lit(r2(x)), ex::lit(r2(y)));
}

Expr mirrored(double w, double h, double x, double y) {
  return ex::symref(mv(w, h, x, y), ex::axis_x());
}

// Legs under a slab of width `tw` whose bottom edge sits at `top_bottom`.
void legs(Sampler& s, double tw, double top_bottom, std::vector<Expr>& parts) {
  const double lw = s.grid(0.05, 0.12);
  const double lh = s.grid(0.4, 0.8);
  const double inset = s.grid(0.0, 0.05);
  const double lx = r2(tw / 2 - lw / 2 - inset);
  const double ly = r2(top_bottom - lh / 2);
  parts.push_back(mirrored(lw, lh, lx, ly));
  if (s.coin()) {
    // back legs, seen between the front ones and a little shorter
    const double gap = s.grid(0.12, 0.25);
    const double cut = s.grid(0.22, 0.3);
    const double lx2 = r2(lx - lw - gap);
    if (lx2 - lw / 2 > 0.05 && lh - cut >= 0.15) parts.push_back(mirrored(lw, lh - cut, lx2, r2(ly + cut / 2)));
  }
}

Expr table(Sampler& s) {
  std::vector<Expr> parts;
  const double tw = s.grid(0.8, 1.6);
  const double th = s.grid(0.05, 0.14);
  const double ty = s.zero_or(0.25, 0.4);
  parts.push_back(mv(tw, th, 0.0, ty));
  legs(s, tw, r2(ty - th / 2), parts);
  return fold_union(parts);
}

Expr chair(Sampler& s) {
  std::vector<Expr> parts;
  const double sw = s.grid(0.6, 1.0);
  const double st = s.grid(0.05, 0.1);
  const double sy = -s.zero_or(0.25, 0.35);
  parts.push_back(mv(sw, st, 0.0, sy));
  legs(s, sw, r2(sy - st / 2), parts);
  const double bh = s.grid(0.3, 0.6);
  const double by = r2(sy + st / 2 + bh / 2);
  if (s.coin()) {
    // slatted back under a rail
    // even span in cents keeps the slats symmetric about x = 0
    double bw = s.grid(0.05, 0.1);
    if (std::lround((sw - bw) * 100) % 2) bw = r2(bw + 0.01);
    const int k = s.pick(2, 4);
    const double bx = r2(-sw / 2 + bw / 2);
    parts.push_back(ex::symtrans(mv(bw, bh, bx, by), ex::axis_x(), ex::integer(k),
                                 ex::lit(r2(sw - bw))));
    const double rt = s.grid(0.05, 0.1);
    parts.push_back(mv(sw, rt, 0.0, r2(by + bh / 2 + rt / 2)));
  } else {
    parts.push_back(mv(sw, bh, 0.0, by));
  }
  return fold_union(parts);
}

Expr shelf(Sampler& s) {
  std::vector<Expr> parts;
  const double w = s.grid(0.8, 1.5);
  const double pw = s.grid(0.05, 0.1);
  const double ph = s.grid(1.0, 1.8);
  const double py = s.grid(-0.1, 0.1);
  parts.push_back(mirrored(pw, ph, r2(w / 2 - pw / 2), py));
  const int k = s.pick(2, 4);
  const double bt = s.grid(0.04, 0.08);
  const double y0 = r2(py - ph / 2 + bt / 2 + s.grid(0.0, 0.1));
  const double span = r2(ph - (y0 - (py - ph / 2)) - bt / 2 - s.grid(0.0, 0.1));
  parts.push_back(ex::symtrans(mv(w - 2 * pw, bt, 0.0, y0), ex::axis_y(), ex::integer(k),
                               ex::lit(span)));
  return fold_union(parts);
}

}  // namespace

SyntheticCorpus gen_synthetic_corpus(std::size_t n, std::uint64_t seed,
                                     const std::string& id_prefix) {
  if (n == 0) throw std::invalid_argument("corpus size must be at least 1");
  SyntheticCorpus c;
  Sampler s(seed);
  DreamRules rules;
  while (c.scenes.size() < n) {
    const int kind = s.pick(0, 2);
    const Expr p = kind == 0 ? table(s) : kind == 1 ? chair(s) : shelf(s);
    Scene d;
    d.id = id_prefix + "_" + std::to_string(c.scenes.size());
    d.prims = execute(p);
    try {
      validate_scene(d);
    } catch (const DslError&) {
      continue;
    }
    if (!dream_rejection(p, d.prims, rules).empty()) continue;
    c.scenes.push_back(std::move(d));
    c.latent.push_back(p);
    c.categories.push_back(kind == 0 ? "table" : kind == 1 ? "chair" : "shelf");
  }
  return c;
}

}  // namespace shapeabs
