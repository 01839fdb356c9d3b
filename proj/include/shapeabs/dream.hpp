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

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

/// Base skeletons that dreams can also be drawn from.
std::vector<std::string> base_dream_sources();

/// Body and parameter types of a dream source: a base skeleton name
/// (Rect, Move, SymRef, SymTrans, Union) or a library function.
std::pair<Expr, std::vector<Type>> dream_source(const std::string& name, const Library& lib);

/// Per-role float distributions. Dimensions and offsets are two- and
/// three-component Gaussian mixtures.
struct DreamDistributions {
  struct Component {
    double weight, mean, stddev;
  };
  std::vector<Component> dim = {{0.5, 0.3, 0.15}, {0.5, 0.08, 0.04}};
  std::vector<Component> offset = {{0.6, 0.0, 0.1}, {0.2, -0.45, 0.1}, {0.2, 0.45, 0.1}};
  std::vector<Component> distance = {{0.5, 0.4, 0.15}, {0.5, -0.4, 0.15}};
  std::vector<Component> other = {{1.0, 0.0, 0.3}};
  int decimals = 2;  // sampled values are rounded to this grid
};

struct DreamRules {
  double min_area = 0.005;
  double min_visible = 0.5;
  int max_prims = kMaxScenePrims;
  int max_rejections = 10000;
};

struct Dream {
  Expr expr;
  std::vector<Primitive> prims;
  std::string source;
};

class DreamTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact fraction of p's area not covered by any of `others`.
double visible_fraction(const Primitive& p, const std::vector<Primitive>& others);

/// Empty when the primitives pass every rule, else the first failed rule.
std::string dream_rejection(const Expr& inlined, const std::vector<Primitive>& prims,
                            const DreamRules& rules);

Dream sample_dream(const std::string& source, const Library& lib, std::mt19937_64& rng,
                   const DreamDistributions& dist = {}, const DreamRules& rules = {});

/// Prefix token sequence of an expression, e.g. SymRef Move Rect 0.1 0.2 0.3 0 AX.
std::vector<std::string> expr_tokens(const Expr& e);

struct CompositeScene {
  Scene scene;
  std::vector<Dream> targets;
  std::vector<std::pair<double, double>> offsets;  // applied to each target, not in its expr
  std::size_t distractors = 0;
};

/// Draws k in [1,4] targets from the least represented sources in `pool`,
/// optionally shifts each one and adds distractor primitives from `corpus`.
/// `counts` tracks how often each source has been a target.
CompositeScene make_composite(const std::map<std::string, std::vector<Dream>>& pool,
                              const std::vector<Scene>& corpus,
                              std::map<std::string, std::size_t>& counts, std::mt19937_64& rng,
                              const DreamRules& rules = {});

struct DreamPhaseConfig {
  std::size_t per_source = 2000;  // N_D: target sequences per source
  int workers = 1;
  DreamDistributions dist;
  DreamRules rules;
};

struct DreamPhaseResult {
  std::vector<CompositeScene> composites;
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> skipped;  // sources that timed out
};

DreamPhaseResult dream_phase(const Library& lib, const std::vector<Scene>& corpus,
                             const DreamPhaseConfig& cfg, std::uint64_t seed);

/// One JSON line per (scene, target): {"scene": [[w,h,x,y],...], "target_tokens": [...]}.
std::string format_dream_records(const std::vector<CompositeScene>& composites);

}  // namespace shapeabs
