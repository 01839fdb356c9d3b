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

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "shapeabs/dsl.hpp"
#include "shapeabs/objective.hpp"

namespace shapeabs {

/// Union tree of Move(Rect) per primitive; Move dropped at the origin.
Expr naive_program(const Scene& d);
Expr naive_expr(const Primitive& p);

/// Top-level Union operands in left-to-right order.
std::vector<Expr> split_union(const Expr& p);
/// Left-leaning Union fold.
Expr fold_union(const std::vector<Expr>& parts);

struct ProposerBudget {
  std::size_t max_candidates = 20000;
  double max_seconds = 1.0;
  std::size_t batch = 256;  // used by sampling proposers
};

/// Source of candidate expressions for a partially covered canvas.
class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual std::vector<Expr> propose(const std::vector<Primitive>& canvas,
                                    const Library& lib,
                                    const ProposerBudget& budget) = 0;
};

/// Solves template parameters from canvas primitives. Each template (a base
/// operator skeleton or a library abstraction with its discrete slots fixed)
/// is affine in its float slots; pinning output primitives to canvas
/// primitives gives linear equations whose solution is then executed and
/// matched.
class SearchProposer : public Proposer {
 public:
  std::vector<Expr> propose(const std::vector<Primitive>& canvas, const Library& lib,
                            const ProposerBudget& budget) override;
};

/// Talks to an external proposer over line-delimited JSON on stdin/stdout.
/// Request: {"scene": [[w,h,x,y],...], "batch": n, "time_budget": s}
/// Response: {"expressions": ["...", ...]} or {"error": "..."}
class SubprocessProposer : public Proposer {
 public:
  explicit SubprocessProposer(std::vector<std::string> argv);
  ~SubprocessProposer() override;
  SubprocessProposer(const SubprocessProposer&) = delete;
  SubprocessProposer& operator=(const SubprocessProposer&) = delete;

  std::vector<Expr> propose(const std::vector<Primitive>& canvas, const Library& lib,
                            const ProposerBudget& budget) override;
  std::size_t dropped() const { return dropped_; }

 private:
  std::string roundtrip(const std::string& line);
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::mutex mu_;  // one request in flight
  std::string pending_;
  std::size_t dropped_ = 0;
};

/// Subset of a scene explained by one expression.
struct CacheEntry {
  Expr expr;
  std::vector<int> covered;  // indices into the scene's primitives
  double cost = 0.0;         // program complexity
};

/// Previously accepted expressions per scene.
struct ExprCache {
  std::vector<CacheEntry> entries;
  void add(const Expr& e, const Scene& d, const Library& lib);
  void add_program(const Expr& p, const Scene& d, const Library& lib);
};

/// Assigns each top-level expression of p to a disjoint subset of d.
/// Returns false if p does not explain d.
bool expression_covers(const std::vector<Expr>& parts, const Scene& d, const Library& lib,
                       std::vector<std::vector<int>>& covers);

struct WakeStats {
  std::size_t steps = 0;
  std::size_t candidates = 0;
};

Expr wake_solve(const Scene& d, const Library& lib, Proposer& proposer,
                const ProposerBudget& budget = {}, ExprCache* cache = nullptr,
                WakeStats* stats = nullptr);

enum class CombineChoice { Previous, New, Merged, Rebuilt };

struct CombineResult {
  Expr program;
  CombineChoice choice = CombineChoice::New;
  double term = 0.0;  // scene term of the chosen program
};

/// Picks the best of: previous program, new program, greedy splice of new
/// expressions into the previous one, greedy rebuild from the cache.
CombineResult combine(const Expr* prev, const Expr& fresh, const ExprCache& cache,
                      const Scene& d, const Library& lib);

}  // namespace shapeabs
