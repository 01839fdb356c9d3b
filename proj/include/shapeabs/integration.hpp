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
#include <string>
#include <vector>

#include "shapeabs/proposal.hpp"
#include "shapeabs/refactor.hpp"

namespace shapeabs {

struct IntegrationConfig {
  std::size_t top_n = 20;          // candidates trialled per phase
  double dec_drop = 0.5;           // relative usage drop that puts f in f_dec
  double gate_fraction = 0.25;     // subsample size for the cheap pre-check
  std::size_t gate_min_programs = 40;  // below this P is always evaluated in full
  int workers = 1;
  std::uint64_t seed = 0;
  RefactorConfig refactor;
};

/// Replaces calls to functions missing from `to` by their bodies in `from`.
Expr inline_missing(const Expr& e, const Library& from, const Library& to);

/// Programs (by count) that use each function, directly or through another
/// function's body.
std::map<std::string, std::size_t> usage_counts(const std::vector<Expr>& programs,
                                                 const Library& lib);

struct VariantEval {
  double objective = 0.0;
  std::vector<Expr> programs;
  std::size_t errors = 0;  // refactor failures; those programs were kept
};

/// Refactors every program (or the `subset` indices) under `to` after
/// inlining calls that `to` lacks. Each scene keeps the cheaper of its
/// inlined and refactored program.
VariantEval evaluate_variant(const Library& from, const Library& to,
                             const std::vector<Expr>& programs,
                             const std::vector<Scene>& scenes, const IntegrationConfig& cfg,
                             const std::vector<std::size_t>* subset = nullptr);

struct IntegrationEvent {
  std::string kind;     // add, dec, remove, usage
  std::string subject;  // body text or function name
  double before = 0.0;
  double after = 0.0;
  std::string decision;  // accepted, rejected, gated, skipped
  std::vector<std::string> removed;
};

struct IntegrationResult {
  Library lib;
  std::vector<Expr> programs;
  double objective_in = 0.0;
  double objective_out = 0.0;
  std::vector<IntegrationEvent> log;
  std::size_t refactor_errors = 0;
};

IntegrationResult integrate(const Library& lib, const std::vector<Expr>& programs,
                            const std::vector<Scene>& scenes,
                            std::vector<CandidateAbstraction> candidates,
                            const IntegrationConfig& cfg = {});

std::string format_log(const std::vector<IntegrationEvent>& log);

}  // namespace shapeabs
