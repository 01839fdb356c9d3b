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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shapeabs/dream.hpp"
#include "shapeabs/integration.hpp"
#include "shapeabs/proposal.hpp"
#include "shapeabs/wake.hpp"

namespace shapeabs {

struct PipelineConfig {
  std::string corpus;                 // JSONL scenes
  std::filesystem::path out = "out";  // artifact directory
  int rounds = 3;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t top_n = 20;             // N_A
  std::size_t dreams_per_source = 2000;  // N_D
  bool export_dreams = false;
  std::size_t proposal_iterations = 2000;
  ProposerBudget wake_budget;
  std::vector<std::string> proposer_command;  // empty: search proposer
  SaturationBudget refactor_budget;
  ObjectiveConfig objective;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys throw.
void apply_config(PipelineConfig& cfg, const std::string& text);
void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string format_config(const PipelineConfig& cfg);

/// Largest per-coordinate gap between matched primitives; infinity when the
/// program fails to execute or match.
double binned_deviation(const Expr& p, const Scene& d, const Library& lib);
/// Half a 2-decimal bin.
inline constexpr double kBinTolerance = 0.005;

struct TracePoint {
  int round = 0;
  std::string phase;  // naive, wake, integration
  double objective = 0.0;
};

/// A proposal that integration kept, with the wake programs it was mined from.
struct AcceptedAbstraction {
  int round = 0;
  std::string name;
  CandidateAbstraction candidate;
  std::size_t wake_round = 0;  // index into RunResult::wake_programs
};

struct RunResult {
  Library lib;
  std::vector<Expr> programs;
  std::vector<TracePoint> trace;
  double naive_objective = 0.0;
  std::size_t soundness_violations = 0;  // refactored programs not matching their scene
  std::size_t inexact_programs = 0;      // valid but not equal at 2-decimal binning
  std::size_t checked_programs = 0;
  std::vector<std::string> notes;        // budget exhaustion and similar
  std::vector<AcceptedAbstraction> accepted;
  std::vector<std::vector<Expr>> wake_programs;  // per round, before integration
  std::vector<Library> libraries;                // per round incl. round 0
  std::vector<std::vector<Expr>> round_programs;  // per round incl. round 0
};

/// Dream, wake, proposal, integration for `cfg.rounds` rounds. Writes
/// round_<r>/{library.json,programs.tsv,integration.log,proposals.tsv} and
/// trace.tsv under cfg.out when `persist` is set.
RunResult run_pipeline(const std::vector<Scene>& scenes, const PipelineConfig& cfg,
                       bool persist = true);

std::unique_ptr<Proposer> make_proposer(const PipelineConfig& cfg);

/// Wakes and refactors every scene against the per-scene cache (optional).
std::vector<Expr> wake_all(const std::vector<Scene>& scenes, const Library& lib,
                           Proposer& proposer, const PipelineConfig& cfg,
                           const std::vector<Expr>* previous = nullptr,
                           std::vector<ExprCache>* caches = nullptr);

struct PhiResult {
  std::vector<Expr> programs;
  double objective = 0.0;
  double mean_calls = 0.0;  // abstraction uses per program
};

/// Post-hoc inference with a frozen library.
PhiResult phi(const Library& lib, const std::vector<Scene>& scenes, const PipelineConfig& cfg);

std::string format_trace(const std::vector<TracePoint>& trace);

/// Deterministic SVG with one rect per primitive in viewBox [-1.1,1.1]^2.
/// `groups[i]` picks the palette colour of primitive i.
std::string render_svg(const std::vector<Primitive>& prims, const std::vector<int>& groups = {});
/// Colours primitives by the top-level expression that produced them.
std::string render_program(const Expr& p, const Library& lib);

}  // namespace shapeabs
