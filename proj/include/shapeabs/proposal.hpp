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
#include <string>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

/// Operator skeleton with float and int leaves lifted into slots. Axes stay
/// in the skeleton. `body` holds P<k> for slot k.
struct Structure {
  std::string key;
  Expr body;
  std::vector<Type> slots;  // Float or Int
};

struct StructureRow {
  std::vector<double> values;  // one per slot; ints stored exactly
  int program = 0;             // index into P
};

struct StructureTable {
  std::map<std::string, Structure> structures;
  std::map<std::string, std::vector<StructureRow>> rows;
  std::size_t programs = 0;

  std::size_t row_count(const std::string& key) const;
};

/// Lifts an expression into its structure and concrete slot values.
Structure structure_of(const Expr& e, std::vector<double>* values = nullptr);

/// Records every shape sub-expression of every top-level expression, plus
/// every unordered pair of top-level expressions. Keys seen in fewer than
/// `min_fraction` of the programs are dropped.
StructureTable record_structures(const std::vector<Expr>& programs,
                                 double min_fraction = 0.05);

struct Cluster {
  std::string key;
  std::vector<StructureRow> rows;
};

Cluster sample_cluster(const StructureTable& table, std::mt19937_64& rng,
                       std::size_t max_rows = 64);

struct ProposalConfig {
  double tolerance = 0.005;
  double min_support = 0.2;  // options must fit this fraction of the cluster
  std::size_t iterations = 2000;
  std::size_t cluster_rows = 64;
  double min_fraction = 0.05;
  int workers = 1;
};

struct CandidateAbstraction {
  Abstraction abstraction;  // name left empty until integration
  std::string key;          // structure it was mined from
  std::vector<Expr> slot_exprs;  // per slot: Param, constant, or arithmetic over params
  double frequency = 0.0;
  double gain = 0.0;
  double score = 0.0;
  std::vector<int> coverage;  // programs with at least one fitting row
  bool degenerate = false;    // zero gain
  bool admissible = true;     // passes the library weight rules
};

/// True when the candidate recreates the row's slot values.
bool fits(const CandidateAbstraction& c, const StructureRow& row, double tol);

/// Greedy slot filling over one cluster. Frequency is cluster-local.
CandidateAbstraction greedy_abstraction_search(const Cluster& cluster,
                                               const StructureTable& table,
                                               const Library& lib, double tol = 0.005,
                                               double min_support = 0.2);

/// Samples clusters, searches each, merges identical bodies and ranks by
/// score with frequency measured over all programs.
std::vector<CandidateAbstraction> propose(const std::vector<Expr>& programs,
                                          const Library& lib, const ProposalConfig& cfg,
                                          std::uint64_t seed);

/// rank, score, frequency, gain, coverage size, body; one line each.
std::string format_candidates(const std::vector<CandidateAbstraction>& cands);

}  // namespace shapeabs
