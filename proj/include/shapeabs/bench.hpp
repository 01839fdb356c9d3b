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

#include <string>
#include <vector>

#include "shapeabs/refactor.hpp"

namespace shapeabs {

/// Benchmark family: a Union of mirrored bars whose offsets are sums and
/// differences of their sizes, four float variables per bar.
Expr bench_expression(int float_params);

/// The abstraction every bar in the family matches.
Abstraction bench_abstraction();

/// Naive scheme: every pair of valued float classes gets Add and Sub nodes,
/// up to `depth` levels. A new term whose value equals one of the program's
/// floats is merged into that float's class, so structural patterns can see it.
std::function<bool(EGraph&)> arithmetic_expansion(int depth, double tolerance,
                                                  std::size_t max_nodes);

struct BenchCell {
  double seconds = 0.0;
  bool saturated = false;
  bool timed_out = false;
  bool node_limit = false;
  std::size_t nodes = 0;
  std::size_t calls = 0;  // abstraction calls in the extracted program
};

struct BenchRow {
  int params = 0;
  BenchCell conditional;
  BenchCell naive;
};

struct BenchConfig {
  std::vector<int> params = {8, 16, 32};
  double timeout = 60.0;
  std::size_t max_nodes = 2000000;  // memory guard, reported like a timeout
  int max_rounds = 8;
  int expansion_depth = 2;
};

BenchCell bench_one(int params, ConditionScheme scheme, const BenchConfig& cfg);
std::vector<BenchRow> bench_rewrites(const BenchConfig& cfg = {});

/// One line per count: params, conditional time, naive time (X on timeout).
std::string format_bench(const std::vector<BenchRow>& rows);

}  // namespace shapeabs
