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

namespace shapeabs {

/// Per-token-class weights used to price programs.
struct TokenWeights {
  double float_literal = 2.0;  // float tokens and FLOAT arguments
  double shape_fn = 1.0;       // shape-returning functions, incl. abstractions
  double float_fn = 0.1;       // Add / Sub / Mul / Div
  double categorical = 0.5;    // axes and integers
};

/// Rules that price (or reject) an abstraction's presence in the library.
struct OmegaPolicy {
  double base = 0.25;
  double min = 0.125;
  double max = 0.5;
  double per_expression = -0.05;
  double doubleton = -0.0625;
  double singleton = 0.0625;
  double per_extra_slot = 0.05;
  int free_slots = 6;        // slots beyond this are penalised
  int max_float_slots = 10;  // more than this is rejected outright
  double min_usage = 0.01;   // fraction of programs that must use it
};

struct ObjectiveConfig {
  TokenWeights weights;
  double error_weight = 10.0;
  double max_prim_error = 0.05;
  OmegaPolicy omega;
};

}  // namespace shapeabs
