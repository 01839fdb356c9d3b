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
#include <string>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

/// Furniture-like silhouettes (tables, chairs, shelves) built from latent
/// programs on a 2-decimal grid, then flattened to primitives.
struct SyntheticCorpus {
  std::vector<Scene> scenes;
  std::vector<Expr> latent;             // generating program per scene
  std::vector<std::string> categories;  // table, chair, shelf
};

SyntheticCorpus gen_synthetic_corpus(std::size_t n, std::uint64_t seed,
                                     const std::string& id_prefix = "shape");

}  // namespace shapeabs
