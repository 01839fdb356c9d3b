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

#include <filesystem>
#include <string>
#include <vector>

#include "shapeabs/dsl.hpp"

namespace shapeabs {

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One scene per line. A line is either a bare JSON array of [w,h,x,y]
/// quadruples or an object {"id": ..., "prims": [...]}. Missing ids become
/// the 0-based line number.
std::vector<Scene> parse_corpus(const std::string& text);
std::vector<Scene> read_corpus(const std::filesystem::path& path);
std::string format_corpus(const std::vector<Scene>& scenes);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<Scene>& scenes);

/// JSON document with the objective config and the abstraction list.
std::string format_library(const Library& lib);
Library parse_library(const std::string& text);
Library read_library(const std::filesystem::path& path);
void write_library(const std::filesystem::path& path, const Library& lib);

/// Tab separated `id<TAB>program`, one per line.
std::string format_programs(const std::vector<Scene>& scenes,
                            const std::vector<Expr>& programs);
std::vector<Expr> parse_programs(const std::string& text,
                                 const std::vector<Scene>& scenes,
                                 const Library& lib);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace shapeabs
