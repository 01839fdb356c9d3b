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

#include "shapeabs/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace shapeabs {

using nlohmann::json;

namespace {

Primitive prim_from_json(const json& q) {
  if (!q.is_array() || q.size() != 4)
    throw DslError(DslError::Kind::Syntax, "primitive must be [w,h,x,y]");
  return {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
          q[3].get<double>()};
}

Type type_from_name(const std::string& s) {
  if (s == "FLOAT") return Type::Float;
  if (s == "INT") return Type::Int;
  if (s == "AXIS") return Type::Axis;
  if (s == "SHAPE") return Type::Shape;
  throw DslError(DslError::Kind::Type, "unknown slot type " + s);
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Scene> parse_corpus(const std::string& text) {
  std::vector<Scene> scenes;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DslError(DslError::Kind::Syntax,
                     "corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    Scene s;
    const json* prims = &rec;
    if (rec.is_object()) {
      if (rec.contains("id"))
        s.id = rec["id"].is_string() ? rec["id"].get<std::string>()
                                     : rec["id"].dump();
      if (!rec.contains("prims"))
        throw DslError(DslError::Kind::Syntax,
                       "corpus line " + std::to_string(lineno) + ": no prims");
      prims = &rec["prims"];
    }
    if (s.id.empty()) s.id = std::to_string(scenes.size());
    if (!prims->is_array())
      throw DslError(DslError::Kind::Syntax,
                     "corpus line " + std::to_string(lineno) + ": bad prims");
    for (const auto& q : *prims) s.prims.push_back(prim_from_json(q));
    validate_scene(s);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Scene> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_text(path));
}

std::string format_corpus(const std::vector<Scene>& scenes) {
  std::string out;
  for (const auto& s : scenes) {
    json prims = json::array();
    for (const auto& p : s.prims) prims.push_back({p.w, p.h, p.x, p.y});
    json rec = {{"id", s.id}, {"prims", prims}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<Scene>& scenes) {
  write_text(path, format_corpus(scenes));
}

std::string format_library(const Library& lib) {
  const auto& c = lib.config;
  json doc;
  doc["config"] = {
      {"lambda_float", c.weights.float_literal},
      {"lambda_shapefn", c.weights.shape_fn},
      {"lambda_floatfn", c.weights.float_fn},
      {"lambda_categorical", c.weights.categorical},
      {"error_weight", c.error_weight},
      {"max_prim_error", c.max_prim_error},
  };
  doc["next_id"] = lib.next_id();
  json arr = json::array();
  for (const auto& a : lib.abstractions()) {
    json params = json::array();
    for (Type t : a.params) params.push_back(std::string(type_name(t)));
    arr.push_back({{"name", a.name},
                   {"params", params},
                   {"body", print(a.body)},
                   {"omega", a.omega}});
  }
  doc["abstractions"] = arr;
  return doc.dump(2) + "\n";
}

Library parse_library(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DslError(DslError::Kind::Syntax, std::string("library: ") + e.what());
  }
  Library lib;
  if (doc.contains("config")) {
    const auto& j = doc["config"];
    auto& c = lib.config;
    c.weights.float_literal = j.value("lambda_float", c.weights.float_literal);
    c.weights.shape_fn = j.value("lambda_shapefn", c.weights.shape_fn);
    c.weights.float_fn = j.value("lambda_floatfn", c.weights.float_fn);
    c.weights.categorical = j.value("lambda_categorical", c.weights.categorical);
    c.error_weight = j.value("error_weight", c.error_weight);
    c.max_prim_error = j.value("max_prim_error", c.max_prim_error);
  }
  for (const auto& a : doc.value("abstractions", json::array())) {
    Abstraction abs;
    abs.name = a.at("name").get<std::string>();
    for (const auto& t : a.at("params"))
      abs.params.push_back(type_from_name(t.get<std::string>()));
    std::vector<std::optional<Type>> slots(abs.params.begin(), abs.params.end());
    abs.body = parse(a.at("body").get<std::string>(), &lib, &slots);
    if (slots.size() != abs.params.size())
      throw DslError(DslError::Kind::Invalid,
                     abs.name + ": body references undeclared parameter");
    abs.omega = a.value("omega", 0.25);
    lib.add(std::move(abs));
  }
  lib.set_next_id(std::max(lib.next_id(), doc.value("next_id", 0)));
  return lib;
}

Library read_library(const std::filesystem::path& path) {
  return parse_library(read_text(path));
}

void write_library(const std::filesystem::path& path, const Library& lib) {
  write_text(path, format_library(lib));
}

std::string format_programs(const std::vector<Scene>& scenes,
                            const std::vector<Expr>& programs) {
  std::string out;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    out += i < scenes.size() ? scenes[i].id : std::to_string(i);
    out += '\t';
    out += print(programs[i]);
    out += '\n';
  }
  return out;
}

std::vector<Expr> parse_programs(const std::string& text,
                                 const std::vector<Scene>& scenes,
                                 const Library& lib) {
  std::map<std::string, Expr> by_id;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DslError(DslError::Kind::Syntax, "program line lacks an id");
    by_id[line.substr(0, tab)] = parse(line.substr(tab + 1), &lib);
  }
  std::vector<Expr> out;
  for (const auto& s : scenes) {
    auto it = by_id.find(s.id);
    if (it == by_id.end())
      throw DslError(DslError::Kind::Invalid, "no program for scene " + s.id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace shapeabs
