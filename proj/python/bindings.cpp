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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shapeabs/io.hpp"
#include "shapeabs/objective.hpp"
#include "shapeabs/pipeline.hpp"
#include "shapeabs/refactor.hpp"
#include "shapeabs/synthetic.hpp"

namespace py = pybind11;
using namespace shapeabs;

namespace {

using Quad = std::array<double, 4>;

std::vector<Primitive> to_prims(const std::vector<Quad>& q) {
  std::vector<Primitive> out;
  for (const auto& p : q) out.push_back({p[0], p[1], p[2], p[3]});
  return out;
}

std::vector<Quad> from_prims(const std::vector<Primitive>& ps) {
  std::vector<Quad> out;
  for (const auto& p : ps) out.push_back({p.w, p.h, p.x, p.y});
  return out;
}

Library lib_or_empty(const std::string& text) {
  return text.empty() ? Library{} : parse_library(text);
}

std::vector<Scene> to_scenes(const std::vector<std::vector<Quad>>& scenes) {
  std::vector<Scene> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) out.push_back({std::to_string(i), to_prims(scenes[i])});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Library learning over 2D rectangle scenes";

  py::register_exception<DslError>(m, "DslError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("canonical", [](const std::string& expr, const std::string& lib) {
    const Library l = lib_or_empty(lib);
    return print(parse(expr, &l));
  }, py::arg("expr"), py::arg("library") = "", "Parse and print an expression.");

  m.def("execute", [](const std::string& expr, const std::string& lib) {
    const Library l = lib_or_empty(lib);
    return from_prims(execute(parse(expr, &l), &l));
  }, py::arg("expr"), py::arg("library") = "", "Primitives [w,h,x,y] of an expression.");

  m.def("complexity", [](const std::string& expr, const std::string& lib) {
    const Library l = lib_or_empty(lib);
    return program_complexity(parse(expr, &l), l);
  }, py::arg("expr"), py::arg("library") = "");

  m.def("match", [](const std::vector<Quad>& out, const std::vector<Quad>& target,
                    double threshold, bool program_mode) {
    const Match r = match_primitives(to_prims(out), to_prims(target), threshold, program_mode);
    return py::make_tuple(r.valid, r.error, r.assignment);
  }, py::arg("out"), py::arg("target"), py::arg("threshold") = 0.05,
     py::arg("program_mode") = true, "(valid, error, assignment)");

  m.def("refactor", [](const std::string& expr, const std::string& lib) {
    const Library l = parse_library(lib);
    return print(refactor(parse(expr, &l), l).program);
  }, py::arg("expr"), py::arg("library"));

  m.def("synthetic_corpus", [](std::size_t n, std::uint64_t seed) {
    const auto c = gen_synthetic_corpus(n, seed);
    std::vector<std::vector<Quad>> scenes;
    std::vector<std::string> latent;
    for (std::size_t i = 0; i < c.scenes.size(); ++i) {
      scenes.push_back(from_prims(c.scenes[i].prims));
      latent.push_back(print(c.latent[i]));
    }
    return py::make_tuple(scenes, latent, c.categories);
  }, py::arg("n"), py::arg("seed") = 0, "(scenes, latent programs, categories)");

  m.def("run", [](const std::vector<std::vector<Quad>>& scenes, const std::string& config) {
    PipelineConfig cfg;
    apply_config(cfg, config);
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run_pipeline(to_scenes(scenes), cfg, false);
    }
    std::vector<std::string> progs;
    for (const auto& p : r.programs) progs.push_back(print(p));
    std::vector<py::tuple> trace;
    for (const auto& t : r.trace) trace.push_back(py::make_tuple(t.round, t.phase, t.objective));
    py::dict out;
    out["library"] = format_library(r.lib);
    out["programs"] = progs;
    out["trace"] = trace;
    out["naive_objective"] = r.naive_objective;
    return out;
  }, py::arg("scenes"), py::arg("config") = "",
     "Run the rounds in memory. `config` uses the key = value format.");

  m.def("phi", [](const std::vector<std::vector<Quad>>& scenes, const std::string& lib,
                  const std::string& config) {
    PipelineConfig cfg;
    apply_config(cfg, config);
    const Library l = lib_or_empty(lib);
    PhiResult r;
    {
      py::gil_scoped_release release;
      r = phi(l, to_scenes(scenes), cfg);
    }
    std::vector<std::string> progs;
    for (const auto& p : r.programs) progs.push_back(print(p));
    return py::make_tuple(progs, r.objective, r.mean_calls);
  }, py::arg("scenes"), py::arg("library") = "", py::arg("config") = "",
     "(programs, objective, mean calls) with a frozen library.");

  m.def("render_svg", [](const std::vector<Quad>& prims) { return render_svg(to_prims(prims)); });
}
