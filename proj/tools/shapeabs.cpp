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

// Command line front end. Exit codes: 0 ok, 1 other failure, 2 usage,
// 3 malformed input, 4 file I/O.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapeabs/bench.hpp"
#include "shapeabs/integration.hpp"
#include "shapeabs/io.hpp"
#include "shapeabs/objective.hpp"
#include "shapeabs/pipeline.hpp"
#include "shapeabs/proposal.hpp"
#include "shapeabs/refactor.hpp"
#include "shapeabs/synthetic.hpp"

namespace fs = std::filesystem;
using namespace shapeabs;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitIo = 4;

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  PipelineConfig cfg;
  std::string file = path;
  if (file.empty())
    if (const char* env = std::getenv("SHAPEABS_CONFIG")) file = env;
  if (!file.empty()) apply_config(cfg, read_text(file));
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text(out, text);
}

fs::path latest_round(const fs::path& run) {
  int best = -1;
  for (const auto& e : fs::directory_iterator(run)) {
    const std::string n = e.path().filename().string();
    if (e.is_directory() && n.rfind("round_", 0) == 0) best = std::max(best, std::stoi(n.substr(6)));
  }
  if (best < 0) throw IoError("no round_<k> directory under " + run.string());
  return run / ("round_" + std::to_string(best));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Library learning over 2D rectangle scenes"};
  app.require_subcommand(1);

  // Shared option storage.
  std::string config_path, corpus, lib_path, programs_path, out, expr_text;
  std::vector<std::string> sets;
  int rounds = -1, workers = 0, index = 0;
  long long seed = -1;
  std::size_t n = 200;
  std::vector<int> params{8, 16, 32};
  double timeout = 60.0;

  auto add_overrides = [&](CLI::App* c) {
    c->add_option("-c,--config", config_path, "key = value config file (default $SHAPEABS_CONFIG)");
    c->add_option("--set", sets, "override one config key, key=value");
    c->add_option("--workers", workers, "worker threads");
    c->add_option("--seed", seed, "root seed");
  };

  auto* gen = app.add_subcommand("gen-data", "write a synthetic furniture corpus");
  gen->add_option("-n,--count", n, "number of scenes");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("-o,--out", out, "corpus file")->required();
  gen->add_option("--latent", programs_path, "also write the generating programs");

  auto* run = app.add_subcommand("run", "dream/wake/proposal/integration rounds");
  add_overrides(run);
  run->add_option("--corpus", corpus, "corpus file");
  run->add_option("-r,--rounds", rounds, "round count");
  run->add_option("-o,--out", out, "artifact directory");

  auto* wake = app.add_subcommand("wake", "infer programs with a frozen library");
  add_overrides(wake);
  wake->add_option("--corpus", corpus)->required();
  wake->add_option("--lib", lib_path, "library file (default: empty)");
  wake->add_option("-o,--out", out, "programs file");

  auto* prop = app.add_subcommand("propose", "candidate abstractions from programs");
  add_overrides(prop);
  prop->add_option("--corpus", corpus)->required();
  prop->add_option("--programs", programs_path)->required();
  prop->add_option("--lib", lib_path);
  prop->add_option("-o,--out", out, "proposal table");

  auto* ref = app.add_subcommand("refactor", "rewrite programs to use library functions");
  add_overrides(ref);
  ref->add_option("--lib", lib_path)->required();
  ref->add_option("-e,--expr", expr_text, "single expression");
  ref->add_option("--corpus", corpus);
  ref->add_option("--programs", programs_path);
  ref->add_option("-o,--out", out);

  auto* phi_cmd = app.add_subcommand("phi", "post-hoc inference on a corpus");
  add_overrides(phi_cmd);
  phi_cmd->add_option("--corpus", corpus)->required();
  phi_cmd->add_option("--lib", lib_path);
  phi_cmd->add_option("-o,--out", out, "programs file");

  auto* render = app.add_subcommand("render", "SVG of a scene or expression");
  render->add_option("--corpus", corpus, "render a scene from this corpus");
  render->add_option("--index", index, "scene line (0-based)");
  render->add_option("-e,--expr", expr_text, "render an expression, colored by part");
  render->add_option("--lib", lib_path);
  render->add_option("-o,--out", out)->required();

  auto* bench = app.add_subcommand("bench-rewrites", "conditional vs structural rewrite timing");
  bench->add_option("--params", params, "float parameter counts")->delimiter(',');
  bench->add_option("--timeout", timeout, "seconds per cell");
  bench->add_option("-o,--out", out);

  auto* report = app.add_subcommand("report", "summarise a run directory");
  report->add_option("--run", lib_path, "run directory")->required();
  report->add_option("--corpus", corpus)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the message
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    auto config = [&] {
      PipelineConfig cfg = load_config(config_path, sets);
      if (workers > 0) cfg.workers = workers;
      if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
      return cfg;
    };
    auto library = [&](const PipelineConfig& cfg) {
      if (lib_path.empty()) {
        Library lib;
        lib.config = cfg.objective;
        return lib;
      }
      return read_library(lib_path);
    };

    if (*gen) {
      const auto c = gen_synthetic_corpus(n, seed < 0 ? 0 : static_cast<std::uint64_t>(seed));
      write_corpus(out, c.scenes);
      if (!programs_path.empty()) write_text(programs_path, format_programs(c.scenes, c.latent));
      std::cout << "wrote " << c.scenes.size() << " scenes to " << out << '\n';
    } else if (*run) {
      PipelineConfig cfg = config();
      if (!corpus.empty()) cfg.corpus = corpus;
      if (rounds >= 0) cfg.rounds = rounds;
      if (!out.empty()) cfg.out = out;
      if (cfg.corpus.empty()) throw std::invalid_argument("no corpus given (--corpus or config key corpus)");
      const auto scenes = read_corpus(cfg.corpus);
      fs::create_directories(cfg.out);
      write_text(cfg.out / "config.txt", format_config(cfg));
      const RunResult r = run_pipeline(scenes, cfg, true);
      std::cout << format_trace(r.trace);
      for (const auto& note : r.notes) std::cerr << note << '\n';
      std::cout << "abstractions " << r.lib.abstractions().size() << "\nsoundness_violations "
                << r.soundness_violations << "\ninexact_programs " << r.inexact_programs << " of " << r.checked_programs << '\n';
    } else if (*wake || *phi_cmd) {
      const PipelineConfig cfg = config();
      const Library lib = library(cfg);
      const auto scenes = read_corpus(corpus);
      const PhiResult r = phi(lib, scenes, cfg);
      if (!out.empty()) write_text(out, format_programs(scenes, r.programs));
      std::cout << "objective " << format_float(r.objective) << "\nmean_calls "
                << format_float(r.mean_calls) << '\n';
    } else if (*prop) {
      const PipelineConfig cfg = config();
      const Library lib = library(cfg);
      const auto scenes = read_corpus(corpus);
      const auto programs = parse_programs(read_text(programs_path), scenes, lib);
      ProposalConfig pc;
      pc.iterations = cfg.proposal_iterations;
      pc.workers = cfg.workers;
      emit(out, format_candidates(propose(programs, lib, pc, cfg.seed)));
    } else if (*ref) {
      const PipelineConfig cfg = config();
      const Library lib = read_library(lib_path);
      RefactorConfig rc;
      rc.budget = cfg.refactor_budget;
      if (!expr_text.empty()) {
        const RefactorResult r = refactor(parse(expr_text, &lib), lib, rc);
        std::cout << print(r.program) << '\n' << "cost " << format_float(r.cost_before) << " -> "
                  << format_float(r.cost_after) << '\n';
      } else {
        if (corpus.empty() || programs_path.empty())
          throw std::invalid_argument("refactor needs --expr or both --corpus and --programs");
        const auto scenes = read_corpus(corpus);
        auto programs = parse_programs(read_text(programs_path), scenes, lib);
        for (auto& p : programs) p = refactor(p, lib, rc).program;
        emit(out, format_programs(scenes, programs));
        std::cerr << "objective " << format_float(objective(lib, programs, scenes)) << '\n';
      }
    } else if (*render) {
      Library lib;
      if (!lib_path.empty()) lib = read_library(lib_path);
      if (!expr_text.empty()) {
        write_text(out, render_program(parse(expr_text, &lib), lib));
      } else {
        if (corpus.empty()) throw std::invalid_argument("render needs --expr or --corpus");
        const auto scenes = read_corpus(corpus);
        if (index < 0 || static_cast<std::size_t>(index) >= scenes.size())
          throw std::invalid_argument("scene index out of range");
        const auto& prims = scenes[static_cast<std::size_t>(index)].prims;
        write_text(out, render_svg(prims, std::vector<int>(prims.size(), 0)));
      }
    } else if (*bench) {
      BenchConfig bc;
      bc.params = params;
      bc.timeout = timeout;
      emit(out, format_bench(bench_rewrites(bc)));
    } else if (*report) {
      const fs::path dir = latest_round(lib_path);
      const Library lib = read_library(dir / "library.json");
      const auto scenes = read_corpus(corpus);
      const auto programs = parse_programs(read_text(dir / "programs.tsv"), scenes, lib);
      Library base;
      base.config = lib.config;
      std::vector<Expr> naive;
      for (const auto& d : scenes) naive.push_back(naive_program(d));
      const double f0 = objective(base, naive, scenes);
      const double f = objective(lib, programs, scenes);
      std::cout << "round " << dir.filename().string() << "\nnaive_objective " << format_float(f0)
                << "\nobjective " << format_float(f) << "\ncompression "
                << format_float(std::round(1000.0 * (1.0 - f / f0)) / 10.0) << "%\n";
      const auto usage = usage_counts(programs, lib);
      for (const auto& a : lib.abstractions()) {
        const auto it = usage.find(a.name);
        std::cout << a.name << "\tomega " << format_float(a.omega) << "\tprograms "
                  << (it == usage.end() ? 0 : it->second) << '\t' << print(a.body) << '\n';
      }
    }
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DslError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return 0;
}
