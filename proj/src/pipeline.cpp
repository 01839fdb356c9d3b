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

#include "shapeabs/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "shapeabs/io.hpp"
#include "shapeabs/objective.hpp"
#include "shapeabs/parallel.hpp"

namespace shapeabs {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw std::invalid_argument("config key " + key + " expects an integer");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key " + key + " expects true or false");
}

}  // namespace

void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& v) {
  auto nonneg = [&](long long x) {
    if (x < 0) throw std::invalid_argument("config key " + key + " must be non-negative");
    return static_cast<std::size_t>(x);
  };
  TokenWeights& w = c.objective.weights;
  if (key == "corpus") c.corpus = v;
  else if (key == "out") c.out = v;
  else if (key == "rounds") c.rounds = static_cast<int>(nonneg(to_int(key, v)));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(nonneg(to_int(key, v)));
  else if (key == "workers") c.workers = std::max<int>(1, static_cast<int>(to_int(key, v)));
  else if (key == "top_n") c.top_n = nonneg(to_int(key, v));
  else if (key == "dreams_per_source") c.dreams_per_source = nonneg(to_int(key, v));
  else if (key == "export_dreams") c.export_dreams = to_bool(key, v);
  else if (key == "proposal_iterations") c.proposal_iterations = nonneg(to_int(key, v));
  else if (key == "wake_max_candidates") c.wake_budget.max_candidates = nonneg(to_int(key, v));
  else if (key == "wake_max_seconds") c.wake_budget.max_seconds = to_double(key, v);
  else if (key == "wake_batch") c.wake_budget.batch = nonneg(to_int(key, v));
  else if (key == "proposer") {
    c.proposer_command.clear();
    std::istringstream is(v);
    for (std::string part; is >> part;) c.proposer_command.push_back(part);
  } else if (key == "refactor_max_rounds") c.refactor_budget.max_rounds = static_cast<int>(nonneg(to_int(key, v)));
  else if (key == "refactor_max_nodes") c.refactor_budget.max_nodes = nonneg(to_int(key, v));
  else if (key == "refactor_max_seconds") c.refactor_budget.max_seconds = to_double(key, v);
  else if (key == "lambda_float") w.float_literal = to_double(key, v);
  else if (key == "lambda_shapefn") w.shape_fn = to_double(key, v);
  else if (key == "lambda_floatfn") w.float_fn = to_double(key, v);
  else if (key == "lambda_categorical") w.categorical = to_double(key, v);
  else if (key == "error_weight") c.objective.error_weight = to_double(key, v);
  else if (key == "max_prim_error") c.objective.max_prim_error = to_double(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void apply_config(PipelineConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(n) + ": expected key = value");
    apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream os;
  const TokenWeights& w = c.objective.weights;
  std::string proposer;
  for (const auto& p : c.proposer_command) proposer += (proposer.empty() ? "" : " ") + p;
  os << "corpus = " << c.corpus << "\nout = " << c.out.string() << "\nrounds = " << c.rounds
     << "\nseed = " << c.seed << "\nworkers = " << c.workers << "\ntop_n = " << c.top_n
     << "\ndreams_per_source = " << c.dreams_per_source
     << "\nexport_dreams = " << (c.export_dreams ? "true" : "false")
     << "\nproposal_iterations = " << c.proposal_iterations
     << "\nwake_max_candidates = " << c.wake_budget.max_candidates
     << "\nwake_max_seconds = " << format_float(c.wake_budget.max_seconds)
     << "\nwake_batch = " << c.wake_budget.batch << "\nproposer = " << proposer
     << "\nrefactor_max_rounds = " << c.refactor_budget.max_rounds
     << "\nrefactor_max_nodes = " << c.refactor_budget.max_nodes
     << "\nrefactor_max_seconds = " << format_float(c.refactor_budget.max_seconds)
     << "\nlambda_float = " << format_float(w.float_literal)
     << "\nlambda_shapefn = " << format_float(w.shape_fn)
     << "\nlambda_floatfn = " << format_float(w.float_fn)
     << "\nlambda_categorical = " << format_float(w.categorical)
     << "\nerror_weight = " << format_float(c.objective.error_weight)
     << "\nmax_prim_error = " << format_float(c.objective.max_prim_error) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

std::unique_ptr<Proposer> make_proposer(const PipelineConfig& cfg) {
  if (cfg.proposer_command.empty()) return std::make_unique<SearchProposer>();
  return std::make_unique<SubprocessProposer>(cfg.proposer_command);
}

namespace {

RefactorConfig refactor_config(const PipelineConfig& cfg) {
  RefactorConfig rc;
  rc.budget = cfg.refactor_budget;
  return rc;
}

// The cheaper of p and its refactor under lib.
Expr polish(const Expr& p, const Scene& d, const Library& lib, const RefactorConfig& rc) {
  if (lib.abstractions().empty()) return p;
  const RefactorResult r = refactor(p, lib, rc);
  return scene_term(r.program, d, lib) < scene_term(p, d, lib) ? r.program : p;
}

std::size_t count_calls(const Expr& e) {
  std::size_t n = e.op == Op::Call;
  for (const auto& c : e.children) n += count_calls(c);
  return n;
}

}  // namespace

std::vector<Expr> wake_all(const std::vector<Scene>& scenes, const Library& lib,
                           Proposer& proposer, const PipelineConfig& cfg,
                           const std::vector<Expr>* previous, std::vector<ExprCache>* caches) {
  std::vector<Expr> out(scenes.size());
  const RefactorConfig rc = refactor_config(cfg);
  parallel_for(scenes.size(), cfg.workers, [&](std::size_t i) {
    const Scene& d = scenes[i];
    ExprCache local;
    ExprCache& cache = caches ? (*caches)[i] : local;
    const Expr fresh = wake_solve(d, lib, proposer, cfg.wake_budget, &cache);
    Expr p = previous ? combine(&(*previous)[i], fresh, cache, d, lib).program
                      : combine(nullptr, fresh, cache, d, lib).program;
    out[i] = polish(p, d, lib, rc);
  });
  return out;
}

PhiResult phi(const Library& lib, const std::vector<Scene>& scenes, const PipelineConfig& cfg) {
  auto proposer = make_proposer(cfg);
  PhiResult r;
  r.programs = wake_all(scenes, lib, *proposer, cfg);
  r.objective = objective(lib, r.programs, scenes);
  std::size_t calls = 0;
  for (const auto& p : r.programs) calls += count_calls(p);
  r.mean_calls = scenes.empty() ? 0.0 : static_cast<double>(calls) / static_cast<double>(scenes.size());
  return r;
}

double binned_deviation(const Expr& p, const Scene& d, const Library& lib) {
  std::vector<Primitive> out;
  try {
    out = execute(p, &lib);
  } catch (const DslError&) {
    return kInfinity;
  }
  if (out.empty()) return kInfinity;
  const Match m = match_primitives(out, d.prims, lib.config.max_prim_error, true);
  if (!m.valid) return kInfinity;
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Primitive& a = out[i];
    const Primitive& b = d.prims[static_cast<std::size_t>(m.assignment[i])];
    worst = std::max({worst, std::abs(a.w - b.w), std::abs(a.h - b.h), std::abs(a.x - b.x),
                      std::abs(a.y - b.y)});
  }
  return worst;
}

std::string format_trace(const std::vector<TracePoint>& trace) {
  std::ostringstream os;
  os << "round\tphase\tobjective\n";
  for (const auto& t : trace) os << t.round << '\t' << t.phase << '\t' << format_float(t.objective) << '\n';
  return os.str();
}

RunResult run_pipeline(const std::vector<Scene>& scenes, const PipelineConfig& cfg, bool persist) {
  if (scenes.empty()) throw std::invalid_argument("empty corpus");
  for (const auto& d : scenes) validate_scene(d);
  RunResult res;
  res.lib.config = cfg.objective;
  const std::size_t n = scenes.size();
  for (const auto& d : scenes) res.programs.push_back(naive_program(d));
  res.naive_objective = objective(res.lib, res.programs, scenes);
  res.trace.push_back({0, "naive", res.naive_objective});
  std::vector<ExprCache> caches(n);
  for (std::size_t i = 0; i < n; ++i) caches[i].add_program(res.programs[i], scenes[i], res.lib);

  auto save = [&](int round, const std::string& log, const std::string& proposals) {
    if (!persist) return;
    const auto dir = cfg.out / ("round_" + std::to_string(round));
    std::filesystem::create_directories(dir);
    write_library(dir / "library.json", res.lib);
    write_text(dir / "programs.tsv", format_programs(scenes, res.programs));
    if (round > 0) {
      write_text(dir / "integration.log", log);
      write_text(dir / "proposals.tsv", proposals);
    }
    write_text(cfg.out / "trace.tsv", format_trace(res.trace));
  };
  save(0, "", "");
  res.libraries.push_back(res.lib);
  res.round_programs.push_back(res.programs);

  auto check = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = binned_deviation(res.programs[i], scenes[i], res.lib);
      ++res.checked_programs;
      if (!std::isfinite(dev)) ++res.soundness_violations;
      else if (dev > kBinTolerance + 1e-9) ++res.inexact_programs;
    }
  };

  auto proposer = make_proposer(cfg);
  std::mt19937_64 master(cfg.seed);
  for (int r = 1; r <= cfg.rounds; ++r) {
    const std::uint64_t dream_seed = master(), propose_seed = master(), integrate_seed = master();

    DreamPhaseConfig dc;
    dc.per_source = cfg.dreams_per_source;
    dc.workers = cfg.workers;
    const DreamPhaseResult dreams = dream_phase(res.lib, scenes, dc, dream_seed);
    for (const auto& s : dreams.skipped) res.notes.push_back("round " + std::to_string(r) + ": dreams timed out for " + s);
    if (persist && cfg.export_dreams) {
      std::filesystem::create_directories(cfg.out / ("round_" + std::to_string(r)));
      write_text(cfg.out / ("round_" + std::to_string(r)) / "dreams.jsonl",
                 format_dream_records(dreams.composites));
    }

    res.programs = wake_all(scenes, res.lib, *proposer, cfg, &res.programs, &caches);
    res.trace.push_back({r, "wake", objective(res.lib, res.programs, scenes)});
    check();

    ProposalConfig pc;
    pc.iterations = std::max<std::size_t>(1, cfg.proposal_iterations);
    pc.workers = cfg.workers;
    auto cands = propose(res.programs, res.lib, pc, propose_seed);
    const std::string proposals = format_candidates(cands);
    const auto proposed = cands;
    res.wake_programs.push_back(res.programs);

    IntegrationConfig ic;
    ic.top_n = cfg.top_n;
    ic.workers = cfg.workers;
    ic.seed = integrate_seed;
    ic.refactor = refactor_config(cfg);
    IntegrationResult ir = integrate(res.lib, res.programs, scenes, std::move(cands), ic);
    if (ir.refactor_errors)
      res.notes.push_back("round " + std::to_string(r) + ": " + std::to_string(ir.refactor_errors) + " refactor failures kept unrefactored");
    for (const auto& a : ir.lib.abstractions()) {
      if (res.lib.contains(a.name)) continue;
      const std::string body = print(a.body);
      for (const auto& c : proposed)
        if (print(c.abstraction.body) == body) {
          res.accepted.push_back({r, a.name, c, res.wake_programs.size() - 1});
          break;
        }
    }
    res.lib = std::move(ir.lib);
    res.programs = std::move(ir.programs);
    res.libraries.push_back(res.lib);
    res.round_programs.push_back(res.programs);
    res.trace.push_back({r, "integration", ir.objective_out});
    check();
    for (std::size_t i = 0; i < n; ++i) caches[i].add_program(res.programs[i], scenes[i], res.lib);
    save(r, format_log(ir.log), proposals);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_svg(const std::vector<Primitive>& prims, const std::vector<int>& groups) {
  static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.1 -1.1 2.2 2.2\" "
        "width=\"440\" height=\"440\">\n<g transform=\"scale(1,-1)\" stroke=\"#222\" "
        "stroke-width=\"0.005\" fill-opacity=\"0.8\">\n";
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Primitive& p = prims[i];
    const int g = i < groups.size() ? groups[i] : 0;
    os << "<rect x=\"" << format_float(p.x - p.w / 2) << "\" y=\"" << format_float(p.y - p.h / 2)
       << "\" width=\"" << format_float(p.w) << "\" height=\"" << format_float(p.h)
       << "\" fill=\"" << palette[static_cast<std::size_t>(g) % 10] << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string render_program(const Expr& p, const Library& lib) {
  std::vector<Primitive> prims;
  std::vector<int> groups;
  const auto parts = split_union(p);
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (const auto& q : execute(parts[i], &lib)) {
      prims.push_back(q);
      groups.push_back(static_cast<int>(i));
    }
  return render_svg(prims, groups);
}

}  // namespace shapeabs
