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

#include "shapeabs/integration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "shapeabs/objective.hpp"
#include "shapeabs/parallel.hpp"

namespace shapeabs {

Expr inline_missing(const Expr& e, const Library& from, const Library& to) {
  if (e.op == Op::Call && !to.contains(e.name)) {
    const Abstraction* a = from.find(e.name);
    if (!a) throw DslError(DslError::Kind::UnknownFunction, "unknown function " + e.name);
    std::vector<Expr> args;
    for (const auto& c : e.children) args.push_back(inline_missing(c, from, to));
    return inline_missing(substitute(a->body, args), from, to);
  }
  Expr out = e;
  for (auto& c : out.children) c = inline_missing(c, from, to);
  return out;
}

std::map<std::string, std::size_t> usage_counts(const std::vector<Expr>& programs,
                                                const Library& lib) {
  std::map<std::string, std::set<std::string>> reach;
  for (const auto& a : lib.abstractions()) {
    std::vector<std::string> calls;
    collect_calls(a.body, calls);
    reach[a.name].insert(calls.begin(), calls.end());
  }
  std::map<std::string, std::size_t> out;
  for (const auto& a : lib.abstractions()) out[a.name] = 0;
  for (const auto& p : programs) {
    std::vector<std::string> calls;
    collect_calls(p, calls);
    std::set<std::string> used;
    std::vector<std::string> stack(calls.begin(), calls.end());
    while (!stack.empty()) {
      std::string n = std::move(stack.back());
      stack.pop_back();
      if (!used.insert(n).second) continue;
      for (const auto& m : reach[n]) stack.push_back(m);
    }
    for (const auto& n : used) ++out[n];
  }
  return out;
}

VariantEval evaluate_variant(const Library& from, const Library& to,
                             const std::vector<Expr>& programs,
                             const std::vector<Scene>& scenes, const IntegrationConfig& cfg,
                             const std::vector<std::size_t>* subset) {
  if (programs.size() != scenes.size())
    throw std::invalid_argument("programs and scenes differ in count");
  std::vector<std::size_t> idx;
  if (subset) {
    idx = *subset;
  } else {
    idx.resize(programs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  VariantEval ev;
  ev.programs = programs;
  std::vector<double> terms(idx.size(), 0.0);
  std::atomic<std::size_t> errors{0};
  parallel_for(idx.size(), cfg.workers, [&](std::size_t k) {
    const std::size_t i = idx[k];
    const Scene& d = scenes[i];
    Expr base = inline_missing(programs[i], from, to);
    double best = scene_term(base, d, to);
    Expr chosen = base;
    try {
      const RefactorResult r = refactor(base, to, cfg.refactor);
      const double t = scene_term(r.program, d, to);
      if (t < best) {
        best = t;
        chosen = r.program;
      }
    } catch (const std::exception&) {
      ++errors;
    }
    ev.programs[i] = std::move(chosen);
    terms[k] = best;
  });
  ev.errors = errors.load();
  double sum = 0.0;
  for (double t : terms) sum += t;
  ev.objective = (idx.empty() ? 0.0 : sum / static_cast<double>(idx.size())) + library_weight(to);
  return ev;
}

namespace {

double subset_objective(const Library& lib, const std::vector<Expr>& programs,
                        const std::vector<Scene>& scenes, const std::vector<std::size_t>& idx) {
  double sum = 0.0;
  for (std::size_t i : idx) sum += scene_term(programs[i], scenes[i], lib);
  return (idx.empty() ? 0.0 : sum / static_cast<double>(idx.size())) + library_weight(lib);
}

bool uses(const Expr& e, const std::string& name) {
  if (e.op == Op::Call && e.name == name) return true;
  for (const auto& c : e.children)
    if (uses(c, name)) return true;
  return false;
}

// Stratified sample: the same fraction of programs inside and outside `hot`.
std::vector<std::size_t> stratified(std::size_t n, const std::set<int>& hot, double frac,
                                    std::mt19937_64& rng) {
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < n; ++i) (hot.count(static_cast<int>(i)) ? in : out).push_back(i);
  std::vector<std::size_t> pick;
  for (auto* group : {&in, &out}) {
    if (group->empty()) continue;
    std::shuffle(group->begin(), group->end(), rng);
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(group->size()))));
    pick.insert(pick.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(pick.begin(), pick.end());
  return pick;
}

}  // namespace

IntegrationResult integrate(const Library& lib, const std::vector<Expr>& programs,
                            const std::vector<Scene>& scenes,
                            std::vector<CandidateAbstraction> candidates,
                            const IntegrationConfig& cfg) {
  IntegrationResult res;
  res.lib = lib;
  res.programs = programs;
  const std::size_t n = programs.size();
  double f = objective(lib, programs, scenes);
  res.objective_in = f;
  std::mt19937_64 rng(cfg.seed);
  const double min_users = lib.config.omega.min_usage * static_cast<double>(n);
  const bool gated = n >= cfg.gate_min_programs;

  // Returns the evaluation if `to` beats the current objective on all of P.
  // `hot` stratifies the gate sample.
  std::vector<std::size_t> evaluated;  // programs the last trial refactored
  auto trial = [&](const Library& to, const std::set<int>& hot, IntegrationEvent& ev,
                   VariantEval* out) -> bool {
    ev.before = f;
    if (gated) {
      const auto sub = stratified(n, hot, cfg.gate_fraction, rng);
      evaluated = sub;
      const double before = subset_objective(res.lib, res.programs, scenes, sub);
      VariantEval s = evaluate_variant(res.lib, to, res.programs, scenes, cfg, &sub);
      res.refactor_errors += s.errors;
      if (!(s.objective < before - 1e-9)) {
        ev.after = s.objective - before + f;  // projected, for the log
        ev.decision = "gated";
        if (out) *out = std::move(s);
        return false;
      }
    }
    VariantEval full = evaluate_variant(res.lib, to, res.programs, scenes, cfg);
    res.refactor_errors += full.errors;
    evaluated.resize(n);
    for (std::size_t i = 0; i < n; ++i) evaluated[i] = i;
    ev.after = full.objective;
    const bool better = full.objective < f - 1e-9;
    ev.decision = better ? "accepted" : "rejected";
    if (out) *out = std::move(full);
    return better;
  };

  auto accept = [&](Library to, VariantEval&& v) {
    res.lib = std::move(to);
    res.programs = std::move(v.programs);
    f = v.objective;
  };

  candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                  [](const auto& c) { return !c.admissible || c.degenerate; }),
                   candidates.end());
  std::size_t trials = 0;
  while (trials < cfg.top_n && !candidates.empty()) {
    auto top = std::max_element(candidates.begin(), candidates.end(),
                                [](const auto& a, const auto& b) { return a.score < b.score; });
    CandidateAbstraction cand = std::move(*top);
    candidates.erase(top);
    IntegrationEvent ev;
    ev.kind = "add";
    ev.subject = print(cand.abstraction.body);
    if (cand.frequency <= 0.0) {
      ev.before = ev.after = f;
      ev.decision = "skipped";
      res.log.push_back(std::move(ev));
      continue;
    }
    ++trials;
    Library with = res.lib;
    Abstraction a = cand.abstraction;
    a.name = with.fresh_name();
    try {
      with.add(a);
    } catch (const DslError&) {
      ev.before = ev.after = f;
      ev.decision = "rejected";
      res.log.push_back(std::move(ev));
      continue;
    }
    ev.subject = a.name + " = " + ev.subject;
    const std::set<int> hot(cand.coverage.begin(), cand.coverage.end());
    VariantEval v;
    bool ok = trial(with, hot, ev, &v);
    if (ok && static_cast<double>(usage_counts(v.programs, with)[a.name]) < min_users) {
      ok = false;
      ev.decision = "rejected";
    }
    if (ok) {
      std::set<int> users;
      for (std::size_t i = 0; i < n; ++i)
        if (uses(v.programs[i], a.name)) users.insert(static_cast<int>(i));
      accept(std::move(with), std::move(v));
      res.log.push_back(std::move(ev));
      for (auto& c : candidates) {
        std::vector<int> keep;
        for (int p : c.coverage)
          if (!users.count(p)) keep.push_back(p);
        c.coverage = std::move(keep);
        c.frequency = static_cast<double>(c.coverage.size()) / static_cast<double>(n);
        c.score = c.frequency * c.gain;
      }
      continue;
    }
    res.log.push_back(ev);

    // Functions that the new abstraction displaced, measured on whatever
    // programs were refactored.
    std::vector<Expr> before_p, after_p;
    for (std::size_t i : evaluated) {
      before_p.push_back(res.programs[i]);
      after_p.push_back(v.programs[i]);
    }
    const auto ub = usage_counts(before_p, res.lib);
    const auto ua = usage_counts(after_p, with);
    std::vector<std::string> dec;
    for (const auto& [name, cnt] : ub) {
      if (cnt == 0) continue;
      const auto it = ua.find(name);
      const double now = it == ua.end() ? 0.0 : static_cast<double>(it->second);
      if (now <= (1.0 - cfg.dec_drop) * static_cast<double>(cnt)) dec.push_back(name);
    }
    if (dec.empty()) continue;
    Library dec_lib = with;
    for (const auto& name : dec) dec_lib.remove(name);
    IntegrationEvent dv;
    dv.kind = "dec";
    dv.subject = ev.subject;
    dv.removed = dec;
    VariantEval w;
    bool dok = trial(dec_lib, hot, dv, &w);
    if (dok && static_cast<double>(usage_counts(w.programs, dec_lib)[a.name]) < min_users) {
      dok = false;
      dv.decision = "rejected";
    }
    if (dok) accept(std::move(dec_lib), std::move(w));
    res.log.push_back(std::move(dv));
  }

  // removal sweep
  std::vector<std::string> names;
  for (const auto& a : res.lib.abstractions()) names.push_back(a.name);
  for (const auto& name : names) {
    if (!res.lib.contains(name)) continue;
    Library without = res.lib;
    without.remove(name);
    std::set<int> hot;
    for (std::size_t i = 0; i < n; ++i)
      if (uses(res.programs[i], name)) hot.insert(static_cast<int>(i));
    IntegrationEvent ev;
    ev.kind = "remove";
    ev.subject = name;
    VariantEval v;
    if (trial(without, hot, ev, &v)) accept(std::move(without), std::move(v));
    res.log.push_back(std::move(ev));
  }

  // rarely used functions are dropped whatever the objective says
  const auto counts = usage_counts(res.programs, res.lib);
  bool dropped = false;
  for (const auto& [name, cnt] : counts) {
    if (static_cast<double>(cnt) >= min_users || !res.lib.contains(name)) continue;
    Library without = res.lib;
    without.remove(name);
    VariantEval v = evaluate_variant(res.lib, without, res.programs, scenes, cfg);
    res.refactor_errors += v.errors;
    IntegrationEvent ev{"usage", name, f, v.objective, "accepted", {}};
    res.log.push_back(ev);
    accept(std::move(without), std::move(v));
    dropped = true;
  }
  if (dropped && f > res.objective_in + 1e-12) {
    // keep the phase monotone: fall back to the input library
    res.lib = lib;
    res.programs = programs;
    f = res.objective_in;
    res.log.push_back({"usage", "revert", f, f, "accepted", {}});
  }
  res.objective_out = f;
  return res;
}

std::string format_log(const std::vector<IntegrationEvent>& log) {
  std::ostringstream os;
  for (const auto& e : log) {
    os << e.kind << '\t' << e.decision << '\t' << format_float(e.before) << '\t'
       << format_float(e.after) << '\t' << e.subject;
    if (!e.removed.empty()) {
      os << "\t-";
      for (const auto& r : e.removed) os << ' ' << r;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace shapeabs
