// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the C API.
//
// Exit codes: 0 success, 1 invalid input (bad flags, malformed JSON, failed
// validation, unsupported request), 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "borep/borep.h"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct CliFailure {
  int code;
  std::string message;
};

int exit_code(borep_status s) {
  switch (s) {
    case BOREP_OK:
      return 0;
    case BOREP_INVALID:
    case BOREP_UNSUPPORTED:
      return kExitInvalid;
    case BOREP_RUNTIME:
      return kExitRuntime;
  }
  return kExitRuntime;
}

void check(borep_status s) {
  if (s != BOREP_OK) throw CliFailure{exit_code(s), borep_last_error()};
}

struct ProblemDeleter {
  void operator()(borep_problem* p) const { borep_problem_free(p); }
};
struct TraceDeleter {
  void operator()(borep_trace* t) const { borep_trace_free(t); }
};
struct StringDeleter {
  void operator()(char* s) const { borep_string_free(s); }
};
using ProblemHandle = std::unique_ptr<borep_problem, ProblemDeleter>;
using TraceHandle = std::unique_ptr<borep_trace, TraceDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON, the theory form, or a path to a file holding either.
std::string load_text(const std::string& arg, const char* what) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return arg;
  if (arg.rfind("theory:", 0) == 0) return arg;
  if (auto text = read_file(arg)) return *text;
  throw CliFailure{kExitInvalid, std::string("cannot read ") + what + " '" + arg + "'"};
}

ProblemHandle load_problem(const std::string& arg) {
  const std::string text = load_text(arg, "problem");
  borep_problem* p = nullptr;
  check(borep_problem_from_json(text.c_str(), &p));
  return ProblemHandle(p);
}

void emit(const char* json, const std::string& out) {
  std::cout << json << '\n';
  if (out.empty()) return;
  std::ofstream f(out, std::ios::binary);
  if (!f) throw CliFailure{kExitRuntime, "cannot write " + out};
  f << json << '\n';
}

// "lo..hi" (inclusive) or a single seed.
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return {v, v};
    } else {
      const std::string a = s.substr(0, dots);
      const std::string b = s.substr(dots + 2);
      std::size_t ua = 0;
      std::size_t ub = 0;
      const auto lo = std::stoull(a, &ua);
      const auto hi = std::stoull(b, &ub);
      if (ua == a.size() && ub == b.size() && lo <= hi) return {lo, hi};
    }
  } catch (const std::exception&) {
  }
  throw CliFailure{kExitInvalid, "bad seed range '" + s + "' (expected lo..hi)"};
}

struct Options {
  std::string problem;
  std::string config;
  std::string algo;
  std::string out;
  std::uint64_t seed = 0;
  std::string seeds = "0..9";
  unsigned threads = 0;
  double eps = 0.1;
  double delta = 0.1;
  std::optional<double> V0;
  std::optional<double> Delta;
  std::optional<std::uint64_t> K;
  int n_points = 20;
  double tol = 1e-5;
  double h = 1e-5;
  double radius = 1.0;
  bool points = false;
  std::string lemma;
  int n_seeds = 100;
  std::uint64_t mc_samples = 10000;
  double y_offset = 0.0;
  double z_offset = 0.0;
};

nlohmann::json theory_fields(const Options& o) {
  nlohmann::json j = {{"eps", o.eps}, {"delta", o.delta}};
  if (o.V0) j["V0"] = *o.V0;
  if (o.Delta) j["Delta"] = *o.Delta;
  if (o.K) j["K"] = *o.K;
  return j;
}

void cmd_run(const Options& o) {
  ProblemHandle p = load_problem(o.problem);
  const std::string cfg = load_text(o.config, "config");
  borep_trace* t = nullptr;
  check(borep_run(p.get(), o.algo.empty() ? nullptr : o.algo.c_str(), cfg.c_str(), o.seed, &t));
  TraceHandle trace(t);
  if (!o.out.empty()) check(borep_trace_write_csv(trace.get(), o.out.c_str()));
  char* s = nullptr;
  check(borep_trace_summary_json(trace.get(), &s));
  OwnedString summary(s);
  std::cout << summary.get() << '\n';
}

void cmd_sweep(const Options& o) {
  if (o.out.empty()) throw CliFailure{kExitInvalid, "sweep needs --out <directory>"};
  ProblemHandle p = load_problem(o.problem);
  const std::string cfg = load_text(o.config, "config");
  const auto [lo, hi] = parse_seed_range(o.seeds);
  char* s = nullptr;
  check(borep_sweep(p.get(), o.algo.empty() ? nullptr : o.algo.c_str(), cfg.c_str(), lo, hi,
                    o.out.c_str(), o.threads, &s));
  OwnedString summary(s);
  std::cout << summary.get() << '\n';
}

using JsonCall = borep_status (*)(const borep_problem*, const char*, char**);

void cmd_json(const Options& o, JsonCall call, const nlohmann::json& request) {
  ProblemHandle p = load_problem(o.problem);
  char* s = nullptr;
  check(call(p.get(), request.dump().c_str(), &s));
  OwnedString report(s);
  emit(report.get(), o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"borep: stochastic bilevel optimization runs and diagnostics"};
  app.require_subcommand(1);
  Options o;

  auto add_problem = [&o](CLI::App* c) {
    c->add_option("--problem", o.problem, "Problem JSON (file or inline)")->required();
  };
  auto add_theory = [&o](CLI::App* c) {
    c->add_option("--eps", o.eps, "Target stationarity")->required();
    c->add_option("--delta", o.delta, "Failure probability")->required();
    c->add_option("--V0", o.V0, "Initial lower-level gap bound");
    c->add_option("--Delta", o.Delta, "Initial suboptimality Phi(x0) - inf Phi");
    c->add_option("--K", o.K, "Cap on the iterations actually run");
  };

  CLI::App* run = app.add_subcommand("run", "Run one solver and write its trace");
  add_problem(run);
  run->add_option("--config", o.config, "Config JSON (file or inline) or theory:eps=..,delta=..")
      ->required();
  run->add_option("--algo", o.algo, "borep | soba | ma-soba (overrides the config)");
  run->add_option("--seed", o.seed, "Random seed");
  run->add_option("--out", o.out, "Trace CSV path (header goes to <out>.json)");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a range of seeds");
  add_problem(sweep);
  sweep->add_option("--config", o.config, "Config JSON or theory form")->required();
  sweep->add_option("--algo", o.algo, "borep | soba | ma-soba");
  sweep->add_option("--seeds", o.seeds, "Seed range lo..hi (inclusive)");
  sweep->add_option("--threads", o.threads, "Worker count (default BOREP_THREADS or all cores)");
  sweep->add_option("--out", o.out, "Output directory")->required();

  CLI::App* schedule = app.add_subcommand("schedule", "Print the theory parameter schedule");
  add_problem(schedule);
  add_theory(schedule);
  schedule->add_option("--out", o.out, "Also write the JSON here");

  CLI::App* grad = app.add_subcommand("check-grad", "Compare hypergradients with finite differences");
  add_problem(grad);
  grad->add_option("--n-points", o.n_points, "Random points");
  grad->add_option("--tol", o.tol, "Max relative error allowed");
  grad->add_option("--step", o.h, "Finite-difference step h");
  grad->add_option("--radius", o.radius, "Half-width of the sampling cube");
  grad->add_option("--seed", o.seed, "Random seed");
  grad->add_option("--out", o.out, "Also write the JSON here");

  CLI::App* smooth = app.add_subcommand("smoothness", "Fit local smoothness along a trajectory");
  add_problem(smooth);
  smooth->add_option("--config", o.config, "Config JSON or theory form")->required();
  smooth->add_option("--algo", o.algo, "borep | soba | ma-soba");
  smooth->add_option("--seed", o.seed, "Random seed");
  smooth->add_flag("--points", o.points, "Include the scatter points");
  smooth->add_option("--out", o.out, "Also write the JSON here");

  CLI::App* lemma = app.add_subcommand("verify-lemma", "Seed ensemble for a lower-level guarantee");
  add_problem(lemma);
  add_theory(lemma);
  lemma->add_option("--lemma", o.lemma, "init_refinement | periodic_tracking | bias_at_optimum")
      ->required();
  lemma->add_option("--n-seeds", o.n_seeds, "Ensemble size");
  lemma->add_option("--seed", o.seed, "Base seed");
  lemma->add_option("--threads", o.threads, "Worker count");
  lemma->add_option("--mc-samples", o.mc_samples, "Estimator samples per bias trial");
  lemma->add_option("--y-offset", o.y_offset, "Offset added to y* in bias trials");
  lemma->add_option("--z-offset", o.z_offset, "Offset added to z* in bias trials");
  lemma->add_option("--out", o.out, "Also write the JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitInvalid;
  }

  try {
    if (*run) {
      cmd_run(o);
    } else if (*sweep) {
      cmd_sweep(o);
    } else if (*schedule) {
      cmd_json(o, borep_schedule_json, theory_fields(o));
    } else if (*grad) {
      cmd_json(o, borep_check_grad_json,
               {{"n_points", o.n_points},
                {"tol", o.tol},
                {"h", o.h},
                {"seed", o.seed},
                {"radius", o.radius}});
    } else if (*smooth) {
      nlohmann::json req = {{"config", load_text(o.config, "config")},
                            {"seed", o.seed},
                            {"points", o.points}};
      if (!o.algo.empty()) req["algo"] = o.algo;
      cmd_json(o, borep_smoothness_json, req);
    } else if (*lemma) {
      nlohmann::json req = theory_fields(o);
      req["lemma"] = o.lemma;
      req["n_seeds"] = o.n_seeds;
      req["seed"] = o.seed;
      req["threads"] = o.threads;
      req["mc_samples"] = o.mc_samples;
      req["y_offset"] = o.y_offset;
      req["z_offset"] = o.z_offset;
      cmd_json(o, borep_verify_lemma_json, req);
    }
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
