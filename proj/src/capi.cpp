// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/borep.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "borep/config.hpp"
#include "borep/diagnostics.hpp"
#include "borep/experiment.hpp"
#include "borep/problems.hpp"

struct borep_problem {
  borep::ProblemPtr problem;
  nlohmann::json desc;
};

struct borep_trace {
  borep::RunTrace trace;
};

namespace {

thread_local std::string g_last_error;

borep_status set_error(borep_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

borep_status status_of(borep::ErrorCode c) {
  switch (c) {
    case borep::ErrorCode::kInvalidArgument:
    case borep::ErrorCode::kDimensionMismatch:
      return BOREP_INVALID;
    case borep::ErrorCode::kUnsupported:
      return BOREP_UNSUPPORTED;
    case borep::ErrorCode::kNonFinite:
    case borep::ErrorCode::kRuntime:
      return BOREP_RUNTIME;
  }
  return BOREP_RUNTIME;
}

// Runs fn, translating exceptions into status codes and the error message.
template <typename Fn>
borep_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return BOREP_OK;
  } catch (const borep::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(BOREP_INVALID, std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BOREP_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BOREP_RUNTIME, e.what());
  } catch (...) {
    return set_error(BOREP_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_arg(const void* ptr, const char* name) {
  if (!ptr) borep::fail(borep::ErrorCode::kInvalidArgument, std::string(name) + " is null");
}

nlohmann::json parse_request(const char* request) {
  if (!request || !*request) return nlohmann::json::object();
  nlohmann::json j = nlohmann::json::parse(request);
  borep::require(j.is_object(), "request must be a JSON object");
  return j;
}

std::string config_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

borep::TheoryRequest theory_request(const nlohmann::json& j) {
  return borep::theory_from_json(j);
}

// Starting points for diagnostics: request, then problem description, then defaults.
borep::Vector start(const borep_problem* p, const nlohmann::json& req, const char* key,
                    const borep::Vector& fallback) {
  if (req.contains(key)) return borep::vector_from_json(req.at(key));
  if (p->desc.contains(key)) return borep::vector_from_json(p->desc.at(key));
  return fallback;
}

}  // namespace

extern "C" {

const char* borep_version(void) { return "1.0.0"; }

const char* borep_last_error(void) { return g_last_error.c_str(); }

void borep_string_free(char* s) { std::free(s); }

borep_status borep_problem_from_json(const char* json, borep_problem** out) {
  return guarded([&] {
    require_arg(json, "json");
    require_arg(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<borep_problem>();
    handle->desc = nlohmann::json::parse(json);
    handle->problem = borep::problem_from_json(handle->desc);
    *out = handle.release();
  });
}

void borep_problem_free(borep_problem* p) { delete p; }

borep_status borep_problem_info_json(const borep_problem* p, char** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(out, "out");
    nlohmann::json j = p->problem->describe();
    j["schema"] = 1;
    if (auto inf = p->problem->phi_infimum()) j["phi_infimum"] = *inf;
    *out = dup_string(j.dump(2));
  });
}

borep_status borep_run(const borep_problem* p, const char* algo, const char* config,
                       uint64_t seed, borep_trace** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(config, "config");
    require_arg(out, "out");
    *out = nullptr;
    const borep::RunSpec spec =
        borep::parse_run_spec(*p->problem, p->desc, config, algo ? algo : "");
    auto handle = std::make_unique<borep_trace>();
    handle->trace = borep::execute(*p->problem, spec, seed);
    if (spec.theory) handle->trace.header["schedule"] = borep::to_json(*spec.theory);
    *out = handle.release();
  });
}

void borep_trace_free(borep_trace* t) { delete t; }

size_t borep_trace_size(const borep_trace* t) { return t ? t->trace.records.size() : 0; }

borep_status borep_trace_write_csv(const borep_trace* t, const char* path) {
  return guarded([&] {
    require_arg(t, "trace");
    require_arg(path, "path");
    borep::write_trace(t->trace, path);
  });
}

borep_status borep_trace_csv(const borep_trace* t, char** out) {
  return guarded([&] {
    require_arg(t, "trace");
    require_arg(out, "out");
    *out = dup_string(borep::trace_to_csv(t->trace.records));
  });
}

borep_status borep_trace_summary_json(const borep_trace* t, char** out) {
  return guarded([&] {
    require_arg(t, "trace");
    require_arg(out, "out");
    nlohmann::json j = borep::trace_summary(t->trace);
    j["algo"] = t->trace.header.value("algo", "");
    j["seed"] = t->trace.header.value("seed", std::uint64_t{0});
    *out = dup_string(j.dump(2));
  });
}

borep_status borep_schedule_json(const borep_problem* p, const char* request, char** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(out, "out");
    const nlohmann::json req = parse_request(request);
    const borep::Problem& prob = *p->problem;
    const borep::Dims d = prob.dims();
    const borep::ScheduleReport r = borep::build_theory_schedule(
        prob, theory_request(req), start(p, req, "x0", prob.default_x0()),
        start(p, req, "y0", prob.default_y0()), start(p, req, "z0", borep::Vector::Zero(d.y)));
    *out = dup_string(borep::to_json(r).dump(2));
  });
}

borep_status borep_check_grad_json(const borep_problem* p, const char* request, char** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(out, "out");
    const nlohmann::json req = parse_request(request);
    const borep::HypergradCheck c = borep::check_hypergrad(
        *p->problem, req.value("n_points", 20), req.value("tol", 1e-5), req.value("h", 1e-5),
        req.value("seed", std::uint64_t{0}), req.value("radius", 1.0),
        start(p, req, "x0", borep::Vector()));
    *out = dup_string(borep::to_json(c).dump(2));
  });
}

borep_status borep_smoothness_json(const borep_problem* p, const char* request, char** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(out, "out");
    const nlohmann::json req = parse_request(request);
    const borep::Problem& prob = *p->problem;
    if (!prob.has_analytic()) {
      borep::fail(borep::ErrorCode::kUnsupported,
                  prob.kind() + " problem has no closed-form hypergradient to probe");
    }
    borep::require(req.contains("config"), "smoothness request needs a run config");
    const borep::RunSpec spec = borep::parse_run_spec(prob, p->desc, config_text(req.at("config")),
                                                      req.value("algo", std::string()));
    borep::RunOptions opts;
    opts.keep_path = true;
    const borep::RunTrace tr = borep::execute(prob, spec, req.value("seed", std::uint64_t{0}), opts);
    const borep::SmoothnessScatter s = borep::estimate_smoothness(
        [&prob](const borep::Vector& x) { return prob.phi_grad(x); }, tr.x_path);
    nlohmann::json j = {{"schema", 1},
                        {"algo", borep::algo_name(spec.algo)},
                        {"n_points", s.points.size()},
                        {"fit", borep::to_json(borep::fit_line(s))}};
    if (req.value("points", false)) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& pt : s.points) pts.push_back({pt.grad_norm, pt.local_L});
      j["points"] = pts;
    }
    *out = dup_string(j.dump(2));
  });
}

borep_status borep_verify_lemma_json(const borep_problem* p, const char* request, char** out) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(out, "out");
    const nlohmann::json req = parse_request(request);
    const borep::Problem& prob = *p->problem;
    const borep::Dims d = prob.dims();
    borep::LemmaContext ctx;
    ctx.x0 = start(p, req, "x0", prob.default_x0());
    ctx.y_init = start(p, req, "y0", prob.default_y0());
    ctx.z0 = start(p, req, "z0", borep::Vector::Zero(d.y));
    const borep::TheoryRequest tr = theory_request(req);
    const borep::ScheduleReport sched =
        borep::build_theory_schedule(prob, tr, ctx.x0, ctx.y_init, ctx.z0);
    ctx.eps = tr.eps;
    ctx.delta = tr.delta;
    ctx.K0 = sched.input.derived.K0;
    ctx.base_seed = req.value("seed", std::uint64_t{0});
    ctx.threads = req.value("threads", 0u);
    ctx.mc_samples = req.value("mc_samples", ctx.mc_samples);
    ctx.y_offset = req.value("y_offset", 0.0);
    ctx.z_offset = req.value("z_offset", 0.0);
    const int n_seeds = req.value("n_seeds", 100);
    const borep::LemmaReport r = borep::verify_lemma_ensemble(
        borep::lemma_from_string(req.at("lemma").get<std::string>()), prob, sched.config, n_seeds,
        ctx);
    nlohmann::json j = borep::to_json(r);
    j["schedule"] = borep::to_json(sched);
    *out = dup_string(j.dump(2));
  });
}

borep_status borep_sweep(const borep_problem* p, const char* algo, const char* config,
                         uint64_t seed_lo, uint64_t seed_hi, const char* out_dir,
                         unsigned threads, char** summary) {
  return guarded([&] {
    require_arg(p, "problem");
    require_arg(config, "config");
    require_arg(out_dir, "out_dir");
    const borep::RunSpec spec =
        borep::parse_run_spec(*p->problem, p->desc, config, algo ? algo : "");
    const nlohmann::json s =
        borep::run_sweep(*p->problem, spec, seed_lo, seed_hi, out_dir, threads);
    if (summary) *summary = dup_string(s.dump(2));
  });
}

}  // extern "C"
