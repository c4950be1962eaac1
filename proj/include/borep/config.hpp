// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configurations from JSON or the compact theory form
// "theory:eps=..,delta=..[,V0=..,Delta=..,K=..]".

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "borep/baselines.hpp"
#include "borep/solver.hpp"

namespace borep {

enum class Algo { kBorep, kSoba, kMaSoba };

Algo algo_from_string(const std::string& name);
const char* algo_name(Algo a);

struct TheoryRequest {
  double eps = 0.1;
  double delta = 0.1;
  std::optional<double> V0;
  std::optional<double> Delta;
  std::uint64_t K_cap = 0;
};

/// Parses "theory:eps=0.1,delta=0.1,..." (the prefix is optional).
TheoryRequest parse_theory_string(const std::string& s);
TheoryRequest theory_from_json(const nlohmann::json& j);

struct ScheduleReport {
  ScheduleInput input;
  ScheduleDetail detail;
  BorepConfig config;
  // Which inputs were estimated rather than computed in closed form.
  bool grad_phi_estimated = false;
  bool Delta_z0_bounded = false;
  bool V0_estimated = false;
};

/// Fills the schedule inputs from the problem at (x0, y_init, z0) and runs
/// theory_schedule. Closed forms are used when the problem has them; the
/// hypergradient norm otherwise comes from a Monte Carlo mean of the
/// estimator, Delta_z0 from the bound (|z0| + M / mu)^2, and V0 from
/// estimate_v0. Delta must be supplied when Phi has no known infimum.
ScheduleReport build_theory_schedule(const Problem& p, const TheoryRequest& req, const Vector& x0,
                                     const Vector& y_init, const Vector& z0);

nlohmann::json to_json(const ScheduleReport& r);

struct RunSpec {
  Algo algo = Algo::kBorep;
  BorepConfig borep;
  SobaConfig soba;
  std::optional<ScheduleReport> theory;
  Vector x0;
  Vector y0;
  Vector z0;
};

/// `config` is a JSON object, a JSON string holding the theory form, or
/// the theory form itself. Starting points come from the config ("x0",
/// "y0", "z0"), then `problem_desc`, then the problem defaults. A non-empty
/// `algo_override` replaces the config's "algo".
RunSpec parse_run_spec(const Problem& p, const nlohmann::json& problem_desc,
                       const std::string& config, const std::string& algo_override = "");

RunTrace execute(const Problem& p, const RunSpec& spec, std::uint64_t seed,
                 const RunOptions& opts = {});

}  // namespace borep
