// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/config.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "borep/problems.hpp"

namespace borep {

Algo algo_from_string(const std::string& name) {
  if (name == "borep") return Algo::kBorep;
  if (name == "soba") return Algo::kSoba;
  if (name == "ma-soba") return Algo::kMaSoba;
  fail(ErrorCode::kInvalidArgument, "unknown algorithm '" + name + "' (borep, soba, ma-soba)");
}

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::kBorep:
      return "borep";
    case Algo::kSoba:
      return "soba";
    case Algo::kMaSoba:
      return "ma-soba";
  }
  return "unknown";
}

namespace {

constexpr const char* kTheoryPrefix = "theory:";

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    fail(ErrorCode::kInvalidArgument, "theory parameter " + key + " is not a number: " + value);
  }
  return v;
}

std::uint64_t as_count(const std::string& key, double v) {
  require(v >= 0.0 && v == std::floor(v) && v < 1.8e19, key + " must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

EpochSgdSchedule init_from_json(const nlohmann::json& j) {
  EpochSgdSchedule s;
  if (j.contains("epochs")) {
    for (const auto& e : j.at("epochs")) {
      EpochParams p;
      p.T = e.at("T").get<std::uint64_t>();
      p.alpha = e.at("alpha").get<double>();
      p.radius = e.value("radius", std::numeric_limits<double>::infinity());
      s.epochs.push_back(p);
    }
  } else if (j.contains("steps")) {
    EpochParams p;
    p.T = j.at("steps").get<std::uint64_t>();
    p.alpha = j.at("alpha").get<double>();
    p.radius = j.value("radius", std::numeric_limits<double>::infinity());
    if (p.T > 0) s.epochs.push_back(p);
  }
  s.k_dagger = static_cast<int>(s.epochs.size());
  if (j.contains("V0")) s.V0 = j.at("V0").get<double>();
  s.validate();
  return s;
}

BorepConfig borep_from_json(const nlohmann::json& j) {
  BorepConfig c;
  c.mode = ScheduleMode::kPractical;
  c.K = j.at("K").get<std::uint64_t>();
  c.eta = j.value("eta", c.eta);
  c.beta = j.value("beta", c.beta);
  c.nu = j.value("nu", c.nu);
  // Missing lower-level keys default to I = 2, N = 3, gamma = 0.1, R = 0.5.
  const nlohmann::json lo = j.value("lower", nlohmann::json::object());
  c.lower.I = lo.value("I", std::uint64_t{2});
  c.lower.N = lo.value("N", std::uint64_t{3});
  c.lower.gamma = lo.value("gamma", 0.1);
  c.lower.R = lo.value("R", 0.5);
  if (j.contains("init")) c.epoch = init_from_json(j.at("init"));
  c.thin = j.value("thin", std::uint64_t{1});
  c.timing = j.value("timing", false);
  c.validate();
  return c;
}

SobaConfig soba_from_json(const nlohmann::json& j) {
  SobaConfig c;
  c.K = j.at("K").get<std::uint64_t>();
  c.eta_x = j.value("eta_x", c.eta_x);
  c.eta_y = j.value("eta_y", c.eta_y);
  c.eta_z = j.value("eta_z", c.eta_z);
  c.beta = j.value("beta", 0.9);  // MA-SOBA only; SOBA forces 0
  c.thin = j.value("thin", std::uint64_t{1});
  c.timing = j.value("timing", false);
  c.validate();
  return c;
}

Vector pick_start(const nlohmann::json& cfg, const nlohmann::json& desc, const char* key,
                  Vector fallback, Index dim) {
  Vector v = std::move(fallback);
  if (desc.is_object() && desc.contains(key)) v = vector_from_json(desc.at(key));
  if (cfg.is_object() && cfg.contains(key)) v = vector_from_json(cfg.at(key));
  require_dim(v, dim, key);
  return v;
}

}  // namespace

TheoryRequest parse_theory_string(const std::string& s) {
  std::string body = s;
  if (body.rfind(kTheoryPrefix, 0) == 0) body = body.substr(std::string(kTheoryPrefix).size());
  TheoryRequest r;
  bool have_eps = false;
  bool have_delta = false;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kInvalidArgument, "expected key=value: " + item);
    const std::string key = item.substr(0, eq);
    const double v = parse_number(key, item.substr(eq + 1));
    if (key == "eps") {
      r.eps = v;
      have_eps = true;
    } else if (key == "delta") {
      r.delta = v;
      have_delta = true;
    } else if (key == "V0") {
      r.V0 = v;
    } else if (key == "Delta") {
      r.Delta = v;
    } else if (key == "K") {
      r.K_cap = as_count("K", v);
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown theory parameter '" + key + "'");
    }
  }
  require(have_eps && have_delta, "theory configuration needs eps and delta");
  require(r.eps > 0.0, "eps must be positive");
  require(r.delta > 0.0 && r.delta < 1.0, "delta must lie in (0, 1)");
  return r;
}

TheoryRequest theory_from_json(const nlohmann::json& j) {
  TheoryRequest r;
  r.eps = j.at("eps").get<double>();
  r.delta = j.at("delta").get<double>();
  if (j.contains("V0")) r.V0 = j.at("V0").get<double>();
  if (j.contains("Delta")) r.Delta = j.at("Delta").get<double>();
  r.K_cap = j.value("K", std::uint64_t{0});
  require(r.eps > 0.0, "eps must be positive");
  require(r.delta > 0.0 && r.delta < 1.0, "delta must lie in (0, 1)");
  return r;
}

ScheduleReport build_theory_schedule(const Problem& p, const TheoryRequest& req, const Vector& x0,
                                     const Vector& y_init, const Vector& z0) {
  check_point(p, x0, y_init);
  require_dim(z0, p.dims().y, "z0");
  ScheduleReport r;
  ScheduleInput& in = r.input;
  in.eps = req.eps;
  in.delta = req.delta;
  in.K_cap = req.K_cap;
  in.constants = p.constants();
  in.constants.validate();
  in.derived = derive_constants(in.constants);
  const double mu = in.constants.mu;

  if (req.Delta) {
    in.Delta = *req.Delta;
  } else if (p.has_analytic() && p.phi_infimum()) {
    in.Delta = p.phi_value(x0) - *p.phi_infimum();
    require(in.Delta > 0.0, "Phi(x0) is already at its infimum; pass Delta explicitly");
  } else {
    fail(ErrorCode::kInvalidArgument, p.kind() + " problem has no known infimum; pass Delta");
  }

  if (p.has_analytic()) {
    in.grad_phi_x0_norm = p.phi_grad(x0).norm();
    in.Delta_z0 = (z0 - p.z_star(x0)).squaredNorm();
  } else {
    constexpr std::uint64_t kSamples = 1000;
    Vector mean = Vector::Zero(p.dims().x);
    for (std::uint64_t i = 0; i < kSamples; ++i) {
      mean += hypergrad_estimate(p, x0, y_init, z0, RngToken{0, Stream::kAux, 2 * i},
                                 RngToken{0, Stream::kAux, 2 * i + 1});
    }
    in.grad_phi_x0_norm = (mean / static_cast<double>(kSamples)).norm();
    r.grad_phi_estimated = true;
    const double zb = z0.norm() + in.constants.M / mu;
    in.Delta_z0 = zb * zb;
    r.Delta_z0_bounded = true;
  }

  if (req.V0) {
    in.V0 = *req.V0;
  } else if (p.has_analytic()) {
    in.V0 = std::max(p.g_value(x0, y_init) - p.g_value(x0, p.y_star(x0)), 1e-12);
  } else {
    in.V0 = estimate_v0(p, x0, y_init);
    r.V0_estimated = true;
  }

  r.config = theory_schedule(in, &r.detail);
  return r;
}

nlohmann::json to_json(const ScheduleReport& r) {
  const BorepConfig& c = r.config;
  const std::uint64_t periodic = (c.K / c.lower.I) * c.lower.N;
  nlohmann::json j = {
      {"schema", 1},
      {"mode", "theory"},
      {"I", c.lower.I},
      {"N", c.lower.N},
      {"gamma", c.lower.gamma},
      {"R", c.lower.R},
      {"lambda", r.detail.lambda_lower},
      {"eta", c.eta},
      {"eta_terms", {r.detail.eta_terms[0], r.detail.eta_terms[1], r.detail.eta_terms[2]}},
      {"beta", c.beta},
      {"one_minus_beta", r.detail.one_minus_beta},
      {"nu", c.nu},
      {"K", c.K},
      {"K_theory", r.detail.K_theory},
      {"epoch", to_json(c.epoch)},
      {"lower_oracle_calls", c.epoch.total_steps() + periodic},
      {"inputs",
       {{"eps", r.input.eps},
        {"delta", r.input.delta},
        {"Delta", r.input.Delta},
        {"Delta_z0", r.input.Delta_z0},
        {"grad_phi_x0_norm", r.input.grad_phi_x0_norm},
        {"V0", r.input.V0},
        {"grad_phi_estimated", r.grad_phi_estimated},
        {"Delta_z0_bounded", r.Delta_z0_bounded},
        {"V0_estimated", r.V0_estimated}}},
      {"constants", r.input.constants},
      {"derived", r.input.derived},
      {"warnings", r.detail.warnings}};
  return j;
}

RunSpec parse_run_spec(const Problem& p, const nlohmann::json& problem_desc,
                       const std::string& config, const std::string& algo_override) {
  RunSpec spec;
  nlohmann::json cfg;
  std::optional<TheoryRequest> theory;
  const auto first = config.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (config[first] == '{' || config[first] == '"')) {
    cfg = nlohmann::json::parse(config);
    if (cfg.is_string()) {
      theory = parse_theory_string(cfg.get<std::string>());
      cfg = nlohmann::json::object();
    } else if (cfg.contains("theory")) {
      theory = theory_from_json(cfg.at("theory"));
    }
  } else {
    theory = parse_theory_string(config);
    cfg = nlohmann::json::object();
  }
  require(cfg.is_object(), "run configuration must be a JSON object");

  std::string algo = cfg.value("algo", std::string("borep"));
  if (!algo_override.empty()) algo = algo_override;
  spec.algo = algo_from_string(algo);

  const Dims d = p.dims();
  spec.x0 = pick_start(cfg, problem_desc, "x0", p.default_x0(), d.x);
  spec.y0 = pick_start(cfg, problem_desc, "y0", p.default_y0(), d.y);
  spec.z0 = pick_start(cfg, problem_desc, "z0", Vector::Zero(d.y), d.y);

  if (theory) {
    require(spec.algo == Algo::kBorep, "theory schedules apply to borep only");
    spec.theory = build_theory_schedule(p, *theory, spec.x0, spec.y0, spec.z0);
    spec.borep = spec.theory->config;
    spec.borep.thin = cfg.value("thin", std::uint64_t{1});
    spec.borep.timing = cfg.value("timing", false);
  } else if (spec.algo == Algo::kBorep) {
    spec.borep = borep_from_json(cfg);
  } else {
    spec.soba = soba_from_json(cfg);
    if (spec.algo == Algo::kSoba) spec.soba.beta = 0.0;
  }
  return spec;
}

RunTrace execute(const Problem& p, const RunSpec& spec, std::uint64_t seed,
                 const RunOptions& opts) {
  switch (spec.algo) {
    case Algo::kBorep:
      return run_borep(p, spec.borep, spec.x0, spec.y0, spec.z0, seed, opts);
    case Algo::kSoba:
      return run_soba(p, spec.soba, spec.x0, spec.y0, spec.z0, seed, opts);
    case Algo::kMaSoba:
      return run_ma_soba(p, spec.soba, spec.x0, spec.y0, spec.z0, seed, opts);
  }
  fail(ErrorCode::kRuntime, "unreachable algorithm");
}

}  // namespace borep
