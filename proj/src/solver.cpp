// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recorder.hpp"

namespace borep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t to_count(double v, const char* what) {
  if (!(v < 1.8e19)) fail(ErrorCode::kInvalidArgument, std::string(what) + " overflows 64 bits");
  return static_cast<std::uint64_t>(v);
}

const char* mode_name(ScheduleMode m) { return m == ScheduleMode::kTheory ? "theory" : "practical"; }

}  // namespace

void BorepConfig::validate() const {
  require(eta >= 0.0 && std::isfinite(eta), "eta must be >= 0 (zero freezes x)");
  require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
  require(nu > 0.0 && std::isfinite(nu), "nu must be positive");
  lower.validate();
  if (!epoch.epochs.empty()) epoch.validate();
}

void ScheduleInput::validate() const {
  require(eps > 0.0, "eps must be positive");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(Delta > 0.0, "Delta must be positive");
  require(Delta_z0 >= 0.0 && grad_phi_x0_norm >= 0.0, "Delta_z0 and |grad Phi(x0)| must be >= 0");
  require(V0 > 0.0, "V0 must be positive");
  constants.validate();
  require(derived.K0 > 0.0, "K0 must be positive");
}

double theory_iterations(double Delta, double eta, double eps) {
  require(Delta > 0.0 && eta > 0.0 && eps > 0.0, "Delta, eta and eps must be positive");
  return std::ceil(4.0 * Delta / (eta * eps));
}

BorepConfig theory_schedule(const ScheduleInput& in, ScheduleDetail* detail) {
  in.validate();
  ScheduleDetail d;
  const ProblemConstants& c = in.constants;
  const double mu = c.mu;
  const double C = c.C_gxy;
  const double eps = in.eps;
  const double K0 = in.derived.K0;
  const double K1 = in.derived.K1;
  const double sg1 = c.sigma_g1;
  const double sg2 = c.sigma_g2;

  const double noise = c.sigma_f1 * c.sigma_f1 + 2.0 * c.M * c.M * sg2 * sg2 / (mu * mu);
  const double couple = C > 0.0 ? std::min(1.0, mu * mu / (32.0 * C * C)) : 1.0;

  const double eps_cap = std::min(K1 > 0.0 ? K0 / K1 : kInf, std::sqrt(noise / couple));
  if (eps > eps_cap) {
    d.warnings.push_back("eps exceeds the admissible range (" + std::to_string(eps_cap) +
                         "); the schedule carries no guarantee");
  }

  double omb = 0.25;
  if (noise > 0.0) omb = std::min(omb, eps * eps / noise * couple);
  if (sg2 > 0.0) {
    if (C > 0.0) omb = std::min(omb, C * C / (8.0 * sg2 * sg2));
    omb = std::min(omb, mu * mu / (16.0 * sg2 * sg2));
  }
  d.one_minus_beta = omb;

  BorepConfig cfg;
  cfg.mode = ScheduleMode::kTheory;
  cfg.beta = 1.0 - omb;
  cfg.nu = omb / mu;
  cfg.lower.I = std::max<std::uint64_t>(
      1, to_count(std::ceil(sg1 * sg1 * K0 * K0 / (mu * mu * eps * eps)), "I"));
  const double I = static_cast<double>(cfg.lower.I);

  double inner = std::min(K1 > 0.0 ? 1.0 / K1 : kInf, eps / K0);
  if (in.grad_phi_x0_norm > 0.0) inner = std::min(inner, in.Delta / in.grad_phi_x0_norm);
  if (C > 0.0 && in.Delta_z0 > 0.0) inner = std::min(inner, eps * in.Delta / (C * C * in.Delta_z0));
  d.eta_terms[0] = inner * omb / 8.0;
  const double l1 = c.L_x1 * c.L_x1 + c.L_y1 * c.L_y1;
  const double scale2 = 1.0 + C * C / (mu * mu);
  d.eta_terms[1] = l1 > 0.0 ? 1.0 / std::sqrt(2.0 * scale2 * l1) : kInf;
  d.eta_terms[2] = C > 0.0 ? mu * eps / (8.0 * K0 * I * C) : kInf;
  cfg.eta = std::min({d.eta_terms[0], d.eta_terms[1], d.eta_terms[2]});

  d.K_theory = theory_iterations(in.Delta, cfg.eta, eps);
  const std::uint64_t K_theory = to_count(d.K_theory, "K");
  cfg.K = in.K_cap > 0 ? std::min(K_theory, in.K_cap) : K_theory;

  const double lambda = high_prob_lambda(d.K_theory / I, in.delta);
  d.lambda_lower = lambda;
  const double lam_term = lambda + std::sqrt(lambda + 1.0);
  const double gamma_cap = 1.0 / (2.0 * c.L);
  if (sg1 > 0.0) {
    cfg.lower.gamma = mu * eps * eps /
                      (512.0 * K0 * K0 * sg1 * sg1 * std::sqrt(lambda + 1.0) * lam_term);
    if (cfg.lower.gamma > gamma_cap) {
      d.warnings.push_back("lower step gamma capped at 1/(2L)");
      cfg.lower.gamma = gamma_cap;
    }
  } else {
    cfg.lower.gamma = gamma_cap;
  }
  cfg.lower.N = std::max<std::uint64_t>(
      1, to_count(std::ceil(4096.0 * sg1 * sg1 * K0 * K0 * lam_term * lam_term / (mu * mu * eps * eps)),
                  "N"));
  cfg.lower.R = eps / (4.0 * K0);

  cfg.epoch = epoch_schedule(in.V0, K0, eps, in.delta, c);
  if (detail) *detail = std::move(d);
  return cfg;
}

Vector hypergrad_estimate(const Problem& p, const Vector& x, const Vector& y, const Vector& z,
                          const RngToken& t_f, const RngToken& t_g) {
  check_point(p, x, y);
  require_dim(z, p.dims().y, "z");
  Vector g(p.dims().x);
  Vector jv(p.dims().x);
  p.grad_x_f(x, y, t_f, g);
  p.jvp_xy_g(x, y, z, t_g, jv);
  g -= jv;
  return g;
}

Vector update_z(const Problem& p, const Vector& x, const Vector& y, const Vector& z, double nu,
                const RngToken& t_f, const RngToken& t_g) {
  check_point(p, x, y);
  require_dim(z, p.dims().y, "z");
  require(nu > 0.0, "nu must be positive");
  Vector hv(p.dims().y);
  Vector gy(p.dims().y);
  p.hvp_yy_g(x, y, z, t_g, hv);
  p.grad_y_f(x, y, t_f, gy);
  return z - nu * (hv - gy);
}

Vector update_momentum(const Vector& m, const Vector& ghat, double beta) {
  require(m.size() == ghat.size(), "momentum and estimate dimensions differ");
  require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
  return beta * m + (1.0 - beta) * ghat;
}

StepResult normalized_step(const Vector& x, const Vector& m, double eta) {
  require(x.size() == m.size(), "x and m dimensions differ");
  require(eta >= 0.0, "eta must be >= 0");
  const double n = m.norm();
  if (!(n > kDegenerateMomentum)) return {x, true};
  return {x - (eta / n) * m, false};
}

TraceRecord make_record(const Problem& p, std::uint64_t k, const Vector& x, const Vector& y,
                        const Vector& z, const OracleCounts& counts) {
  TraceRecord r;
  r.k = k;
  r.f_est = p.f_value(x, y);
  r.oracle_f = counts.f_total();
  r.oracle_g = counts.g_total();
  if (p.has_analytic()) {
    r.grad_phi_exact = p.phi_grad(x).norm();
    r.y_err = (y - p.y_star(x)).norm();
    r.z_err = (z - p.z_star(x)).norm();
  }
  return r;
}

RunTrace run_borep(const Problem& p, const BorepConfig& cfg, const Vector& x0,
                   const Vector& y_init, const Vector& z0, std::uint64_t seed,
                   const RunOptions& opts) {
  cfg.validate();
  check_point(p, x0, y_init);
  require_dim(z0, p.dims().y, "z0");

  RunTrace tr;
  tr.header = {{"schema", 1},
               {"algo", "borep"},
               {"seed", seed},
               {"config", to_json(cfg)},
               {"problem", p.describe()}};
  detail::Recorder rec(p, tr, opts, cfg.K, cfg.thin, cfg.timing);

  OracleCounts counts;
  Vector x = x0;
  Vector y = y_init;
  Vector z = z0;
  Vector m = Vector::Zero(x.size());
  if (!cfg.epoch.epochs.empty()) {
    EpochSgdResult init = epoch_sgd(p, x, y, cfg.epoch, RngToken{seed, Stream::kLowerInit, 0});
    y = std::move(init.y0);
    tr.init_oracle_calls = init.oracle_count;
    counts.grad_y_g += init.oracle_count;
  }
  rec.record(0, x, y, z, counts, nullptr, &m, false);

  const Index dx = x.size();
  const Index dy = y.size();
  Vector y_next(dy), gx(dx), jv(dx), gy(dy), hv(dy), ghat(dx);
  Vector work_y(dy), work_grad(dy), center(dy);
  const RngToken lower_token{seed, Stream::kLowerPeriodic, 0};
  for (std::uint64_t k = 0; k < cfg.K; ++k) {
    const RngToken tf{seed, Stream::kUpperF, k};
    const RngToken tg{seed, Stream::kUpperG, k};
    // The refresh producing y_{k+1} carries index k + 1, so K iterations hold
    // floor(K / I) refreshes.
    y_next = y;
    counts.grad_y_g += update_lower_inplace(p, x, y_next, k + 1, cfg.lower, lower_token, work_y,
                                            work_grad, center);

    // z and the estimate both read (x_k, y_k, z_k).
    p.grad_x_f(x, y, tf, gx);
    p.grad_y_f(x, y, tf, gy);
    p.hvp_yy_g(x, y, z, tg, hv);
    p.jvp_xy_g(x, y, z, tg, jv);
    counts.grad_x_f += 1;
    counts.grad_y_f += 1;
    counts.hvp += 1;
    counts.jvp += 1;

    ghat = gx - jv;
    z.noalias() -= cfg.nu * (hv - gy);
    m = cfg.beta * m + (1.0 - cfg.beta) * ghat;
    const double mn = m.norm();
    const bool degenerate = !(mn > kDegenerateMomentum);
    if (!degenerate) {
      x.noalias() -= (cfg.eta / mn) * m;
    } else {
      ++tr.degenerate_steps;
    }
    y.swap(y_next);
    detail::check_finite_state(k, x, y, z, m);
    rec.record(k + 1, x, y, z, counts, &ghat, &m, degenerate);
  }

  tr.counts = counts;
  tr.lower_oracle_calls = counts.grad_y_g;
  tr.x_final = x;
  tr.y_final = y;
  tr.z_final = z;
  tr.header["summary"] = trace_summary(tr);
  return tr;
}

nlohmann::json to_json(const BorepConfig& c) {
  return {{"schema", 1},
          {"algo", "borep"},
          {"mode", mode_name(c.mode)},
          {"eta", c.eta},
          {"beta", c.beta},
          {"nu", c.nu},
          {"K", c.K},
          {"lower", to_json(c.lower)},
          {"init", to_json(c.epoch)},
          {"thin", c.thin},
          {"timing", c.timing}};
}

}  // namespace borep
