// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/lower.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "salts.hpp"

namespace borep {

Vector project_ball(const Vector& y, const Vector& center, double R) {
  require(y.size() == center.size(), "project_ball: dimension mismatch");
  require(R > 0.0, "project_ball: radius must be positive");
  Vector out = y;
  project_ball_inplace(out, center, R);
  return out;
}

void project_ball_inplace(Vector& y, const Vector& center, double R) {
  const double d2 = (y - center).squaredNorm();
  if (d2 <= R * R) return;
  const double scale = R / std::sqrt(d2);
  y = center + scale * (y - center);
}

std::uint64_t EpochSgdSchedule::total_steps() const {
  std::uint64_t n = 0;
  for (const auto& e : epochs) n += e.T;
  return n;
}

void EpochSgdSchedule::validate() const {
  require(static_cast<int>(epochs.size()) == k_dagger, "schedule must list k_dagger epochs");
  for (const auto& e : epochs) {
    require(e.T >= 1, "epoch length must be >= 1");
    require(e.alpha > 0.0 && std::isfinite(e.alpha), "epoch step must be positive");
    require(e.radius > 0.0, "epoch radius must be positive");
  }
}

double high_prob_lambda(double n, double delta) {
  require(n > 0.0, "lambda: count must be positive");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  const double l = std::log(2.0 * n / delta);
  return std::max(std::sqrt(3.0 * l), l);
}

int k_dagger(double V0, double K0, double mu, double eps) {
  require(V0 > 0.0 && K0 > 0.0 && mu > 0.0 && eps > 0.0,
          "k_dagger needs positive V0, K0, mu and eps");
  const double k = std::ceil(std::log2(128.0 * K0 * K0 * V0 / (mu * eps * eps)));
  return std::max(1, static_cast<int>(k));
}

EpochParams epoch_params(int s, double V0, double lambda, const ProblemConstants& c) {
  require(s >= 0, "epoch index must be >= 0");
  require(V0 > 0.0, "V0 must be positive");
  require(lambda > 0.0, "lambda must be positive");
  require(c.mu > 0.0 && c.L > 0.0, "mu and L must be positive");
  const double mu = c.mu;
  const double s1 = c.sigma_g1;
  const double shrink = std::ldexp(1.0, -s);  // 2^-s
  const double var = std::max(s1 * s1, 4.0 * lambda * lambda * s1 * s1);
  const double t = std::max(16.0 * c.L / mu, 32.0 * var / (mu * V0 * shrink / 4.0));
  require(t < 1.8e19, "epoch length overflows");
  EpochParams e;
  e.T = static_cast<std::uint64_t>(std::ceil(t));
  e.alpha = 1.0 / (2.0 * c.L);
  if (s1 > 0.0) {
    e.alpha = std::min(e.alpha, std::sqrt(V0 * shrink / (2.0 * mu * static_cast<double>(e.T))) / s1);
  }
  e.radius = std::sqrt(2.0 * V0 * shrink / mu);
  return e;
}

EpochSgdSchedule epoch_schedule(double V0, double K0, double eps, double delta,
                                const ProblemConstants& c) {
  EpochSgdSchedule sched;
  sched.V0 = V0;
  sched.k_dagger = k_dagger(V0, K0, c.mu, eps);
  sched.lambda = high_prob_lambda(sched.k_dagger, delta);
  for (int s = 0; s < sched.k_dagger; ++s) {
    sched.epochs.push_back(epoch_params(s, V0, sched.lambda, c));
  }
  return sched;
}

EpochSgdResult epoch_sgd(const Problem& p, const Vector& x0, const Vector& y_init,
                         const EpochSgdSchedule& sched, const RngToken& token) {
  check_point(p, x0, y_init);
  sched.validate();
  Vector center = y_init;
  Vector y(center.size());
  Vector avg(center.size());
  Vector grad(center.size());
  const Index dim = center.size();
  // One running stream for the whole refinement; it is strictly sequential.
  GaussianSource src(token, salt::kEpochSgd);
  std::uint64_t n = 0;
  for (const auto& e : sched.epochs) {
    y = center;
    avg.setZero();
    const double r2 = e.radius * e.radius;
    // One scalar pass per step: step, projection and running average.
    for (std::uint64_t t = 0; t < e.T; ++t) {
      p.grad_y_g_stream(x0, y, src, grad);
      ++n;
      double d2 = 0.0;
      for (Index i = 0; i < dim; ++i) {
        y[i] -= e.alpha * grad[i];
        const double d = y[i] - center[i];
        d2 += d * d;
      }
      if (d2 > r2) {
        const double scale = e.radius / std::sqrt(d2);
        for (Index i = 0; i < dim; ++i) y[i] = center[i] + scale * (y[i] - center[i]);
      }
      const double w = 1.0 / static_cast<double>(t + 1);
      for (Index i = 0; i < dim; ++i) avg[i] += (y[i] - avg[i]) * w;
    }
    if (!avg.allFinite()) fail(ErrorCode::kNonFinite, "epoch SGD produced a non-finite iterate");
    center = avg;
  }
  return {center, n};
}

void LowerUpdateConfig::validate() const {
  require(I >= 1, "lower update period I must be >= 1");
  require(N >= 1, "lower inner steps N must be >= 1");
  require(gamma > 0.0 && std::isfinite(gamma), "lower step gamma must be positive");
  require(R > 0.0, "lower radius R must be positive");
}

std::uint64_t update_lower_inplace(const Problem& p, const Vector& x, Vector& y, std::uint64_t k,
                                   const LowerUpdateConfig& cfg, const RngToken& token,
                                   Vector& work_y, Vector& work_grad, Vector& center) {
  if (!is_lower_update(k, cfg.I)) return 0;
  center = y;
  work_y = y;
  // y holds the running average; its t = 0 value is overwritten by the first
  // iterate, so the starting point never enters the mean.
  for (std::uint64_t t = 0; t < cfg.N; ++t) {
    p.grad_y_g(x, work_y, token.at(lower_counter(k, t)), work_grad);
    work_y.noalias() -= cfg.gamma * work_grad;
    project_ball_inplace(work_y, center, cfg.R);
    y += (work_y - y) / static_cast<double>(t + 1);
  }
  return cfg.N;
}

LowerUpdateResult update_lower(const Problem& p, const Vector& x, const Vector& y_k,
                               std::uint64_t k, const LowerUpdateConfig& cfg,
                               const RngToken& token) {
  check_point(p, x, y_k);
  cfg.validate();
  LowerUpdateResult r{y_k, 0};
  Vector work_y, work_grad, center;
  r.oracle_count = update_lower_inplace(p, x, r.y, k, cfg, token, work_y, work_grad, center);
  return r;
}

double estimate_v0(const Problem& p, const Vector& x0, const Vector& y_init, int steps) {
  check_point(p, x0, y_init);
  require(steps >= 1, "V0 estimate needs at least one step");
  const double step = 1.0 / (2.0 * p.constants().L);
  const double g0 = p.g_value(x0, y_init);
  double low = g0;
  Vector y = y_init;
  Vector grad(y.size());
  const RngToken token{0, Stream::kAux, 0};
  for (int t = 0; t < steps; ++t) {
    p.grad_y_g(x0, y, token.at(static_cast<std::uint64_t>(t)), grad);
    y.noalias() -= step * grad;
    low = std::min(low, p.g_value(x0, y));
  }
  return std::max(2.0 * (g0 - low), 1e-6);
}

nlohmann::json to_json(const EpochSgdSchedule& s) {
  nlohmann::json epochs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.epochs.size(); ++i) {
    const auto& e = s.epochs[i];
    epochs.push_back({{"s", i}, {"radius", e.radius}, {"T", e.T}, {"alpha", e.alpha}});
  }
  return {{"V0", s.V0},
          {"k_dagger", s.k_dagger},
          {"lambda", s.lambda},
          {"total_steps", s.total_steps()},
          {"epochs", epochs}};
}

nlohmann::json to_json(const LowerUpdateConfig& c) {
  return {{"I", c.I}, {"N", c.N}, {"gamma", c.gamma}, {"R", c.R}};
}

}  // namespace borep
