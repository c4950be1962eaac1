// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Lower-level machinery: ball projection, the epoch schedule and Epoch-SGD
// used once to refine the initial lower variable, and the periodic projected
// SGD update run every I upper iterations.

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "borep/problem.hpp"

namespace borep {

/// Euclidean projection onto the closed ball B(center, R).
Vector project_ball(const Vector& y, const Vector& center, double R);

// In-place variant used by the inner loops.
void project_ball_inplace(Vector& y, const Vector& center, double R);

struct EpochParams {
  double radius = 0.0;
  std::uint64_t T = 1;
  double alpha = 0.0;
};

struct EpochSgdSchedule {
  double V0 = 0.0;
  int k_dagger = 0;
  double lambda = 0.0;
  std::vector<EpochParams> epochs;

  std::uint64_t total_steps() const;
  void validate() const;
};

// max(sqrt(3 ln(2 n / delta)), ln(2 n / delta)), the high-probability factor
// shared by the epoch and periodic schedules.
double high_prob_lambda(double n, double delta);

// ceil(log2(128 K0^2 V0 / (mu eps^2))), at least 1.
int k_dagger(double V0, double K0, double mu, double eps);

/// Parameters of epoch s:
///   T_s = ceil(max(16 L / mu, 32 max(s1^2, 4 lambda^2 s1^2) / (mu V0 2^-(s+2))))
///   alpha_s = min(1 / (2L), sqrt(V0 2^-s / (2 mu T_s)) / s1)
///   radius_s = sqrt(2 V0 / (mu 2^s))
/// with s1 = sigma_g1. A noiseless oracle leaves only the 1/(2L) step.
EpochParams epoch_params(int s, double V0, double lambda, const ProblemConstants& c);

/// Full schedule: k_dagger from (V0, K0, eps), then lambda from k_dagger and
/// delta, then each epoch.
EpochSgdSchedule epoch_schedule(double V0, double K0, double eps, double delta,
                                const ProblemConstants& c);

struct EpochSgdResult {
  Vector y0;
  std::uint64_t oracle_count = 0;
};

/// Runs every epoch of `sched` at the fixed upper point x0. Epoch s takes T_s
/// projected steps inside the ball of radius_s around the epoch's starting
/// point and hands the average of its T_s iterates to the next epoch.
/// Noise comes from one running stream keyed by `token`, through
/// Problem::grad_y_g_stream.
EpochSgdResult epoch_sgd(const Problem& p, const Vector& x0, const Vector& y_init,
                         const EpochSgdSchedule& sched, const RngToken& token);

struct LowerUpdateConfig {
  std::uint64_t I = 1;
  std::uint64_t N = 1;
  double gamma = 0.0;
  double R = 0.0;

  void validate() const;
};

struct LowerUpdateResult {
  Vector y;
  std::uint64_t oracle_count = 0;
};

// Whether iteration k refreshes the lower variable (k > 0 and I divides k).
inline bool is_lower_update(std::uint64_t k, std::uint64_t I) { return k > 0 && k % I == 0; }

// Token counter of inner step t at upper iteration k.
inline std::uint64_t lower_counter(std::uint64_t k, std::uint64_t t) { return (k << 32) + t; }

/// Periodic lower refresh. Off-schedule iterations return y_k untouched
/// without drawing. Otherwise runs N projected SGD steps with step gamma
/// inside B(y_k, R) and returns the running average of the N iterates.
LowerUpdateResult update_lower(const Problem& p, const Vector& x, const Vector& y_k,
                               std::uint64_t k, const LowerUpdateConfig& cfg,
                               const RngToken& token);

// Same as update_lower but writes into y (which holds y_k on entry) and uses
// caller-owned buffers. Returns the oracle count.
std::uint64_t update_lower_inplace(const Problem& p, const Vector& x, Vector& y, std::uint64_t k,
                                   const LowerUpdateConfig& cfg, const RngToken& token,
                                   Vector& work_y, Vector& work_grad, Vector& center);

/// Upper bound on g(x0, y_init) - min_y g(x0, y) for problems that do not
/// supply one: twice the decrease achieved by `steps` deterministic gradient
/// steps of size 1/(2L), floored at 1e-6.
double estimate_v0(const Problem& p, const Vector& x0, const Vector& y_init, int steps = 50);

nlohmann::json to_json(const EpochSgdSchedule& s);
nlohmann::json to_json(const LowerUpdateConfig& c);

}  // namespace borep
