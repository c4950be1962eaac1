// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// BO-REP: normalized-momentum upper updates, SGD on the linear system for z,
// and a lower variable that is refined once at the start and then refreshed
// every I iterations.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "borep/lower.hpp"
#include "borep/problem.hpp"
#include "borep/trace.hpp"

namespace borep {

enum class ScheduleMode { kTheory, kPractical };

struct BorepConfig {
  double eta = 1e-2;
  double beta = 0.9;
  double nu = 0.05;
  LowerUpdateConfig lower;
  // Initialization refinement; no epochs means y_init is used as is.
  EpochSgdSchedule epoch;
  std::uint64_t K = 0;
  ScheduleMode mode = ScheduleMode::kPractical;
  // Keep every thin-th record (plus the last one).
  std::uint64_t thin = 1;
  // Fill wall_ms. Off by default so traces are reproducible byte for byte.
  bool timing = false;

  void validate() const;
};

struct ScheduleInput {
  double eps = 0.1;
  double delta = 0.1;
  double Delta = 1.0;           // Phi(x0) - inf Phi
  double Delta_z0 = 0.0;        // |z0 - z*(x0)|^2
  double grad_phi_x0_norm = 0;  // |grad Phi(x0)| or an upper bound
  double V0 = 1.0;              // initial lower gap bound
  ProblemConstants constants;
  DerivedConstants derived;
  // Caps the iteration count actually run; lambda still uses the uncapped K.
  std::uint64_t K_cap = 0;

  void validate() const;
};

// Intermediate quantities of the theory schedule, for audit output.
struct ScheduleDetail {
  double one_minus_beta = 0.0;
  double eta_terms[3] = {0.0, 0.0, 0.0};
  double K_theory = 0.0;
  double lambda_lower = 0.0;
  std::vector<std::string> warnings;
};

/// K = ceil(4 Delta / (eta eps)).
double theory_iterations(double Delta, double eta, double eps);

/// Parameter choice that carries the convergence guarantee, computed in
/// dependency order: 1 - beta, nu, I, eta, K, lambda, gamma, N, R, then the
/// epoch schedule. Infinite step caps (decoupled or noiseless problems) drop
/// out of the minima; a noiseless lower oracle makes gamma fall back to 1/(2L).
BorepConfig theory_schedule(const ScheduleInput& in, ScheduleDetail* detail = nullptr);

/// grad_x F(x, y; zeta) - grad_x grad_y G(x, y; xi) z, with zeta drawn from
/// t_f and xi from t_g.
Vector hypergrad_estimate(const Problem& p, const Vector& x, const Vector& y, const Vector& z,
                          const RngToken& t_f, const RngToken& t_g);

/// z - nu (hvp(x, y, z; xi) - grad_y F(x, y; zeta)).
Vector update_z(const Problem& p, const Vector& x, const Vector& y, const Vector& z, double nu,
                const RngToken& t_f, const RngToken& t_g);

Vector update_momentum(const Vector& m, const Vector& ghat, double beta);

inline constexpr double kDegenerateMomentum = 1e-12;

struct StepResult {
  Vector x;
  bool degenerate = false;
};

/// x - eta m / |m|; leaves x in place and flags the step when |m| <= 1e-12.
StepResult normalized_step(const Vector& x, const Vector& m, double eta);

struct RunOptions {
  std::vector<TraceObserver> observers;
  bool keep_path = false;
};

/// Tokens: upper-level F samples use Stream::kUpperF at counter k, G samples
/// Stream::kUpperG at k, periodic lower steps Stream::kLowerPeriodic and the
/// refinement Stream::kLowerInit.
RunTrace run_borep(const Problem& p, const BorepConfig& cfg, const Vector& x0,
                   const Vector& y_init, const Vector& z0, std::uint64_t seed,
                   const RunOptions& opts = {});

nlohmann::json to_json(const BorepConfig& c);

// Shared by the solvers: fills the analytic and cost fields of a record.
TraceRecord make_record(const Problem& p, std::uint64_t k, const Vector& x, const Vector& y,
                        const Vector& z, const OracleCounts& counts);

}  // namespace borep
