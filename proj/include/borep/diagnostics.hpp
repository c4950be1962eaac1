// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Verification tools: finite-difference gradient checks, secant smoothness
// estimates along trajectories with a linear fit, and seed ensembles that
// measure how often the lower-level and estimator guarantees hold.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borep/solver.hpp"

namespace borep {

using ScalarFn = std::function<double(const Vector&)>;
using GradFn = std::function<Vector(const Vector&)>;

/// Central differences (fn(x + h e_i) - fn(x - h e_i)) / (2h) per coordinate.
Vector finite_diff_grad(const ScalarFn& fn, const Vector& x, double h);

struct HypergradCheck {
  int n_points = 0;
  double h = 0.0;
  double tol = 0.0;
  // |fd - exact| / max(|exact|, 1) at each point.
  std::vector<double> errors;
  double max_rel_error = 0.0;
  bool pass = false;
};

/// Compares phi_grad against finite differences of x -> f(x, y*(x)) at
/// n_points x drawn uniformly from the cube [-radius, radius]^dx around
/// `center` (the origin when empty). Passes iff max_rel_error <= tol.
HypergradCheck check_hypergrad(const Problem& p, int n_points, double tol, double h = 1e-5,
                               std::uint64_t seed = 0, double radius = 1.0,
                               const Vector& center = Vector());

struct ScatterPoint {
  double grad_norm = 0.0;
  double local_L = 0.0;
};

struct SmoothnessScatter {
  std::vector<ScatterPoint> points;
};

inline constexpr double kMinSecantStep = 1e-10;

/// One point per consecutive pair (x_k, x_k+1) with |x_k+1 - x_k| > 1e-10:
/// (|grad(x_k)|, |grad(x_k+1) - grad(x_k)| / |x_k+1 - x_k|).
SmoothnessScatter estimate_smoothness(const GradFn& grad, const std::vector<Vector>& trajectory);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of local_L on grad_norm. A scatter with no spread
/// in local_L has r2 = 1 by convention.
LineFit fit_line(const SmoothnessScatter& s);

enum class LemmaId { kInitRefinement, kPeriodicTracking, kBiasAtOptimum };

LemmaId lemma_from_string(const std::string& name);
const char* lemma_name(LemmaId id);

struct LemmaContext {
  double eps = 0.1;
  double delta = 0.1;
  double K0 = 1.0;
  Vector x0;
  Vector y_init;
  Vector z0;
  std::uint64_t base_seed = 0;
  unsigned threads = 0;
  // Bias trials: estimator samples per trial, and offsets applied to y*, z*.
  std::uint64_t mc_samples = 10000;
  double y_offset = 0.0;
  double z_offset = 0.0;
};

struct LemmaReport {
  LemmaId lemma = LemmaId::kInitRefinement;
  int n_seeds = 0;
  int successes = 0;
  double frequency = 0.0;
  double required = 0.0;  // 1 - delta
  bool pass = false;
  // Per-seed ratio measured / threshold; success means ratio <= 1.
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  double threshold = 0.0;  // fixed thresholds only (zero for bias trials)
};

/// init_refinement: Epoch-SGD from y_init at x0, success when
///   |y0 - y*(x0)| <= eps / (8 K0).
/// periodic_tracking: a full BO-REP run, success when
///   max_k |y_k - y*(x_k)| <= eps / (4 K0).
/// bias_at_optimum: at y = y*(x0) + offset, z = z*(x0) + offset, the Monte
///   Carlo mean of the estimator is within the bias bound
///   (L_x0 + L_x1 (|grad Phi| + C M / mu) + tau M / mu) |y - y*| + C |z - z*|
///   plus 4 standard errors.
/// Seed i of the ensemble is base_seed + i; the report depends on nothing else.
LemmaReport verify_lemma_ensemble(LemmaId lemma, const Problem& p, const BorepConfig& schedule,
                                  int n_seeds, const LemmaContext& ctx);

// Right-hand side of the estimator bias bound.
double hypergrad_bias_bound(const ProblemConstants& c, double grad_phi_norm, double y_dist,
                            double z_dist);

nlohmann::json to_json(const HypergradCheck& c);
nlohmann::json to_json(const LineFit& f);
nlohmann::json to_json(const LemmaReport& r);

}  // namespace borep
