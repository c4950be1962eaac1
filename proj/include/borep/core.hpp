// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by every solver component: dense vectors, the error
// type, the problem constants of a bilevel instance and the smoothness
// constants derived from them.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace borep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kUnsupported,
  kNonFinite,
  kRuntime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kInvalidArgument, what);
}

void require_dim(const Vector& v, Index expected, const char* name);
bool all_finite(const Vector& v);

/// Problem-level constants of a stochastic bilevel instance.
///
/// `mu`, `L` describe the lower-level function g (strong convexity and
/// smoothness), `C_gxy`, `tau`, `rho` the mixed and lower Hessians, `M` bounds
/// the lower gradient of f at the lower solution, and `L_x0 .. L_y1` are the
/// relaxed smoothness constants of f. The four sigmas are noise scales of the
/// stochastic oracles (first/second order of f and g).
struct ProblemConstants {
  double mu = 1.0;
  double L = 1.0;
  double C_gxy = 0.0;
  double tau = 0.0;
  double rho = 0.0;
  double M = 0.0;
  double L_x0 = 0.0;
  double L_x1 = 0.0;
  double L_y0 = 0.0;
  double L_y1 = 0.0;
  double sigma_f1 = 0.0;
  double sigma_f2 = 0.0;
  double sigma_g1 = 0.0;
  double sigma_g2 = 0.0;
  // Set when M was estimated over a bounded region instead of known exactly.
  bool M_is_estimate = false;

  void validate() const;
};

struct DerivedConstants {
  double K0 = 0.0;
  double K1 = 0.0;
  double L_zstar = 0.0;
};

// sqrt(1 + (C_gxy / mu)^2), the factor shared by all derived constants.
double coupling_scale(const ProblemConstants& c);

/// Relaxed smoothness constants (K0, K1) of the hyper-objective. L_zstar is
/// left at zero; see derive_lz_star.
DerivedConstants derive_k0_k1(const ProblemConstants& c);

/// Lipschitz constant of the linear-system solution z*(x).
double derive_lz_star(const ProblemConstants& c);

DerivedConstants derive_constants(const ProblemConstants& c);

/// Largest step ||x - x'|| for which the relaxed smoothness bounds on the
/// hyper-objective are claimed to hold.
double relaxed_smoothness_radius(const ProblemConstants& c);

void to_json(nlohmann::json& j, const ProblemConstants& c);
void from_json(const nlohmann::json& j, ProblemConstants& c);
void to_json(nlohmann::json& j, const DerivedConstants& d);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace borep
