// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// The stochastic oracle contract every bilevel problem implements.
//
// Conventions: x is the upper variable (dimension dims().x), y the lower one
// (dims().y). The mixed second derivative grad_x grad_y g is treated as a
// (d_x by d_y) matrix, so jvp_xy_g maps a lower-space vector to the upper
// space. All oracles are const and pure in (point, token); implementations
// must be safe to call concurrently.

#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "borep/core.hpp"
#include "borep/rng.hpp"

namespace borep {

struct Dims {
  Index x = 0;
  Index y = 0;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string kind() const = 0;
  virtual Dims dims() const = 0;
  virtual const ProblemConstants& constants() const = 0;

  // Stochastic oracles. `out` is resized as needed. Callers validate
  // dimensions; see the oracle_* free functions for checked entry points.
  virtual void grad_x_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const = 0;
  virtual void grad_y_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const = 0;
  virtual void grad_y_g(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const = 0;
  // grad_y_g for long sequential loops: noise comes from the running stream
  // `src` instead of a fresh token per call. The default keys a token from
  // the stream's next word.
  virtual void grad_y_g_stream(const Vector& x, const Vector& y, GaussianSource& src,
                               Vector& out) const;
  virtual void hvp_yy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                        Vector& out) const = 0;
  virtual void jvp_xy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                        Vector& out) const = 0;

  // Deterministic (full-batch) objective values.
  virtual double f_value(const Vector& x, const Vector& y) const = 0;
  virtual double g_value(const Vector& x, const Vector& y) const = 0;

  // Closed-form layer. Problems without one throw ErrorCode::kUnsupported.
  virtual bool has_analytic() const { return false; }
  virtual Vector y_star(const Vector& x) const;
  virtual Vector z_star(const Vector& x) const;
  virtual Vector phi_grad(const Vector& x) const;
  virtual double phi_value(const Vector& x) const;
  virtual std::optional<double> phi_infimum() const { return std::nullopt; }

  // Suggested starting point when a run configuration does not provide one.
  virtual Vector default_x0() const { return Vector::Zero(dims().x); }
  virtual Vector default_y0() const { return Vector::Zero(dims().y); }

  virtual nlohmann::json describe() const = 0;
};

using ProblemPtr = std::shared_ptr<const Problem>;

// Checked oracle entry points (dimension validation, returns by value).
Vector oracle_grad_x_f(const Problem& p, const Vector& x, const Vector& y, const RngToken& t);
Vector oracle_grad_y_f(const Problem& p, const Vector& x, const Vector& y, const RngToken& t);
Vector oracle_grad_y_g(const Problem& p, const Vector& x, const Vector& y, const RngToken& t);
Vector oracle_hvp_yy_g(const Problem& p, const Vector& x, const Vector& y, const Vector& v,
                       const RngToken& t);
Vector oracle_jvp_xy_g(const Problem& p, const Vector& x, const Vector& y, const Vector& v,
                       const RngToken& t);

void check_point(const Problem& p, const Vector& x, const Vector& y);

// Counts of oracle evaluations by kind. "Lower" calls are grad_y_g.
struct OracleCounts {
  std::uint64_t grad_x_f = 0;
  std::uint64_t grad_y_f = 0;
  std::uint64_t grad_y_g = 0;
  std::uint64_t hvp = 0;
  std::uint64_t jvp = 0;

  std::uint64_t f_total() const { return grad_x_f + grad_y_f; }
  std::uint64_t g_total() const { return grad_y_g + hvp + jvp; }
  std::uint64_t lower() const { return grad_y_g; }
  friend bool operator==(const OracleCounts&, const OracleCounts&) = default;
};

void to_json(nlohmann::json& j, const OracleCounts& c);

}  // namespace borep
