// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/problem.hpp"

namespace borep {

namespace {

[[noreturn]] void no_analytic(const Problem& p, const char* what) {
  fail(ErrorCode::kUnsupported, p.kind() + " problem has no closed-form " + what);
}

}  // namespace

Vector Problem::y_star(const Vector&) const { no_analytic(*this, "y_star"); }
Vector Problem::z_star(const Vector&) const { no_analytic(*this, "z_star"); }
Vector Problem::phi_grad(const Vector&) const { no_analytic(*this, "hypergradient"); }
double Problem::phi_value(const Vector&) const { no_analytic(*this, "hyper-objective"); }

void check_point(const Problem& p, const Vector& x, const Vector& y) {
  const Dims d = p.dims();
  require_dim(x, d.x, "x");
  require_dim(y, d.y, "y");
}

Vector oracle_grad_x_f(const Problem& p, const Vector& x, const Vector& y, const RngToken& t) {
  check_point(p, x, y);
  Vector out(p.dims().x);
  p.grad_x_f(x, y, t, out);
  return out;
}

Vector oracle_grad_y_f(const Problem& p, const Vector& x, const Vector& y, const RngToken& t) {
  check_point(p, x, y);
  Vector out(p.dims().y);
  p.grad_y_f(x, y, t, out);
  return out;
}

void Problem::grad_y_g_stream(const Vector& x, const Vector& y, GaussianSource& src,
                              Vector& out) const {
  grad_y_g(x, y, RngToken{src.engine()(), Stream::kLowerInit, 0}, out);
}

Vector oracle_grad_y_g(const Problem& p, const Vector& x, const Vector& y, const RngToken& t) {
  check_point(p, x, y);
  Vector out(p.dims().y);
  p.grad_y_g(x, y, t, out);
  return out;
}

Vector oracle_hvp_yy_g(const Problem& p, const Vector& x, const Vector& y, const Vector& v,
                       const RngToken& t) {
  check_point(p, x, y);
  require_dim(v, p.dims().y, "v");
  Vector out(p.dims().y);
  p.hvp_yy_g(x, y, v, t, out);
  return out;
}

Vector oracle_jvp_xy_g(const Problem& p, const Vector& x, const Vector& y, const Vector& v,
                       const RngToken& t) {
  check_point(p, x, y);
  require_dim(v, p.dims().y, "v");
  Vector out(p.dims().x);
  p.jvp_xy_g(x, y, v, t, out);
  return out;
}

void to_json(nlohmann::json& j, const OracleCounts& c) {
  j = nlohmann::json{{"grad_x_f", c.grad_x_f}, {"grad_y_f", c.grad_y_f},
                     {"grad_y_g", c.grad_y_g}, {"hvp", c.hvp},
                     {"jvp", c.jvp}};
}

}  // namespace borep
