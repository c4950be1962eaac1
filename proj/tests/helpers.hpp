// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>

#include "borep/problems.hpp"
#include "borep/rng.hpp"

namespace borep::testing {

// A = B = I, c = 0, f = 0.5 |y|^2: y*(x) = z*(x) = grad Phi(x) = x.
inline std::shared_ptr<QuadraticBilevel> identity_problem(Index d = 2, double noise = 0.0) {
  QuadraticUpper u;
  u.wx = 0.0;
  u.wy = 1.0;
  return std::make_shared<QuadraticBilevel>(Matrix::Identity(d, d), Matrix::Identity(d, d),
                                            Vector::Zero(d), u, NoiseScales{noise, noise, noise},
                                            std::nullopt, 10.0);
}

// g = 0.5 |y - y_target|^2 with no x dependence.
inline std::shared_ptr<QuadraticBilevel> centered_lower(const Vector& y_target,
                                                        NoiseScales noise = {}) {
  const Index d = y_target.size();
  QuadraticUpper u;
  u.a = Vector::Zero(d);
  return std::make_shared<QuadraticBilevel>(Matrix::Identity(d, d), Matrix::Zero(d, d), y_target,
                                            u, noise, std::nullopt, 10.0);
}

// Quartic upper level over a coupled quadratic lower level.
inline std::shared_ptr<QuadraticBilevel> quartic_problem(double noise = 0.0,
                                                         std::uint64_t seed = 3) {
  QuadraticSpec s;
  s.dx = 2;
  s.dy = 2;
  s.spectrum = {1.0, 2.0};
  s.B = 0.5 * Matrix::Identity(2, 2);
  s.c = Vector::Constant(2, 0.5);
  s.c(1) = -0.5;
  s.noise = {noise, noise, noise};
  s.seed = seed;
  auto base = make_quadratic(s);
  Vector target(2);
  target << 1.0, -1.0;
  return make_quartic_upper(*base, Matrix::Identity(2, 2), 1.0, target);
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

inline RngToken token(std::uint64_t seed, Stream s, std::uint64_t c = 0) {
  return RngToken{seed, s, c};
}

}  // namespace borep::testing
