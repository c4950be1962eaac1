// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "borep/baselines.hpp"
#include "helpers.hpp"

using namespace borep;
using namespace borep::testing;

namespace {

SobaConfig soba(std::uint64_t K, double eta_x = 0.05) {
  SobaConfig c;
  c.eta_x = eta_x;
  c.eta_y = 0.2;
  c.eta_z = 0.2;
  c.K = K;
  return c;
}

}  // namespace

TEST_CASE("noiseless SOBA converges on a quadratic problem") {
  QuadraticSpec s;
  s.dx = 2;
  s.dy = 2;
  s.spectrum = {1.0, 2.0};
  s.B = 0.5 * Matrix::Identity(2, 2);
  s.upper.a = vec({1.0, -1.0});
  s.seed = 2;
  auto p = make_quadratic(s);
  const RunTrace t = run_soba(*p, soba(10000), vec({3.0, 3.0}), Vector::Zero(2), Vector::Zero(2), 0);
  CHECK(*t.records.back().grad_phi_exact <= 1e-3);
}

TEST_CASE("eta_x = 0 keeps x constant") {
  auto p = quartic_problem(0.2);
  const Vector x0 = vec({1.0, 1.0});
  const RunTrace t = run_soba(*p, soba(200, 0.0), x0, Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(t.x_final == x0);
  for (const auto& r : t.records) CHECK(*r.grad_phi_exact == *t.records.front().grad_phi_exact);
}

TEST_CASE("SOBA is deterministic") {
  auto p = quartic_problem(0.2);
  const RunTrace a = run_soba(*p, soba(300), vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  const RunTrace b = run_soba(*p, soba(300), vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(a.records == b.records);
}

TEST_CASE("MA-SOBA with beta = 0 reproduces SOBA") {
  auto p = quartic_problem(0.2);
  const SobaConfig c = soba(300);
  const RunTrace a = run_soba(*p, c, vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  const RunTrace b = run_ma_soba(*p, c, vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(a.records == b.records);
  CHECK(a.x_final == b.x_final);
}

TEST_CASE("MA-SOBA differs from SOBA once momentum is on") {
  auto p = quartic_problem(0.2);
  SobaConfig c = soba(300);
  c.beta = 0.9;
  const RunTrace a = run_soba(*p, soba(300), vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  const RunTrace b = run_ma_soba(*p, c, vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(a.x_final != b.x_final);
}

TEST_CASE("baselines skip refinement and pay one lower gradient per iteration") {
  auto p = quartic_problem(0.2);
  const RunTrace t = run_soba(*p, soba(123), vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(t.init_oracle_calls == 0);
  CHECK(t.lower_oracle_calls == 123);
  CHECK(t.counts.grad_y_g == 123);
}

TEST_CASE("upper and z oracle costs match BO-REP at equal K") {
  auto p = quartic_problem(0.2);
  BorepConfig b;
  b.K = 123;
  b.lower = {2, 3, 0.1, 0.5};
  const RunTrace tb = run_borep(*p, b, vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  const RunTrace ts = run_soba(*p, soba(123), vec({1.0, 1.0}), Vector::Zero(2), Vector::Zero(2), 5);
  CHECK(tb.counts.grad_x_f == ts.counts.grad_x_f);
  CHECK(tb.counts.grad_y_f == ts.counts.grad_y_f);
  CHECK(tb.counts.hvp == ts.counts.hvp);
  CHECK(tb.counts.jvp == ts.counts.jvp);
  CHECK(tb.records.back().oracle_f == ts.records.back().oracle_f);
}

TEST_CASE("invalid baseline configs are rejected") {
  SobaConfig c = soba(10);
  c.eta_y = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = soba(10);
  c.beta = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = soba(10);
  c.eta_x = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}
