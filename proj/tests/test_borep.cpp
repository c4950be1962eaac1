// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "borep/solver.hpp"
#include "helpers.hpp"

using namespace borep;
using namespace borep::testing;

namespace {

ScheduleInput unit_schedule_input() {
  ScheduleInput in;
  in.eps = 0.1;
  in.delta = 0.1;
  in.Delta = 1.0;
  in.V0 = 1.0;
  in.grad_phi_x0_norm = 1.0;
  in.constants.mu = 1.0;
  in.constants.L = 1.0;
  in.constants.L_x0 = 1.0;
  in.constants.sigma_g1 = 1.0;
  in.derived = derive_constants(in.constants);
  return in;
}

BorepConfig practical_config(std::uint64_t K) {
  BorepConfig c;
  c.eta = 1e-2;
  c.beta = 0.9;
  c.nu = 0.05;
  c.lower = {2, 3, 0.1, 0.5};
  c.K = K;
  return c;
}

}  // namespace

TEST_CASE("theory schedule: I for unit constants") {
  const ScheduleInput in = unit_schedule_input();
  REQUIRE(in.derived.K0 == 1.0);
  CHECK(theory_schedule(in).lower.I == 100);
}

TEST_CASE("theory schedule: momentum and z step") {
  ScheduleInput in = unit_schedule_input();
  in.constants.sigma_f1 = 1.0;
  in.constants.M = 0.0;
  in.constants.C_gxy = 1.0;
  in.constants.sigma_g2 = 1.0;
  in.derived = derive_constants(in.constants);
  ScheduleDetail d;
  const BorepConfig c = theory_schedule(in, &d);
  CHECK(d.one_minus_beta == doctest::Approx(3.125e-4).epsilon(1e-14));
  CHECK(1.0 - c.beta == doctest::Approx(3.125e-4).epsilon(1e-9));
  CHECK(c.nu == doctest::Approx(3.125e-4).epsilon(1e-14));
}

TEST_CASE("theory iteration count") {
  CHECK(theory_iterations(1.0, 1e-3, 0.1) == 40000.0);
  CHECK_THROWS_AS(theory_iterations(1.0, 0.0, 0.1), Error);
}

TEST_CASE("theory schedule internal consistency") {
  ScheduleInput in = unit_schedule_input();
  in.constants.C_gxy = 0.5;
  in.constants.L_x1 = 1.0;
  in.constants.sigma_f1 = 0.5;
  in.constants.M = 1.0;
  in.derived = derive_constants(in.constants);
  in.K_cap = 100;
  ScheduleDetail d;
  const BorepConfig c = theory_schedule(in, &d);
  const double K0 = in.derived.K0;
  CHECK(c.eta == std::min({d.eta_terms[0], d.eta_terms[1], d.eta_terms[2]}));
  CHECK(c.eta <= in.constants.mu * in.eps / (8.0 * K0 * c.lower.I * in.constants.C_gxy));
  CHECK(d.K_theory == std::ceil(4.0 * in.Delta / (c.eta * in.eps)));
  CHECK(c.K == 100);
  CHECK(c.lower.R == doctest::Approx(in.eps / (4.0 * K0)));
  CHECK(c.lower.gamma <= 1.0 / (2.0 * in.constants.L));
  CHECK(c.mode == ScheduleMode::kTheory);
  CHECK(c.epoch.k_dagger == static_cast<int>(c.epoch.epochs.size()));
}

TEST_CASE("decoupled problems drop the coupling cap") {
  ScheduleDetail d;
  theory_schedule(unit_schedule_input(), &d);
  CHECK(d.eta_terms[2] == std::numeric_limits<double>::infinity());
}

TEST_CASE("hypergradient estimate at the optimum of the identity fixture") {
  auto p = identity_problem();
  const Vector x = vec({1.0, 2.0});
  const Vector g = hypergrad_estimate(*p, x, p->y_star(x), p->z_star(x), RngToken{},
                                      RngToken{0, Stream::kUpperG, 0});
  CHECK(g == x);
  CHECK(p->phi_grad(x) == x);
}

TEST_CASE("hypergradient estimate with z = 0 is the upper sample") {
  auto p = quartic_problem(0.3);
  const Vector x = vec({0.2, 0.1});
  const Vector y = vec({-0.5, 0.5});
  const RngToken tf{5, Stream::kUpperF, 2};
  const RngToken tg{5, Stream::kUpperG, 2};
  CHECK(hypergrad_estimate(*p, x, y, Vector::Zero(2), tf, tg) == oracle_grad_x_f(*p, x, y, tf));
}

TEST_CASE("decoupled estimate ignores z") {
  auto p = centered_lower(vec({1.0, 1.0}), NoiseScales{0.2, 0.2, 0.2});
  const Vector x = vec({0.2, 0.1});
  const Vector y = vec({-0.5, 0.5});
  const RngToken tf{5, Stream::kUpperF, 2};
  const RngToken tg{5, Stream::kUpperG, 2};
  CHECK(hypergrad_estimate(*p, x, y, vec({7.0, -3.0}), tf, tg) == oracle_grad_x_f(*p, x, y, tf));
}

TEST_CASE("update_z examples") {
  // A = I and grad_y f = y - b = (2, 2) at y = 0.
  QuadraticUpper u;
  u.b = vec({-2.0, -2.0});
  auto p = std::make_shared<QuadraticBilevel>(Matrix::Identity(2, 2), Matrix::Zero(2, 2),
                                              Vector::Zero(2), u, NoiseScales{}, std::nullopt,
                                              10.0);
  const Vector zero = Vector::Zero(2);
  CHECK(update_z(*p, zero, zero, zero, 0.5, RngToken{}, RngToken{}) == vec({1.0, 1.0}));
  const Vector zs = vec({2.0, 2.0});
  CHECK(update_z(*p, zero, zero, zs, 0.5, RngToken{}, RngToken{}) == zs);
  const Vector z1 = update_z(*p, zero, zero, zs + vec({2.0, 0.0}), 0.5, RngToken{}, RngToken{});
  CHECK(z1 - zs == vec({1.0, 0.0}));
}

TEST_CASE("update_momentum examples") {
  CHECK(update_momentum(Vector::Zero(2), vec({1.0, 0.0}), 0.9).isApprox(vec({0.1, 0.0}), 1e-15));
  CHECK(update_momentum(vec({5.0, 5.0}), vec({1.0, 2.0}), 0.0) == vec({1.0, 2.0}));
  const Vector v = vec({0.3, -1.7});
  for (double b : {0.0, 0.5, 0.9, 0.999}) CHECK(update_momentum(v, v, b).isApprox(v, 1e-15));
}

TEST_CASE("normalized_step examples") {
  const StepResult s = normalized_step(Vector::Zero(2), vec({3.0, 4.0}), 0.1);
  CHECK(s.x.isApprox(vec({-0.06, -0.08}), 1e-15));
  CHECK_FALSE(s.degenerate);
  const StepResult d = normalized_step(vec({1.0, 1.0}), Vector::Zero(2), 0.1);
  CHECK(d.degenerate);
  CHECK(d.x == vec({1.0, 1.0}));
  for (double scale : {1e-9, 1.0, 1e9}) {
    const StepResult r = normalized_step(vec({1.0, 2.0}), scale * vec({0.3, -0.4}), 0.25);
    CHECK(std::abs((r.x - vec({1.0, 2.0})).norm() - 0.25) <= 1e-12 * 0.25);
  }
}

TEST_CASE("run_borep is deterministic") {
  auto p = quartic_problem(0.1);
  const BorepConfig c = practical_config(300);
  const Vector x0 = vec({2.0, 2.0});
  const RunTrace a = run_borep(*p, c, x0, Vector::Zero(2), Vector::Zero(2), 7);
  const RunTrace b = run_borep(*p, c, x0, Vector::Zero(2), Vector::Zero(2), 7);
  CHECK(a.records == b.records);
  CHECK(a.x_final == b.x_final);
  const RunTrace other = run_borep(*p, c, x0, Vector::Zero(2), Vector::Zero(2), 8);
  CHECK(other.x_final != a.x_final);
}

TEST_CASE("K = 0 records only the initial state") {
  auto p = quartic_problem(0.1);
  const Vector x0 = vec({2.0, 2.0});
  const RunTrace t = run_borep(*p, practical_config(0), x0, Vector::Zero(2), Vector::Zero(2), 1);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].k == 0);
  CHECK(t.x_final == x0);
}

TEST_CASE("trace bookkeeping") {
  auto p = quartic_problem(0.1);
  BorepConfig c = practical_config(101);
  c.epoch = epoch_schedule(1.0, 1.0, 1.0, 0.1, p->constants());
  const RunTrace t = run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 3);
  REQUIRE(t.records.size() == 102);
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    CHECK(t.records[i].k == i);
    CHECK(t.records[i].oracle_f >= t.records[i - 1].oracle_f);
    CHECK(t.records[i].oracle_g >= t.records[i - 1].oracle_g);
    CHECK(t.records[i].grad_phi_exact.has_value());
    CHECK_FALSE(t.records[i].wall_ms.has_value());
  }
  CHECK(t.init_oracle_calls == c.epoch.total_steps());
  CHECK(t.lower_oracle_calls == c.epoch.total_steps() + (101 / 2) * 3);
  CHECK(t.counts.grad_y_g == t.lower_oracle_calls);
  CHECK(t.counts.grad_x_f == 101);
  CHECK(t.counts.hvp == 101);
}

TEST_CASE("refresh count is floor(K / I) when I divides K") {
  auto p = quartic_problem(0.1);
  for (std::uint64_t I : {1, 2, 5}) {
    BorepConfig c = practical_config(100);
    c.lower.I = I;
    const RunTrace t = run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 4);
    CHECK(t.lower_oracle_calls == (100 / I) * c.lower.N);
  }
}

TEST_CASE("thinning keeps the first and last records") {
  auto p = quartic_problem(0.1);
  BorepConfig c = practical_config(95);
  c.thin = 10;
  const RunTrace t = run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 3);
  REQUIRE(t.records.size() == 11);
  CHECK(t.records.front().k == 0);
  CHECK(t.records[9].k == 90);
  CHECK(t.records.back().k == 95);
}

TEST_CASE("every non-degenerate step has length eta") {
  auto p = quartic_problem(0.1);
  BorepConfig c = practical_config(2000);
  c.eta = 0.05;
  RunOptions o;
  o.keep_path = true;
  const RunTrace t = run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 4, o);
  REQUIRE(t.x_path.size() == 2001);
  for (std::size_t k = 0; k + 1 < t.x_path.size(); ++k) {
    if (t.records[k + 1].degenerate_step) continue;
    CHECK(std::abs((t.x_path[k + 1] - t.x_path[k]).norm() - c.eta) <= 1e-12 * c.eta);
  }
}

TEST_CASE("eta = 0 freezes x") {
  auto p = quartic_problem(0.1);
  BorepConfig c = practical_config(50);
  c.eta = 0.0;
  const Vector x0 = vec({2.0, 2.0});
  const RunTrace t = run_borep(*p, c, x0, Vector::Zero(2), Vector::Zero(2), 4);
  CHECK(t.x_final == x0);
}

TEST_CASE("practical BO-REP reduces stationarity on the quartic fixture") {
  auto p = quartic_problem(0.1);
  const BorepConfig c = practical_config(5000);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RunTrace t = run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), seed);
    double first = 0.0;
    double last = 0.0;
    const std::size_t w = t.records.size() / 10;
    for (std::size_t i = 0; i < w; ++i) {
      first += *t.records[i].grad_phi_exact;
      last += *t.records[t.records.size() - 1 - i].grad_phi_exact;
    }
    if (last < 0.2 * first) ++good;
  }
  CHECK(good >= 9);
}

TEST_CASE("estimator conditional mean") {
  const double sigma = 0.1;
  auto p = quartic_problem(sigma);
  const Vector x = vec({0.5, -0.5});
  const Vector y = vec({0.2, 0.3});
  const Vector z = vec({-1.0, 0.4});
  const int n = 100000;
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    sum += hypergrad_estimate(*p, x, y, z, RngToken{2, Stream::kUpperF, std::uint64_t(i)},
                              RngToken{2, Stream::kUpperG, std::uint64_t(i)});
  }
  const Vector expect = p->exact_grad_x_f(x, y) + p->B().transpose() * z;
  // f noise plus the mixed-product noise scaled by |z|.
  const double sd = std::sqrt(sigma * sigma + sigma * sigma * z.squaredNorm());
  for (Index j = 0; j < 2; ++j) CHECK(std::abs(sum(j) / n - expect(j)) <= 4.0 * sd / std::sqrt(n));
}

TEST_CASE("moving average error reaches its steady state") {
  const double beta = 0.9;
  const double s = 0.5;
  const Vector G = vec({1.0, -2.0, 0.5});
  GaussianSource src(RngToken{31, Stream::kAux, 0}, 1);
  Vector m = G;
  double acc = 0.0;
  const int burn = 1000;
  const int n = 400000;
  for (int k = 0; k < burn + n; ++k) {
    Vector g = G;
    for (Index j = 0; j < 3; ++j) g(j) += s * src();
    m = update_momentum(m, g, beta);
    if (k >= burn) acc += (m - G).squaredNorm();
  }
  const double expect = (1.0 - beta) / (1.0 + beta) * 3.0 * s * s;
  CHECK(acc / n == doctest::Approx(expect).epsilon(0.03));
}

TEST_CASE("invalid solver configs are rejected") {
  auto p = quartic_problem();
  BorepConfig c = practical_config(10);
  c.beta = 1.0;
  CHECK_THROWS_AS(run_borep(*p, c, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), 0), Error);
  c = practical_config(10);
  c.nu = 0.0;
  CHECK_THROWS_AS(run_borep(*p, c, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), 0), Error);
  c = practical_config(10);
  CHECK_THROWS_AS(run_borep(*p, c, Vector::Zero(3), Vector::Zero(2), Vector::Zero(2), 0), Error);
}

TEST_CASE("non-finite state aborts the run") {
  auto p = quartic_problem();
  BorepConfig c = practical_config(100);
  c.nu = 1e200;
  CHECK_THROWS_AS(run_borep(*p, c, vec({2.0, 2.0}), Vector::Zero(2), vec({1e200, 1e200}), 0),
                  Error);
}
