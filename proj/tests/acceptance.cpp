// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "borep/baselines.hpp"
#include "borep/config.hpp"
#include "borep/diagnostics.hpp"
#include "borep/problems.hpp"
#include "borep/solver.hpp"
#include "borep/trace.hpp"

using namespace borep;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

// A = B = I, c = 0, f = 0.5 |y|^2.
std::shared_ptr<QuadraticBilevel> identity_fixture(double noise) {
  QuadraticUpper u;
  u.wx = 0.0;
  u.wy = 1.0;
  return std::make_shared<QuadraticBilevel>(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            Vector::Zero(2), u, NoiseScales{noise, noise, noise},
                                            std::nullopt, 10.0);
}

// One-dimensional problem whose constants are all one: mu = L = L_x0 = 1.
std::shared_ptr<QuadraticBilevel> unit_fixture(double sigma_g1) {
  QuadraticUpper u;
  u.a = vec({1.0});
  return std::make_shared<QuadraticBilevel>(Matrix::Identity(1, 1), Matrix::Zero(1, 1),
                                            vec({1.0}), u, NoiseScales{0.0, sigma_g1, 0.0},
                                            std::nullopt, 10.0);
}

// Quartic upper level over a coupled quadratic lower level. M is bounded
// over |x| <= m_radius.
std::shared_ptr<QuadraticBilevel> quartic_fixture(NoiseScales noise, double m_radius = 10.0) {
  QuadraticSpec s;
  s.dx = 2;
  s.dy = 2;
  s.spectrum = {1.0, 2.0};
  s.B = 0.5 * Matrix::Identity(2, 2);
  s.c = vec({0.5, -0.5});
  s.noise = noise;
  s.seed = 3;
  auto base = make_quadratic(s);
  return make_quartic_upper(*base, Matrix::Identity(2, 2), 1.0, vec({1.0, -1.0}), std::nullopt,
                            m_radius);
}

std::shared_ptr<QuadraticBilevel> quartic_fixture(double noise) {
  return quartic_fixture(NoiseScales{noise, noise, noise});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome hypergradient_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const HypergradCheck c = check_hypergrad(*identity_fixture(0.0), 20, 1e-5, 1e-5, 0, 2.0);
  const double dt = seconds_since(t0);
  return {c.pass && dt < 1.0, fmt("max rel error %.3g <= 1e-5, %.3f s < 1 s", c.max_rel_error, dt)};
}

Outcome estimator_bias() {
  const auto t0 = std::chrono::steady_clock::now();
  const double sigma = 0.1;
  const auto p = identity_fixture(sigma);
  const Vector x = vec({0.3, -0.2});
  const Vector y = p->y_star(x);
  const Vector z = p->z_star(x);
  const Vector grad = p->phi_grad(x);
  const int n = 100000;
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    sum += hypergrad_estimate(*p, x, y, z, RngToken{2024, Stream::kUpperF, std::uint64_t(i)},
                              RngToken{2024, Stream::kUpperG, std::uint64_t(i)});
  }
  const Vector err = (sum / n - grad).cwiseAbs();
  const double tol = 4.0 * sigma / std::sqrt(static_cast<double>(n));
  const double dt = seconds_since(t0);
  return {err.maxCoeff() <= tol && dt < 10.0,
          fmt("max |mean - grad Phi| %.3g <= %.3g (4 sigma/sqrt(n)), %.2f s < 10 s",
              err.maxCoeff(), tol, dt)};
}

Outcome init_refinement_ensemble() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = unit_fixture(1.0);
  TheoryRequest req;
  req.eps = 0.5;
  req.delta = 0.1;
  req.V0 = 0.5;  // exact gap from y_init = 0 to y* = 1
  req.K_cap = 1;
  const Vector x0 = Vector::Zero(1);
  const Vector y_init = Vector::Zero(1);
  const ScheduleReport s = build_theory_schedule(*p, req, x0, y_init, Vector::Zero(1));
  LemmaContext ctx;
  ctx.eps = req.eps;
  ctx.delta = req.delta;
  ctx.K0 = s.input.derived.K0;
  ctx.x0 = x0;
  ctx.y_init = y_init;
  ctx.z0 = Vector::Zero(1);
  const LemmaReport r = verify_lemma_ensemble(LemmaId::kInitRefinement, *p, s.config, 200, ctx);
  const double dt = seconds_since(t0);
  return {r.pass && ctx.K0 == 1.0 && dt < 120.0,
          fmt("success %d/200 = %.3f >= 0.9 (k_dagger %d, %llu steps/seed, median ratio %.3f), "
              "%.1f s < 120 s",
              r.successes, r.frequency, s.config.epoch.k_dagger,
              static_cast<unsigned long long>(s.config.epoch.total_steps()), r.median_ratio, dt)};
}

Outcome tracking_ensemble() {
  const auto t0 = std::chrono::steady_clock::now();
  // The theory N grows like (sigma_g1 K0 / eps)^2, so the lower oracle is
  // nearly exact and M is bounded on |x| <= 3, which holds the whole path
  // (|x0| = 2.83 and K eta is about 2e-6).
  const auto p = quartic_fixture(NoiseScales{0.1, 1e-5, 0.1}, 3.0);
  TheoryRequest req;
  req.eps = 0.5;
  req.delta = 0.1;
  req.K_cap = 2000;
  const Vector x0 = vec({2.0, 2.0});
  const Vector y_init = Vector::Zero(2);
  const ScheduleReport s = build_theory_schedule(*p, req, x0, y_init, Vector::Zero(2));
  const double K0 = s.input.derived.K0;
  const double cap = p->constants().mu * req.eps /
                     (8.0 * K0 * static_cast<double>(s.config.lower.I) * p->constants().C_gxy);
  LemmaContext ctx;
  ctx.eps = req.eps;
  ctx.delta = req.delta;
  ctx.K0 = K0;
  ctx.x0 = x0;
  ctx.y_init = y_init;
  ctx.z0 = Vector::Zero(2);
  const LemmaReport r = verify_lemma_ensemble(LemmaId::kPeriodicTracking, *p, s.config, 100, ctx);
  const double dt = seconds_since(t0);
  return {r.pass && s.config.eta <= cap && dt < 300.0,
          fmt("success %d/100 = %.2f >= 0.9 (eta %.3g <= %.3g, I %llu, N %llu, K %llu, max ratio "
              "%.3f), %.1f s < 300 s",
              r.successes, r.frequency, s.config.eta, cap,
              static_cast<unsigned long long>(s.config.lower.I),
              static_cast<unsigned long long>(s.config.lower.N),
              static_cast<unsigned long long>(s.config.K), r.max_ratio, dt)};
}

Outcome schedule_arithmetic() {
  const auto p = unit_fixture(1.0);
  TheoryRequest req;
  req.eps = 0.1;
  req.delta = 0.1;
  const ScheduleReport s =
      build_theory_schedule(*p, req, Vector::Zero(1), Vector::Zero(1), Vector::Zero(1));
  ProblemConstants c;
  c.mu = 1.0;
  c.L = 1.0;
  c.sigma_g1 = 1.0;
  const EpochParams e = epoch_params(0, 1.0, 2.0, c);
  return {s.config.lower.I == 100 && e.T == 2048 && e.alpha == 1.0 / 64.0,
          fmt("I = %llu, T_0 = %llu, alpha_0 = %.17g", static_cast<unsigned long long>(s.config.lower.I),
              static_cast<unsigned long long>(e.T), e.alpha)};
}

Outcome step_norm_invariant() {
  const auto p = quartic_fixture(0.1);
  BorepConfig cfg;
  cfg.eta = 0.1;
  cfg.beta = 0.9;
  cfg.nu = 0.05;
  cfg.lower = {2, 3, 0.1, 0.5};
  cfg.K = 10000;
  RunOptions opts;
  opts.keep_path = true;
  const RunTrace t = run_borep(*p, cfg, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 11, opts);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k + 1 < t.x_path.size(); ++k) {
    if (t.records[k + 1].degenerate_step) continue;
    worst = std::max(worst, std::abs((t.x_path[k + 1] - t.x_path[k]).norm() - cfg.eta));
    ++checked;
  }
  return {checked == 10000 - t.degenerate_steps && worst <= 1e-12 * cfg.eta,
          fmt("%zu steps, max ||dx| - eta| = %.3g <= %.3g", checked, worst, 1e-12 * cfg.eta)};
}

// Final-window mean of the exact stationarity; infinity when the run blows up.
double final_stationarity(const std::function<RunTrace()>& run) {
  try {
    const auto m = final_window_mean(run().records, 0.1);
    return m ? *m : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

Outcome convergence_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  // Start on the steep part of the quartic, where a fixed SGD step must be
  // small enough for the largest gradient on the path.
  const double sigma = 0.01;
  const auto p = quartic_fixture(sigma);
  const Vector x0 = vec({20.0, 20.0});
  const Vector zero = Vector::Zero(2);
  const std::uint64_t K = 5000;
  const std::uint64_t tuning_seed = 1000;

  BorepConfig b;
  b.beta = 0.9;
  b.nu = 0.05;
  b.lower = {2, 3, 0.1, 0.5};
  b.K = K;
  SobaConfig s;
  s.eta_y = 0.1;
  s.eta_z = 0.05;
  s.K = K;

  // Each method gets its best step size from the same grid on a held-out seed.
  const std::vector<double> grid = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5};
  double best_b = std::numeric_limits<double>::infinity();
  double best_s = std::numeric_limits<double>::infinity();
  double eta_b = grid.front();
  double eta_s = grid.front();
  for (double eta : grid) {
    BorepConfig bi = b;
    bi.eta = eta;
    const double vb =
        final_stationarity([&] { return run_borep(*p, bi, x0, zero, zero, tuning_seed); });
    if (vb < best_b) best_b = vb, eta_b = eta;
    SobaConfig si = s;
    si.eta_x = eta;
    const double vs =
        final_stationarity([&] { return run_soba(*p, si, x0, zero, zero, tuning_seed); });
    if (vs < best_s) best_s = vs, eta_s = eta;
  }
  b.eta = eta_b;
  s.eta_x = eta_s;

  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double vb = final_stationarity([&] { return run_borep(*p, b, x0, zero, zero, seed); });
    const double vs = final_stationarity([&] { return run_soba(*p, s, x0, zero, zero, seed); });
    if (vb <= vs) ++wins;
  }
  const double dt = seconds_since(t0);
  return {wins >= 7 && dt < 600.0,
          fmt("BO-REP <= SOBA in %d/10 paired seeds (x0 (20, 20), sigma %.2g, eta %.0e vs eta_x "
              "%.0e, K %llu), %.1f s < 600 s",
              wins, sigma, b.eta, s.eta_x, static_cast<unsigned long long>(K), dt)};
}

Outcome smoothness_diagnostic() {
  std::vector<Vector> line;
  for (double t = -2.0; t <= 2.0; t += 1e-3) line.push_back(vec({t}));
  const LineFit e = fit_line(
      estimate_smoothness([](const Vector& x) { return vec({std::exp(x(0))}); }, line));
  const LineFit q =
      fit_line(estimate_smoothness([](const Vector& x) { return Vector(3.0 * x); }, line));

  const auto p = quartic_fixture(0.1);
  BorepConfig cfg;
  cfg.eta = 0.01;
  cfg.beta = 0.9;
  cfg.nu = 0.05;
  cfg.lower = {2, 3, 0.1, 0.5};
  cfg.K = 2000;
  RunOptions opts;
  opts.keep_path = true;
  const RunTrace t = run_borep(*p, cfg, vec({2.0, 2.0}), Vector::Zero(2), Vector::Zero(2), 1, opts);
  const LineFit w =
      fit_line(estimate_smoothness([&](const Vector& x) { return p->phi_grad(x); }, t.x_path));
  const bool ok = std::abs(e.slope - 1.0) <= 0.05 && std::abs(q.slope) <= 0.05 && w.slope > 0.0 &&
                  w.r2 > 0.5;
  return {ok, fmt("exp slope %.4f, quadratic slope %.2g, quartic slope %.3f r2 %.3f", e.slope,
                  q.slope, w.slope, w.r2)};
}

Outcome determinism_and_accounting() {
  // Same fixture as the tracking ensemble, so the theory N stays small.
  const auto p = quartic_fixture(NoiseScales{0.1, 1e-5, 0.1}, 3.0);
  TheoryRequest req;
  req.eps = 0.5;
  req.delta = 0.1;
  req.K_cap = 1000;
  const Vector x0 = vec({2.0, 2.0});
  const ScheduleReport s =
      build_theory_schedule(*p, req, x0, Vector::Zero(2), Vector::Zero(2));
  const RunTrace a = run_borep(*p, s.config, x0, Vector::Zero(2), Vector::Zero(2), 5);
  const RunTrace b = run_borep(*p, s.config, x0, Vector::Zero(2), Vector::Zero(2), 5);
  const bool same = trace_to_csv(a.records) == trace_to_csv(b.records);
  const std::uint64_t expect =
      s.config.epoch.total_steps() + (s.config.K / s.config.lower.I) * s.config.lower.N;

  BorepConfig pc = s.config;
  pc.lower = {3, 4, 0.1, 0.5};
  pc.K = 1000;
  const RunTrace c = run_borep(*p, pc, x0, Vector::Zero(2), Vector::Zero(2), 6);
  const std::uint64_t expect_c = pc.epoch.total_steps() + (pc.K / 3) * 4;
  return {same && a.lower_oracle_calls == expect && a.counts.grad_y_g == expect &&
              c.lower_oracle_calls == expect_c,
          fmt("identical CSVs: %s; lower calls %llu = %llu + %llu*%llu; practical %llu = %llu",
              same ? "yes" : "no", static_cast<unsigned long long>(a.lower_oracle_calls),
              static_cast<unsigned long long>(s.config.epoch.total_steps()),
              static_cast<unsigned long long>(s.config.K / s.config.lower.I),
              static_cast<unsigned long long>(s.config.lower.N),
              static_cast<unsigned long long>(c.lower_oracle_calls),
              static_cast<unsigned long long>(expect_c))};
}

}  // namespace

// Optional arguments pick criteria by number; none runs all nine.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"hypergradient exactness", hypergradient_exactness},
      {"estimator bias identity", estimator_bias},
      {"initialization refinement ensemble", init_refinement_ensemble},
      {"lower-level tracking ensemble", tracking_ensemble},
      {"schedule arithmetic", schedule_arithmetic},
      {"step-norm invariant", step_norm_invariant},
      {"convergence ordering vs SOBA", convergence_ordering},
      {"smoothness diagnostic", smoothness_diagnostic},
      {"determinism and oracle accounting", determinism_and_accounting},
  };
  int failures = 0;
  int i = 0;
  for (const auto& c : criteria) {
    ++i;
    if (!only.empty() && !only.count(i)) continue;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
