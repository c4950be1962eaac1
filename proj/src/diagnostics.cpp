// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "borep/parallel.hpp"
#include "salts.hpp"

namespace borep {

Vector finite_diff_grad(const ScalarFn& fn, const Vector& x, double h) {
  require(h > 0.0 && std::isfinite(h), "finite difference step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double up = fn(xp);
    xp[i] = xi - h;
    const double down = fn(xp);
    xp[i] = xi;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      fail(ErrorCode::kNonFinite, "function is not finite near the evaluation point");
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

Vector uniform_point(std::uint64_t seed, std::uint64_t counter, const Vector& center,
                     double radius) {
  CounterEngine eng(RngToken{seed, Stream::kAux, counter}, salt::kDirection + 1);
  std::uniform_real_distribution<double> u(-radius, radius);
  Vector x = center;
  for (Index i = 0; i < x.size(); ++i) x[i] += u(eng);
  return x;
}

void require_analytic(const Problem& p) {
  if (!p.has_analytic()) {
    fail(ErrorCode::kUnsupported, p.kind() + " problem has no closed-form lower solution");
  }
}

}  // namespace

HypergradCheck check_hypergrad(const Problem& p, int n_points, double tol, double h,
                               std::uint64_t seed, double radius, const Vector& center) {
  require_analytic(p);
  require(n_points >= 1, "check_hypergrad needs at least one point");
  require(tol >= 0.0, "tolerance must be >= 0");
  const Vector c = center.size() == 0 ? Vector::Zero(p.dims().x) : center;
  require_dim(c, p.dims().x, "center");
  HypergradCheck out;
  out.n_points = n_points;
  out.h = h;
  out.tol = tol;
  const ScalarFn phi = [&p](const Vector& x) { return p.phi_value(x); };
  for (int i = 0; i < n_points; ++i) {
    const Vector x = uniform_point(seed, static_cast<std::uint64_t>(i), c, radius);
    const Vector exact = p.phi_grad(x);
    const Vector fd = finite_diff_grad(phi, x, h);
    const double err = (fd - exact).norm() / std::max(exact.norm(), 1.0);
    out.errors.push_back(err);
    out.max_rel_error = std::max(out.max_rel_error, err);
  }
  out.pass = out.max_rel_error <= tol;
  return out;
}

SmoothnessScatter estimate_smoothness(const GradFn& grad, const std::vector<Vector>& trajectory) {
  require(trajectory.size() >= 2, "smoothness estimate needs at least two iterates");
  SmoothnessScatter s;
  Vector g_prev = grad(trajectory[0]);
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
    const Vector g_next = grad(trajectory[k + 1]);
    const double step = (trajectory[k + 1] - trajectory[k]).norm();
    if (step > kMinSecantStep) {
      s.points.push_back({g_prev.norm(), (g_next - g_prev).norm() / step});
    }
    g_prev = g_next;
  }
  return s;
}

LineFit fit_line(const SmoothnessScatter& s) {
  const auto n = static_cast<double>(s.points.size());
  require(s.points.size() >= 2, "line fit needs at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& pt : s.points) {
    mx += pt.grad_norm;
    my += pt.local_L;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& pt : s.points) {
    const double dx = pt.grad_norm - mx;
    const double dy = pt.local_L - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "line fit needs at least two distinct gradient norms");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return f;
}

LemmaId lemma_from_string(const std::string& name) {
  if (name == "init_refinement") return LemmaId::kInitRefinement;
  if (name == "periodic_tracking") return LemmaId::kPeriodicTracking;
  if (name == "bias_at_optimum") return LemmaId::kBiasAtOptimum;
  fail(ErrorCode::kInvalidArgument, "unknown lemma '" + name +
                                        "' (init_refinement, periodic_tracking, bias_at_optimum)");
}

const char* lemma_name(LemmaId id) {
  switch (id) {
    case LemmaId::kInitRefinement:
      return "init_refinement";
    case LemmaId::kPeriodicTracking:
      return "periodic_tracking";
    case LemmaId::kBiasAtOptimum:
      return "bias_at_optimum";
  }
  return "unknown";
}

double hypergrad_bias_bound(const ProblemConstants& c, double grad_phi_norm, double y_dist,
                            double z_dist) {
  const double mu = c.mu;
  const double ky = c.L_x0 + c.L_x1 * (grad_phi_norm + c.C_gxy * c.M / mu) + c.tau * c.M / mu;
  return ky * y_dist + c.C_gxy * z_dist;
}

namespace {

// Ratio of the bias estimate to its allowance for one trial.
double bias_trial(const Problem& p, const LemmaContext& ctx, std::uint64_t seed) {
  const Dims d = p.dims();
  const Vector x = uniform_point(seed, 0, ctx.x0, 1.0);
  const Vector ys = p.y_star(x);
  const Vector zs = p.z_star(x);
  Vector y = ys;
  Vector z = zs;
  if (ctx.y_offset > 0.0) y += ctx.y_offset * Vector::Unit(d.y, 0);
  if (ctx.z_offset > 0.0) z += ctx.z_offset * Vector::Unit(d.y, 0);
  const Vector grad = p.phi_grad(x);

  Vector sum = Vector::Zero(d.x);
  Vector sumsq = Vector::Zero(d.x);
  Vector gx(d.x), jv(d.x), est(d.x);
  for (std::uint64_t i = 0; i < ctx.mc_samples; ++i) {
    const RngToken tf{seed, Stream::kUpperF, i};
    const RngToken tg{seed, Stream::kUpperG, i};
    p.grad_x_f(x, y, tf, gx);
    p.jvp_xy_g(x, y, z, tg, jv);
    est = gx - jv;
    sum += est;
    sumsq += est.cwiseProduct(est);
  }
  const double n = static_cast<double>(ctx.mc_samples);
  const Vector mean = sum / n;
  const Vector var = (sumsq / n - mean.cwiseProduct(mean)).cwiseMax(0.0) * (n / std::max(n - 1.0, 1.0));
  const double stderr_norm = std::sqrt(var.sum() / n);
  const double allowance = hypergrad_bias_bound(p.constants(), grad.norm(), (y - ys).norm(),
                                                (z - zs).norm()) +
                           4.0 * stderr_norm;
  const double bias = (mean - grad).norm();
  if (allowance <= 0.0) return bias <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return bias / allowance;
}

}  // namespace

LemmaReport verify_lemma_ensemble(LemmaId lemma, const Problem& p, const BorepConfig& schedule,
                                  int n_seeds, const LemmaContext& ctx) {
  require_analytic(p);
  require(n_seeds >= 50, "lemma ensembles need at least 50 seeds");
  require(ctx.eps > 0.0 && ctx.K0 > 0.0, "eps and K0 must be positive");
  require(ctx.delta > 0.0 && ctx.delta < 1.0, "delta must lie in (0, 1)");
  const Dims d = p.dims();
  const Vector x0 = ctx.x0.size() ? ctx.x0 : p.default_x0();
  const Vector y_init = ctx.y_init.size() ? ctx.y_init : p.default_y0();
  const Vector z0 = ctx.z0.size() ? ctx.z0 : Vector::Zero(d.y);
  check_point(p, x0, y_init);
  require_dim(z0, d.y, "z0");
  LemmaContext local = ctx;
  local.x0 = x0;

  LemmaReport r;
  r.lemma = lemma;
  r.n_seeds = n_seeds;
  r.required = 1.0 - ctx.delta;
  r.ratios.assign(static_cast<std::size_t>(n_seeds), 0.0);

  switch (lemma) {
    case LemmaId::kInitRefinement: {
      require(!schedule.epoch.epochs.empty(), "init_refinement needs an epoch schedule");
      r.threshold = ctx.eps / (8.0 * ctx.K0);
      const Vector ys = p.y_star(x0);
      parallel_for(r.ratios.size(), ctx.threads, [&](std::size_t i) {
        const RngToken t{ctx.base_seed + i, Stream::kLowerInit, 0};
        const EpochSgdResult out = epoch_sgd(p, x0, y_init, schedule.epoch, t);
        r.ratios[i] = (out.y0 - ys).norm() / r.threshold;
      });
      break;
    }
    case LemmaId::kPeriodicTracking: {
      r.threshold = ctx.eps / (4.0 * ctx.K0);
      BorepConfig cfg = schedule;
      cfg.thin = 1;
      cfg.timing = false;
      parallel_for(r.ratios.size(), ctx.threads, [&](std::size_t i) {
        double worst = 0.0;
        RunOptions opts;
        opts.observers.push_back([&worst](const TraceRecord& rec) {
          if (rec.y_err) worst = std::max(worst, *rec.y_err);
        });
        run_borep(p, cfg, x0, y_init, z0, ctx.base_seed + i, opts);
        r.ratios[i] = worst / r.threshold;
      });
      break;
    }
    case LemmaId::kBiasAtOptimum: {
      require(ctx.mc_samples >= 2, "bias trials need at least two samples");
      parallel_for(r.ratios.size(), ctx.threads,
                   [&](std::size_t i) { r.ratios[i] = bias_trial(p, local, ctx.base_seed + i); });
      break;
    }
  }

  for (double ratio : r.ratios) r.successes += ratio <= 1.0 ? 1 : 0;
  r.frequency = static_cast<double>(r.successes) / static_cast<double>(n_seeds);
  r.pass = r.frequency >= r.required;
  std::vector<double> sorted = r.ratios;
  std::sort(sorted.begin(), sorted.end());
  r.max_ratio = sorted.back();
  r.median_ratio = sorted[sorted.size() / 2];
  return r;
}

nlohmann::json to_json(const HypergradCheck& c) {
  return {{"schema", 1},      {"n_points", c.n_points},
          {"h", c.h},         {"tol", c.tol},
          {"errors", c.errors}, {"max_rel_error", c.max_rel_error},
          {"pass", c.pass}};
}

nlohmann::json to_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

nlohmann::json to_json(const LemmaReport& r) {
  return {{"schema", 1},
          {"lemma", lemma_name(r.lemma)},
          {"n_seeds", r.n_seeds},
          {"successes", r.successes},
          {"frequency", r.frequency},
          {"required", r.required},
          {"pass", r.pass},
          {"threshold", r.threshold},
          {"max_ratio", r.max_ratio},
          {"median_ratio", r.median_ratio},
          {"ratios", r.ratios}};
}

}  // namespace borep
