// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/baselines.hpp"

#include <cmath>

#include "recorder.hpp"

namespace borep {

void SobaConfig::validate() const {
  require(eta_x >= 0.0 && std::isfinite(eta_x), "eta_x must be >= 0");
  require(eta_y > 0.0 && std::isfinite(eta_y), "eta_y must be positive");
  require(eta_z > 0.0 && std::isfinite(eta_z), "eta_z must be positive");
  require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
}

namespace {

RunTrace run_single_loop(const Problem& p, const SobaConfig& cfg, const Vector& x0,
                         const Vector& y0, const Vector& z0, std::uint64_t seed,
                         const RunOptions& opts, bool moving_average) {
  cfg.validate();
  check_point(p, x0, y0);
  require_dim(z0, p.dims().y, "z0");

  RunTrace tr;
  tr.header = {{"schema", 1},
               {"algo", moving_average ? "ma-soba" : "soba"},
               {"seed", seed},
               {"config", to_json(cfg, moving_average)},
               {"problem", p.describe()}};
  detail::Recorder rec(p, tr, opts, cfg.K, cfg.thin, cfg.timing);

  OracleCounts counts;
  Vector x = x0;
  Vector y = y0;
  Vector z = z0;
  Vector m = Vector::Zero(x.size());
  rec.record(0, x, y, z, counts, nullptr, &m, false);

  const Index dx = x.size();
  const Index dy = y.size();
  Vector gx(dx), jv(dx), ghat(dx), gy(dy), hv(dy), gyg(dy);
  for (std::uint64_t k = 0; k < cfg.K; ++k) {
    const RngToken tf{seed, Stream::kUpperF, k};
    const RngToken tg{seed, Stream::kUpperG, k};
    const RngToken tl{seed, Stream::kLowerPeriodic, k};
    p.grad_y_g(x, y, tl, gyg);
    p.grad_x_f(x, y, tf, gx);
    p.grad_y_f(x, y, tf, gy);
    p.hvp_yy_g(x, y, z, tg, hv);
    p.jvp_xy_g(x, y, z, tg, jv);
    counts.grad_y_g += 1;
    counts.grad_x_f += 1;
    counts.grad_y_f += 1;
    counts.hvp += 1;
    counts.jvp += 1;

    ghat = gx - jv;
    y.noalias() -= cfg.eta_y * gyg;
    z.noalias() -= cfg.eta_z * (hv - gy);
    if (moving_average) {
      m = cfg.beta * m + (1.0 - cfg.beta) * ghat;
      x.noalias() -= cfg.eta_x * m;
    } else {
      x.noalias() -= cfg.eta_x * ghat;
    }
    detail::check_finite_state(k, x, y, z, m);
    // SOBA's direction is the estimate itself, reported in the m column.
    rec.record(k + 1, x, y, z, counts, &ghat, moving_average ? &m : &ghat, false);
  }

  tr.counts = counts;
  tr.lower_oracle_calls = counts.grad_y_g;
  tr.x_final = x;
  tr.y_final = y;
  tr.z_final = z;
  tr.header["summary"] = trace_summary(tr);
  return tr;
}

}  // namespace

RunTrace run_soba(const Problem& p, const SobaConfig& cfg, const Vector& x0, const Vector& y0,
                  const Vector& z0, std::uint64_t seed, const RunOptions& opts) {
  return run_single_loop(p, cfg, x0, y0, z0, seed, opts, false);
}

RunTrace run_ma_soba(const Problem& p, const SobaConfig& cfg, const Vector& x0, const Vector& y0,
                     const Vector& z0, std::uint64_t seed, const RunOptions& opts) {
  return run_single_loop(p, cfg, x0, y0, z0, seed, opts, true);
}

nlohmann::json to_json(const SobaConfig& c, bool moving_average) {
  nlohmann::json j = {{"schema", 1},
                      {"algo", moving_average ? "ma-soba" : "soba"},
                      {"eta_x", c.eta_x},
                      {"eta_y", c.eta_y},
                      {"eta_z", c.eta_z},
                      {"K", c.K},
                      {"thin", c.thin},
                      {"timing", c.timing}};
  if (moving_average) j["beta"] = c.beta;
  return j;
}

}  // namespace borep
