// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-loop comparison methods sharing the BO-REP oracle streams and trace
// format: SOBA (plain SGD on x, y, z) and MA-SOBA (moving-average x
// direction).

#pragma once

#include <cstdint>

#include <json.hpp>

#include "borep/solver.hpp"

namespace borep {

struct SobaConfig {
  double eta_x = 1e-2;  // zero freezes x
  double eta_y = 1e-1;
  double eta_z = 1e-1;
  double beta = 0.0;  // MA-SOBA only
  std::uint64_t K = 0;
  std::uint64_t thin = 1;
  bool timing = false;

  void validate() const;
};

/// Per iteration, all from the current (x, y, z):
///   y <- y - eta_y grad_y G
///   z <- z - eta_z (hvp(z) - grad_y F)
///   x <- x - eta_x (grad_x F - jvp(z))
/// The lower step draws Stream::kLowerPeriodic at counter k; the other
/// draws match BO-REP's so equal K means equal upper and z oracle samples.
RunTrace run_soba(const Problem& p, const SobaConfig& cfg, const Vector& x0, const Vector& y0,
                  const Vector& z0, std::uint64_t seed, const RunOptions& opts = {});

/// As run_soba with x <- x - eta_x m, m <- beta m + (1 - beta) estimate.
RunTrace run_ma_soba(const Problem& p, const SobaConfig& cfg, const Vector& x0, const Vector& y0,
                     const Vector& z0, std::uint64_t seed, const RunOptions& opts = {});

nlohmann::json to_json(const SobaConfig& c, bool moving_average);

}  // namespace borep
