// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "borep/config.hpp"

namespace borep {

/// Runs seeds seed_lo..seed_hi (inclusive) on a bounded worker pool, writing
/// `out_dir`/seed_<n>.csv with its JSON sidecar per run and
/// `out_dir`/summary.json. Returns the summary: per-seed finals and the
/// mean and standard deviation of the final stationarity |grad Phi| (when
/// known) and of f.
nlohmann::json run_sweep(const Problem& p, const RunSpec& spec, std::uint64_t seed_lo,
                         std::uint64_t seed_hi, const std::string& out_dir, unsigned threads);

}  // namespace borep
