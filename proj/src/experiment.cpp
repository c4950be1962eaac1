// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "borep/parallel.hpp"

namespace borep {

namespace {

struct SeedResult {
  std::uint64_t seed = 0;
  nlohmann::json summary;
  std::optional<double> final_grad_phi;
  std::optional<double> final_f;
};

nlohmann::json mean_std(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
  return {{"mean", mean}, {"std", std::sqrt(var)}, {"n", v.size()}};
}

}  // namespace

nlohmann::json run_sweep(const Problem& p, const RunSpec& spec, std::uint64_t seed_lo,
                         std::uint64_t seed_hi, const std::string& out_dir, unsigned threads) {
  require(seed_hi >= seed_lo, "seed range must be nonempty");
  require(seed_hi - seed_lo < 1000000, "seed range is too large");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kRuntime, "cannot create " + out_dir + ": " + ec.message());

  const std::size_t n = static_cast<std::size_t>(seed_hi - seed_lo + 1);
  std::vector<SeedResult> results(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t seed = seed_lo + i;
    RunTrace tr = execute(p, spec, seed);
    write_trace(tr, (fs::path(out_dir) / ("seed_" + std::to_string(seed) + ".csv")).string());
    SeedResult& r = results[i];
    r.seed = seed;
    r.summary = trace_summary(tr);
    if (!tr.records.empty()) {
      r.final_grad_phi = tr.records.back().grad_phi_exact;
      r.final_f = tr.records.back().f_est;
    }
  });

  // Aggregation happens on this thread only.
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> grads;
  std::vector<double> fs_;
  for (const auto& r : results) {
    nlohmann::json j = r.summary;
    j["seed"] = r.seed;
    j.erase("x_final");
    runs.push_back(j);
    if (r.final_grad_phi) grads.push_back(*r.final_grad_phi);
    if (r.final_f) fs_.push_back(*r.final_f);
  }
  nlohmann::json summary = {{"schema", 1},
                            {"algo", algo_name(spec.algo)},
                            {"seed_lo", seed_lo},
                            {"seed_hi", seed_hi},
                            {"runs", runs},
                            {"final_grad_phi", mean_std(grads)},
                            {"final_f", mean_std(fs_)}};
  const fs::path path = fs::path(out_dir) / "summary.json";
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kRuntime, "cannot write " + path.string());
  out << summary.dump(2) << '\n';
  return summary;
}

}  // namespace borep
