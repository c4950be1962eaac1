// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-iteration run records and their CSV form.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borep/core.hpp"
#include "borep/problem.hpp"

namespace borep {

/// State after k upper iterations. Record 0 describes the starting point
/// (after any lower initialization), record k the result of iteration k-1.
struct TraceRecord {
  std::uint64_t k = 0;
  std::optional<double> grad_phi_exact;  // |grad Phi(x_k)| when known in closed form
  std::optional<double> grad_est_norm;   // |hypergradient estimate| used for the step
  std::optional<double> m_norm;
  std::optional<double> f_est;  // f(x_k, y_k)
  std::optional<double> y_err;  // |y_k - y*(x_k)|
  std::optional<double> z_err;  // |z_k - z*(x_k)|
  std::uint64_t oracle_f = 0;   // cumulative upper-gradient oracle calls
  std::uint64_t oracle_g = 0;   // cumulative lower-level oracle calls of all kinds
  bool degenerate_step = false;
  std::optional<double> wall_ms;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using TraceObserver = std::function<void(const TraceRecord&)>;

struct RunTrace {
  nlohmann::json header;
  std::vector<TraceRecord> records;
  OracleCounts counts;
  std::uint64_t init_oracle_calls = 0;   // Epoch-SGD refinement
  std::uint64_t lower_oracle_calls = 0;  // refinement plus periodic updates
  std::uint64_t degenerate_steps = 0;
  Vector x_final;
  Vector y_final;
  Vector z_final;
  // Every upper iterate x_0 .. x_K, filled only when requested.
  std::vector<Vector> x_path;
};

inline constexpr const char* kTraceColumns =
    "k,grad_phi_exact,grad_est_norm,m_norm,f_est,y_err,z_err,oracle_f,oracle_g,degenerate_step,"
    "wall_ms";

std::string trace_to_csv(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> trace_from_csv(const std::string& text);

// Writes the CSV to `path` and the header JSON to `path` + ".json".
void write_trace(const RunTrace& trace, const std::string& path);

// Mean of grad_phi_exact over the last `fraction` of the records (at least one).
std::optional<double> final_window_mean(const std::vector<TraceRecord>& records, double fraction);

nlohmann::json trace_summary(const RunTrace& trace);

}  // namespace borep
