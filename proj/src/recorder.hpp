// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>

#include "borep/solver.hpp"

namespace borep::detail {

// Collects the thinned records of one run and forwards them to observers.
class Recorder {
 public:
  Recorder(const Problem& p, RunTrace& trace, const RunOptions& opts, std::uint64_t K,
           std::uint64_t thin, bool timing)
      : p_(p), trace_(trace), opts_(opts), K_(K), thin_(thin == 0 ? 1 : thin), timing_(timing),
        start_(std::chrono::steady_clock::now()) {}

  bool wants(std::uint64_t k) const { return k % thin_ == 0 || k == K_; }

  // Called with the state after k iterations. `ghat`/`m` are null at k = 0
  // for the momentum-free solvers.
  void record(std::uint64_t k, const Vector& x, const Vector& y, const Vector& z,
              const OracleCounts& counts, const Vector* ghat, const Vector* m, bool degenerate) {
    if (opts_.keep_path) trace_.x_path.push_back(x);
    if (!wants(k)) return;
    TraceRecord r = make_record(p_, k, x, y, z, counts);
    if (ghat) r.grad_est_norm = ghat->norm();
    if (m) r.m_norm = m->norm();
    r.degenerate_step = degenerate;
    if (timing_) {
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start_)
                      .count();
    }
    for (const auto& obs : opts_.observers) obs(r);
    trace_.records.push_back(std::move(r));
  }

 private:
  const Problem& p_;
  RunTrace& trace_;
  const RunOptions& opts_;
  std::uint64_t K_;
  std::uint64_t thin_;
  bool timing_;
  std::chrono::steady_clock::time_point start_;
};

inline void check_finite_state(std::uint64_t k, const Vector& x, const Vector& y, const Vector& z,
                               const Vector& m) {
  if (x.allFinite() && y.allFinite() && z.allFinite() && m.allFinite()) return;
  fail(ErrorCode::kNonFinite, "state became non-finite at iteration " + std::to_string(k));
}

}  // namespace borep::detail
