// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace borep {

// Worker count: BOREP_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
unsigned default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 means
/// default_threads()). Indices are handed out in order; the first exception
/// thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace borep
