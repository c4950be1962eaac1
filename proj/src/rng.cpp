// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/rng.hpp"

namespace borep {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::kUpperF:
      return "upper_f";
    case Stream::kUpperG:
      return "upper_g";
    case Stream::kLowerPeriodic:
      return "lower_periodic";
    case Stream::kLowerInit:
      return "lower_init";
    case Stream::kAux:
      return "aux";
  }
  return "unknown";
}

void add_gaussian(GaussianSource& src, double sigma, Vector& out) {
  if (sigma == 0.0) return;
  for (Index i = 0; i < out.size(); ++i) out[i] += sigma * src();
}

}  // namespace borep
