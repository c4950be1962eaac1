// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

// Sub-draw separators for samples taken from one token.
namespace borep::salt {

inline constexpr std::uint64_t kGradXF = 11;
inline constexpr std::uint64_t kGradYF = 12;
inline constexpr std::uint64_t kGradYG = 21;
inline constexpr std::uint64_t kHvp = 22;
inline constexpr std::uint64_t kJvp = 23;
inline constexpr std::uint64_t kEpochSgd = 24;
inline constexpr std::uint64_t kBatchVal = 31;
inline constexpr std::uint64_t kBatchTrain = 32;
inline constexpr std::uint64_t kFixtureA = 41;
inline constexpr std::uint64_t kFixtureB = 42;
inline constexpr std::uint64_t kDataset = 51;
inline constexpr std::uint64_t kDirection = 61;

}  // namespace borep::salt
