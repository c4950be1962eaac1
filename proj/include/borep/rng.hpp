// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. Every random sample in a run is a pure
// function of (seed, stream, counter), so changing how often one consumer
// draws never shifts the samples seen by another.

#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

#include "borep/core.hpp"

namespace borep {

enum class Stream : std::uint64_t {
  kUpperF = 1,         // zeta_k: samples of F (upper-level gradients)
  kUpperG = 2,         // xi_k: samples of G used for the z step and the mixed product
  kLowerPeriodic = 3,  // periodic lower-level refreshes
  kLowerInit = 4,      // initialization refinement (Epoch-SGD)
  kAux = 5,            // diagnostics, fixtures, V0 estimation
};

std::string_view stream_name(Stream s);

struct RngToken {
  std::uint64_t seed = 0;
  Stream stream = Stream::kAux;
  std::uint64_t counter = 0;

  RngToken at(std::uint64_t c) const { return RngToken{seed, stream, c}; }
  friend bool operator==(const RngToken&, const RngToken&) = default;
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// UniformRandomBitGenerator over the counter-hashed sequence of one token.
/// `salt` separates independent sub-draws taken from the same token.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  CounterEngine(const RngToken& token, std::uint64_t salt)
      : key_(mix64(mix64(mix64(token.seed) ^ static_cast<std::uint64_t>(token.stream)) ^
                   token.counter) ^
             mix64(salt)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++index_) * 0xd1342543de82ef95ULL); }

 private:
  std::uint64_t key_;
  std::uint64_t index_ = 0;
};

class GaussianSource {
 public:
  GaussianSource(const RngToken& token, std::uint64_t salt) : engine_(token, salt) {}
  double operator()() { return normal_(engine_); }
  CounterEngine& engine() { return engine_; }

 private:
  CounterEngine engine_;
  std::normal_distribution<double> normal_;
};

// out += sigma * N(0, I). No draws are taken when sigma == 0.
void add_gaussian(GaussianSource& src, double sigma, Vector& out);

}  // namespace borep
