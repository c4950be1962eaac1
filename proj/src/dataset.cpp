// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "borep/problems.hpp"
#include "salts.hpp"

namespace borep {

double Dataset::flip_rate() const {
  if (n_train() == 0) return 0.0;
  return (label_train.array() != clean_label_train.array()).cast<double>().mean();
}

namespace {

// Each point draws from its own counter so the first n points do not depend
// on how many are requested in total.
void fill_split(Matrix& x, Vector& label, const Vector& dir, double class_sep, std::uint64_t seed,
                std::uint64_t offset) {
  for (Index i = 0; i < x.rows(); ++i) {
    RngToken t{seed, Stream::kAux, offset + static_cast<std::uint64_t>(i)};
    GaussianSource src(t, salt::kDataset);
    std::bernoulli_distribution coin(0.5);
    const double s = coin(src.engine()) ? 1.0 : -1.0;
    label[i] = s;
    for (Index j = 0; j < x.cols(); ++j) x(i, j) = src() + 0.5 * s * class_sep * dir[j];
  }
}

}  // namespace

Dataset gen_synthetic_dataset(Index n, Index d, double class_sep, double p_corrupt,
                              std::uint64_t seed, Index n_val) {
  require(n >= 1 && d >= 1, "dataset needs n >= 1 and d >= 1");
  require(n_val >= 0, "n_val must be nonnegative");
  require(p_corrupt >= 0.0 && p_corrupt < 1.0, "p_corrupt must lie in [0, 1)");
  require(std::isfinite(class_sep) && class_sep >= 0.0, "class_sep must be finite and >= 0");
  if (n_val == 0) n_val = n;

  Vector dir(d);
  {
    GaussianSource src(RngToken{seed, Stream::kAux, 0}, salt::kDirection);
    for (Index j = 0; j < d; ++j) dir[j] = src();
    const double nrm = dir.norm();
    if (nrm > 0.0) dir /= nrm;
    else dir = Vector::Unit(d, 0);
  }

  Dataset data;
  data.p_corrupt = p_corrupt;
  data.x_train.resize(n, d);
  data.clean_label_train.resize(n);
  data.x_val.resize(n_val, d);
  data.label_val.resize(n_val);
  constexpr std::uint64_t kValOffset = 1ULL << 40;
  fill_split(data.x_train, data.clean_label_train, dir, class_sep, seed, 1);
  fill_split(data.x_val, data.label_val, dir, class_sep, seed, kValOffset);

  data.label_train = data.clean_label_train;
  if (p_corrupt > 0.0) {
    for (Index i = 0; i < n; ++i) {
      CounterEngine eng(RngToken{seed, Stream::kAux, 1 + static_cast<std::uint64_t>(i)},
                        salt::kDataset + 1);
      std::bernoulli_distribution flip(p_corrupt);
      if (flip(eng)) data.label_train[i] = -data.label_train[i];
    }
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kRuntime, "cannot open " + path + " for writing");
  out << "split,i,label,clean_label";
  for (Index j = 0; j < data.dim(); ++j) out << ",x" << j;
  out << '\n';
  char buf[32];
  auto row = [&](const char* split, Index i, double label, double clean, const Matrix& x) {
    out << split << ',' << i << ',' << label << ',' << clean;
    for (Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      out << ',' << buf;
    }
    out << '\n';
  };
  for (Index i = 0; i < data.n_train(); ++i) {
    row("train", i, data.label_train[i], data.clean_label_train[i], data.x_train);
  }
  for (Index i = 0; i < data.x_val.rows(); ++i) {
    row("val", i, data.label_val[i], data.label_val[i], data.x_val);
  }
  if (!out) fail(ErrorCode::kRuntime, "failed writing " + path);
}

}  // namespace borep
