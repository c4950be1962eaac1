// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/core.hpp"

#include <cmath>
#include <limits>

namespace borep {

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

void require_dim(const Vector& v, Index expected, const char* name) {
  if (v.size() != expected) {
    fail(ErrorCode::kDimensionMismatch, std::string(name) + ": expected dimension " +
                                            std::to_string(expected) + ", got " +
                                            std::to_string(v.size()));
  }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

void ProblemConstants::validate() const {
  const double all[] = {mu,   L,    C_gxy, tau,      rho,      M,        L_x0,
                        L_x1, L_y0, L_y1,  sigma_f1, sigma_f2, sigma_g1, sigma_g2};
  for (double v : all) {
    require(std::isfinite(v), "problem constants must be finite");
    require(v >= 0.0, "problem constants must be nonnegative");
  }
  require(mu > 0.0, "strong convexity modulus mu must be positive");
  require(L >= mu, "smoothness L must be at least mu");
}

double coupling_scale(const ProblemConstants& c) {
  require(c.mu > 0.0, "mu must be positive");
  const double ratio = c.C_gxy / c.mu;
  return std::sqrt(1.0 + ratio * ratio);
}

DerivedConstants derive_k0_k1(const ProblemConstants& c) {
  const double scale = coupling_scale(c);
  const double mu = c.mu;
  const double ratio = c.C_gxy / mu;
  DerivedConstants d;
  d.K0 = scale * (c.L_x0 + c.L_x1 * c.C_gxy * c.M / mu + ratio * (c.L_y0 + c.L_y1 * c.M) +
                  c.M * (c.C_gxy * c.rho + c.tau * mu) / (mu * mu));
  d.K1 = scale * c.L_x1;
  return d;
}

double derive_lz_star(const ProblemConstants& c) {
  const double scale = coupling_scale(c);
  const double mu = c.mu;
  return scale * (c.rho * c.M / (mu * mu) + (c.L_y0 + c.L_y1 * c.M) / mu);
}

DerivedConstants derive_constants(const ProblemConstants& c) {
  DerivedConstants d = derive_k0_k1(c);
  d.L_zstar = derive_lz_star(c);
  return d;
}

double relaxed_smoothness_radius(const ProblemConstants& c) {
  const double scale = coupling_scale(c);
  const double l1 = c.L_x1 * c.L_x1 + c.L_y1 * c.L_y1;
  if (l1 == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(2.0 * scale * scale * l1);
}

void to_json(nlohmann::json& j, const ProblemConstants& c) {
  j = nlohmann::json{{"mu", c.mu},
                     {"L", c.L},
                     {"C_gxy", c.C_gxy},
                     {"tau", c.tau},
                     {"rho", c.rho},
                     {"M", c.M},
                     {"L_x0", c.L_x0},
                     {"L_x1", c.L_x1},
                     {"L_y0", c.L_y0},
                     {"L_y1", c.L_y1},
                     {"sigma_f1", c.sigma_f1},
                     {"sigma_f2", c.sigma_f2},
                     {"sigma_g1", c.sigma_g1},
                     {"sigma_g2", c.sigma_g2},
                     {"M_is_estimate", c.M_is_estimate}};
}

void from_json(const nlohmann::json& j, ProblemConstants& c) {
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  get("mu", c.mu);
  get("L", c.L);
  get("C_gxy", c.C_gxy);
  get("tau", c.tau);
  get("rho", c.rho);
  get("M", c.M);
  get("L_x0", c.L_x0);
  get("L_x1", c.L_x1);
  get("L_y0", c.L_y0);
  get("L_y1", c.L_y1);
  get("sigma_f1", c.sigma_f1);
  get("sigma_f2", c.sigma_f2);
  get("sigma_g1", c.sigma_g1);
  get("sigma_g2", c.sigma_g2);
  if (j.contains("M_is_estimate")) c.M_is_estimate = j.at("M_is_estimate").get<bool>();
}

void to_json(nlohmann::json& j, const DerivedConstants& d) {
  j = nlohmann::json{{"K0", d.K0}, {"K1", d.K1}, {"L_zstar", d.L_zstar}};
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  require(j.is_array(), "expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  require(v.allFinite(), "vector entries must be finite");
  return v;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  require(j.is_array() && !j.empty() && j[0].is_array(), "expected a JSON array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Index>(row.size()) == cols, "ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  require(m.allFinite(), "matrix entries must be finite");
  return m;
}

}  // namespace borep
