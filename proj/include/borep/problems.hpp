// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0
//
// Problem zoo: closed-form quadratic lower levels with quadratic or quartic
// upper levels, and logistic-regression hyper-cleaning / hyper-parameter
// problems on synthetic data.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borep/problem.hpp"

namespace borep {

// Per-component standard deviations of the additive Gaussian oracle noise:
// `f` for both upper gradients, `g1` for grad_y g, `g2` for the entries of
// the random matrices perturbing the two second-order products.
struct NoiseScales {
  double f = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

// f(x, y) = wx/2 |x - a|^2 + wy/2 |y - b|^2
struct QuadraticUpper {
  double wx = 1.0;
  double wy = 1.0;
  Vector a;
  Vector b;
};

// f(x, y) = scale/4 |x + W y - target|^4
struct QuarticUpper {
  Matrix W;
  Vector target;
  double scale = 1.0;
};

struct QuadraticSpec {
  Index dx = 1;
  Index dy = 1;
  // Eigenvalues of A; a single entry is repeated dy times.
  std::vector<double> spectrum{1.0};
  // Explicit lower Hessian, overriding `spectrum` when present.
  std::optional<Matrix> A;
  Matrix B;  // dy x dx coupling; empty means zero
  Vector c;  // empty means zero
  QuadraticUpper upper;
  NoiseScales noise;
  std::uint64_t seed = 0;
  // Bound on |grad_y f(x, y*(x))|. Estimated over |x| <= m_radius if absent.
  std::optional<double> M;
  double m_radius = 10.0;
};

/// g(x, y) = 1/2 y^T A y - y^T (B x + c) with A symmetric positive definite.
///
/// Under this sign convention grad_y g = A y - B x - c, the lower Hessian is
/// A and the mixed derivative grad_x grad_y g equals -B^T, so the
/// hypergradient is grad_x f(x, y*) + B^T z*(x).
class QuadraticBilevel final : public Problem {
 public:
  QuadraticBilevel(Matrix A, Matrix B, Vector c, QuadraticUpper upper, NoiseScales noise,
                   std::optional<double> M, double m_radius);
  QuadraticBilevel(Matrix A, Matrix B, Vector c, QuarticUpper upper, NoiseScales noise,
                   std::optional<double> M, double m_radius);

  std::string kind() const override { return quartic_ ? "quartic" : "quadratic"; }
  Dims dims() const override { return {B_.cols(), B_.rows()}; }
  const ProblemConstants& constants() const override { return constants_; }

  void grad_x_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_g(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_g_stream(const Vector& x, const Vector& y, GaussianSource& src,
                       Vector& out) const override;
  void hvp_yy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;
  void jvp_xy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;

  double f_value(const Vector& x, const Vector& y) const override;
  double g_value(const Vector& x, const Vector& y) const override;

  bool has_analytic() const override { return true; }
  Vector y_star(const Vector& x) const override;
  Vector z_star(const Vector& x) const override;
  Vector phi_grad(const Vector& x) const override;
  double phi_value(const Vector& x) const override;
  std::optional<double> phi_infimum() const override { return phi_inf_; }

  nlohmann::json describe() const override;

  // Noise-free partial gradients of f.
  Vector exact_grad_x_f(const Vector& x, const Vector& y) const;
  Vector exact_grad_y_f(const Vector& x, const Vector& y) const;

  void override_constants(const nlohmann::json& overrides);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Vector& c() const { return c_; }
  const NoiseScales& noise() const { return noise_; }
  bool is_quartic() const { return quartic_.has_value(); }
  const std::optional<QuadraticUpper>& quadratic_upper() const { return quadratic_; }
  const std::optional<QuarticUpper>& quartic_upper() const { return quartic_; }

 private:
  void init_lower();
  void init_constants(std::optional<double> M, double m_radius);
  void exact_grad_y_g(const Vector& x, const Vector& y, Vector& out) const;

  Matrix A_;
  Matrix B_;
  Vector c_;
  std::optional<QuadraticUpper> quadratic_;
  std::optional<QuarticUpper> quartic_;
  NoiseScales noise_;
  Eigen::LLT<Matrix> llt_;
  bool decoupled_ = false;  // B == 0
  ProblemConstants constants_;
  std::optional<double> phi_inf_;
};

std::shared_ptr<QuadraticBilevel> make_quadratic(const QuadraticSpec& spec);

/// Replaces the upper level of `p` by scale/4 |x + W y - target|^4 while
/// keeping its lower level and noise.
std::shared_ptr<QuadraticBilevel> make_quartic_upper(const QuadraticBilevel& p, const Matrix& W,
                                                     double scale, const Vector& target,
                                                     std::optional<double> M = std::nullopt,
                                                     double m_radius = 10.0);

// ---------------------------------------------------------------------------
// Synthetic classification data.

struct Dataset {
  Matrix x_train;            // n x d
  Vector label_train;        // +-1, possibly corrupted
  Vector clean_label_train;  // +-1
  Matrix x_val;
  Vector label_val;  // +-1, never corrupted
  double p_corrupt = 0.0;

  Index n_train() const { return x_train.rows(); }
  Index dim() const { return x_train.cols(); }
  double flip_rate() const;
};

/// Two Gaussian blobs (unit covariance) centred at +-class_sep/2 along a
/// random direction. Training labels are flipped with probability p_corrupt;
/// the validation split (n_val points, n when zero) is untouched.
Dataset gen_synthetic_dataset(Index n, Index d, double class_sep, double p_corrupt,
                              std::uint64_t seed, Index n_val = 0);

void write_dataset_csv(const Dataset& data, const std::string& path);

struct LogisticOptions {
  // Minibatch sizes (sampling with replacement). Zero means full batch,
  // which makes the corresponding oracles deterministic.
  Index batch_train = 0;
  Index batch_val = 0;
};

/// Data hyper-cleaning: x are per-sample logits (weights sigmoid(x_i)), y the
/// linear model. g = mean_i sigmoid(x_i) l_i(y) + c |y|^2 over the training
/// split, f = mean validation loss.
class HyperCleanProblem final : public Problem {
 public:
  HyperCleanProblem(Dataset data, double c, LogisticOptions opts);

  std::string kind() const override { return "hyperclean"; }
  Dims dims() const override { return {data_.n_train(), data_.dim()}; }
  const ProblemConstants& constants() const override { return constants_; }

  void grad_x_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_g(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void hvp_yy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;
  void jvp_xy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;

  double f_value(const Vector& x, const Vector& y) const override;
  double g_value(const Vector& x, const Vector& y) const override;

  Vector default_x0() const override { return Vector::Ones(dims().x); }
  nlohmann::json describe() const override;

  void override_constants(const nlohmann::json& overrides);

  const Dataset& data() const { return data_; }
  double regularization() const { return c_; }
  // Fraction of validation points classified correctly by the model y.
  double val_accuracy(const Vector& y) const;

 private:
  Dataset data_;
  double c_;
  LogisticOptions opts_;
  ProblemConstants constants_;
};

/// Regularization tuning: x is a scalar reparametrized so the effective
/// ridge weight is c0 + softplus(x) > 0. g = mean train loss + that weight/2
/// |y|^2, f = mean validation loss.
class HyperOptProblem final : public Problem {
 public:
  HyperOptProblem(Dataset data, double c0, LogisticOptions opts);

  std::string kind() const override { return "hyperopt"; }
  Dims dims() const override { return {1, data_.dim()}; }
  const ProblemConstants& constants() const override { return constants_; }

  void grad_x_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_f(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void grad_y_g(const Vector& x, const Vector& y, const RngToken& t, Vector& out) const override;
  void hvp_yy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;
  void jvp_xy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken& t,
                Vector& out) const override;

  double f_value(const Vector& x, const Vector& y) const override;
  double g_value(const Vector& x, const Vector& y) const override;

  nlohmann::json describe() const override;

  void override_constants(const nlohmann::json& overrides);

  double effective_regularizer(double x) const;
  double floor() const { return c0_; }

 private:
  Dataset data_;
  double c0_;
  LogisticOptions opts_;
  ProblemConstants constants_;
};

std::shared_ptr<HyperCleanProblem> make_hyperclean(Dataset data, double c,
                                                   LogisticOptions opts = {});
std::shared_ptr<HyperOptProblem> make_hyperopt(Dataset data, double c0,
                                               LogisticOptions opts = {});

double sigmoid(double t);
double softplus(double t);

/// Builds a problem from its JSON description:
/// {"kind": "quadratic|quartic|hyperclean|hyperopt", "dims": [dx, dy],
///  "noise": s | {"f": .., "g1": .., "g2": ..}, "seed": n, ...}.
/// A "constants" object overrides individual reported constants.
ProblemPtr problem_from_json(const nlohmann::json& j);

// Starting points named in a problem description ("x0", "y0"), or the
// problem defaults.
Vector initial_x(const Problem& p, const nlohmann::json& desc);
Vector initial_y(const Problem& p, const nlohmann::json& desc);

}  // namespace borep
