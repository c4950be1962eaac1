// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "borep/problems.hpp"
#include "salts.hpp"

namespace borep {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

namespace {

// max |sigma''(t)| = 1/(6 sqrt 3).
constexpr double kSigmoidCurvature = 0.09622504486493763;

// Logistic loss log(1 + exp(-margin)).
double logistic_loss(double margin) { return softplus(-margin); }

// Calls fn(i, weight) for the samples of one oracle draw. Full batch visits
// every row with weight 1/n; a minibatch of size b draws b rows uniformly
// with replacement, each with weight 1/b. The batch depends on the token and
// `salt` only, so every oracle fed the same token sees the same rows.
template <typename Fn>
void for_each_sample(Index n, Index batch, const RngToken& t, std::uint64_t salt, Fn&& fn) {
  if (batch <= 0 || batch >= n) {
    const double w = 1.0 / static_cast<double>(n);
    for (Index i = 0; i < n; ++i) fn(i, w);
    return;
  }
  CounterEngine eng(t, salt);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  const double w = 1.0 / static_cast<double>(batch);
  for (Index k = 0; k < batch; ++k) fn(pick(eng), w);
}

double max_row_norm(const Matrix& x) { return x.rowwise().norm().maxCoeff(); }

// Largest eigenvalue of X^T X / n.
double gram_bound(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x / static_cast<double>(x.rows()),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

// Mean logistic gradient over the sampled rows of (x, label).
void loss_grad(const Matrix& x, const Vector& label, const Vector& w, Index batch,
               const RngToken& t, std::uint64_t salt, Vector& out) {
  out.setZero(x.cols());
  for_each_sample(x.rows(), batch, t, salt, [&](Index i, double wt) {
    const double s = label[i];
    const double m = s * x.row(i).dot(w);
    out.noalias() += (-wt * s * sigmoid(-m)) * x.row(i).transpose();
  });
}

double mean_loss(const Matrix& x, const Vector& label, const Vector& w) {
  const Vector margin = (x * w).cwiseProduct(label);
  double total = 0.0;
  for (Index i = 0; i < margin.size(); ++i) total += logistic_loss(margin[i]);
  return total / static_cast<double>(margin.size());
}

void check_dataset(const Dataset& d) {
  require(d.n_train() > 0 && d.dim() > 0, "dataset must be nonempty");
  require(d.x_val.rows() > 0 && d.x_val.cols() == d.dim(), "validation split must be nonempty");
  require(d.label_train.size() == d.n_train() && d.label_val.size() == d.x_val.rows(),
          "labels must match the feature rows");
  require(d.x_train.allFinite() && d.x_val.allFinite(), "dataset features must be finite");
}

// Noise bound of a minibatch mean of vectors bounded by r: zero in full batch.
double batch_sigma(double r, Index n, Index batch) {
  if (batch <= 0 || batch >= n) return 0.0;
  return r / std::sqrt(static_cast<double>(batch));
}

}  // namespace

// ---------------------------------------------------------------------------

HyperCleanProblem::HyperCleanProblem(Dataset data, double c, LogisticOptions opts)
    : data_(std::move(data)), c_(c), opts_(opts) {
  check_dataset(data_);
  require(c_ > 0.0 && std::isfinite(c_), "regularization c must be positive");
  require(opts_.batch_train >= 0 && opts_.batch_val >= 0, "batch sizes must be >= 0");
  const double n = static_cast<double>(data_.n_train());
  const double r_tr = max_row_norm(data_.x_train);
  const double r_val = max_row_norm(data_.x_val);
  const double frob = data_.x_train.norm();
  ProblemConstants k;
  k.mu = 2.0 * c_;
  k.L = 2.0 * c_ + 0.25 * gram_bound(data_.x_train);
  // Column i of the mixed Jacobian is sigma'(x_i) grad l_i / n, sigma' <= 1/4.
  k.C_gxy = 0.25 * frob / n;
  k.tau = (kSigmoidCurvature * r_tr + r_tr * r_tr / 16.0) / std::sqrt(n);
  k.rho = kSigmoidCurvature * r_tr * r_tr * r_tr;
  k.M = r_val;
  k.L_y0 = 0.25 * gram_bound(data_.x_val);
  k.sigma_f2 = batch_sigma(2.0 * r_val, data_.x_val.rows(), opts_.batch_val);
  k.sigma_g1 = batch_sigma(2.0 * r_tr, data_.n_train(), opts_.batch_train);
  k.sigma_g2 = batch_sigma(0.5 * r_tr * r_tr, data_.n_train(), opts_.batch_train);
  constants_ = k;
}

void HyperCleanProblem::override_constants(const nlohmann::json& overrides) {
  from_json(overrides, constants_);
}

void HyperCleanProblem::grad_x_f(const Vector&, const Vector&, const RngToken&, Vector& out) const {
  out.setZero(dims().x);
}

void HyperCleanProblem::grad_y_f(const Vector&, const Vector& y, const RngToken& t,
                                 Vector& out) const {
  loss_grad(data_.x_val, data_.label_val, y, opts_.batch_val, t, salt::kBatchVal, out);
}

void HyperCleanProblem::grad_y_g(const Vector& x, const Vector& y, const RngToken& t,
                                 Vector& out) const {
  out = 2.0 * c_ * y;
  const Matrix& a = data_.x_train;
  for_each_sample(a.rows(), opts_.batch_train, t, salt::kBatchTrain, [&](Index i, double wt) {
    const double s = data_.label_train[i];
    const double m = s * a.row(i).dot(y);
    out.noalias() += (-wt * sigmoid(x[i]) * s * sigmoid(-m)) * a.row(i).transpose();
  });
}

void HyperCleanProblem::hvp_yy_g(const Vector& x, const Vector& y, const Vector& v,
                                 const RngToken& t, Vector& out) const {
  out = 2.0 * c_ * v;
  const Matrix& a = data_.x_train;
  for_each_sample(a.rows(), opts_.batch_train, t, salt::kBatchTrain, [&](Index i, double wt) {
    const double m = data_.label_train[i] * a.row(i).dot(y);
    const double h = sigmoid(m) * sigmoid(-m);
    out.noalias() += (wt * sigmoid(x[i]) * h * a.row(i).dot(v)) * a.row(i).transpose();
  });
}

void HyperCleanProblem::jvp_xy_g(const Vector& x, const Vector& y, const Vector& v,
                                 const RngToken& t, Vector& out) const {
  out.setZero(dims().x);
  const Matrix& a = data_.x_train;
  for_each_sample(a.rows(), opts_.batch_train, t, salt::kBatchTrain, [&](Index i, double wt) {
    const double s = data_.label_train[i];
    const double m = s * a.row(i).dot(y);
    const double dsig = sigmoid(x[i]) * sigmoid(-x[i]);
    out[i] += wt * dsig * (-s * sigmoid(-m)) * a.row(i).dot(v);
  });
}

double HyperCleanProblem::f_value(const Vector&, const Vector& y) const {
  return mean_loss(data_.x_val, data_.label_val, y);
}

double HyperCleanProblem::g_value(const Vector& x, const Vector& y) const {
  const Vector margin = (data_.x_train * y).cwiseProduct(data_.label_train);
  double total = 0.0;
  for (Index i = 0; i < margin.size(); ++i) total += sigmoid(x[i]) * logistic_loss(margin[i]);
  return total / static_cast<double>(margin.size()) + c_ * y.squaredNorm();
}

double HyperCleanProblem::val_accuracy(const Vector& y) const {
  const Vector margin = (data_.x_val * y).cwiseProduct(data_.label_val);
  return (margin.array() > 0.0).cast<double>().mean();
}

nlohmann::json HyperCleanProblem::describe() const {
  nlohmann::json j;
  j["kind"] = kind();
  j["dims"] = {dims().x, dims().y};
  j["n_train"] = data_.n_train();
  j["n_val"] = data_.x_val.rows();
  j["p_corrupt"] = data_.p_corrupt;
  j["flip_rate"] = data_.flip_rate();
  j["c"] = c_;
  j["batch"] = {{"train", opts_.batch_train}, {"val", opts_.batch_val}};
  j["constants"] = constants_;
  j["derived"] = derive_constants(constants_);
  return j;
}

std::shared_ptr<HyperCleanProblem> make_hyperclean(Dataset data, double c, LogisticOptions opts) {
  return std::make_shared<HyperCleanProblem>(std::move(data), c, opts);
}

// ---------------------------------------------------------------------------

HyperOptProblem::HyperOptProblem(Dataset data, double c0, LogisticOptions opts)
    : data_(std::move(data)), c0_(c0), opts_(opts) {
  check_dataset(data_);
  require(c0_ > 0.0 && std::isfinite(c0_), "regularizer floor c0 must be positive");
  require(opts_.batch_train >= 0 && opts_.batch_val >= 0, "batch sizes must be >= 0");
  const double r_tr = max_row_norm(data_.x_train);
  const double r_val = max_row_norm(data_.x_val);
  // The regularizer is unbounded in x; L and the coupling are reported on
  // |x| <= kBound, where the lower solution satisfies |w*| <= r_tr / c0.
  constexpr double kBound = 10.0;
  const double w_bound = r_tr / c0_;
  ProblemConstants k;
  k.mu = c0_;
  k.L = c0_ + softplus(kBound) + 0.25 * gram_bound(data_.x_train);
  k.C_gxy = w_bound;
  k.tau = 1.0 + 0.25 * w_bound;
  k.rho = kSigmoidCurvature * r_tr * r_tr * r_tr;
  k.M = r_val;
  k.L_y0 = 0.25 * gram_bound(data_.x_val);
  k.M_is_estimate = true;
  k.sigma_f2 = batch_sigma(2.0 * r_val, data_.x_val.rows(), opts_.batch_val);
  k.sigma_g1 = batch_sigma(2.0 * r_tr, data_.n_train(), opts_.batch_train);
  k.sigma_g2 = batch_sigma(0.5 * r_tr * r_tr, data_.n_train(), opts_.batch_train);
  constants_ = k;
}

void HyperOptProblem::override_constants(const nlohmann::json& overrides) {
  from_json(overrides, constants_);
}

double HyperOptProblem::effective_regularizer(double x) const { return c0_ + softplus(x); }

void HyperOptProblem::grad_x_f(const Vector&, const Vector&, const RngToken&, Vector& out) const {
  out.setZero(1);
}

void HyperOptProblem::grad_y_f(const Vector&, const Vector& y, const RngToken& t,
                               Vector& out) const {
  loss_grad(data_.x_val, data_.label_val, y, opts_.batch_val, t, salt::kBatchVal, out);
}

void HyperOptProblem::grad_y_g(const Vector& x, const Vector& y, const RngToken& t,
                               Vector& out) const {
  loss_grad(data_.x_train, data_.label_train, y, opts_.batch_train, t, salt::kBatchTrain, out);
  out.noalias() += effective_regularizer(x[0]) * y;
}

void HyperOptProblem::hvp_yy_g(const Vector& x, const Vector& y, const Vector& v,
                               const RngToken& t, Vector& out) const {
  out = effective_regularizer(x[0]) * v;
  const Matrix& a = data_.x_train;
  for_each_sample(a.rows(), opts_.batch_train, t, salt::kBatchTrain, [&](Index i, double wt) {
    const double m = data_.label_train[i] * a.row(i).dot(y);
    const double h = sigmoid(m) * sigmoid(-m);
    out.noalias() += (wt * h * a.row(i).dot(v)) * a.row(i).transpose();
  });
}

// d/dx grad_y g = softplus'(x) y = sigmoid(x) y; no sampling involved.
void HyperOptProblem::jvp_xy_g(const Vector& x, const Vector& y, const Vector& v, const RngToken&,
                               Vector& out) const {
  out.resize(1);
  out[0] = sigmoid(x[0]) * y.dot(v);
}

double HyperOptProblem::f_value(const Vector&, const Vector& y) const {
  return mean_loss(data_.x_val, data_.label_val, y);
}

double HyperOptProblem::g_value(const Vector& x, const Vector& y) const {
  return mean_loss(data_.x_train, data_.label_train, y) +
         0.5 * effective_regularizer(x[0]) * y.squaredNorm();
}

nlohmann::json HyperOptProblem::describe() const {
  nlohmann::json j;
  j["kind"] = kind();
  j["dims"] = {dims().x, dims().y};
  j["n_train"] = data_.n_train();
  j["n_val"] = data_.x_val.rows();
  j["p_corrupt"] = data_.p_corrupt;
  j["c0"] = c0_;
  j["batch"] = {{"train", opts_.batch_train}, {"val", opts_.batch_val}};
  j["constants"] = constants_;
  j["derived"] = derive_constants(constants_);
  return j;
}

std::shared_ptr<HyperOptProblem> make_hyperopt(Dataset data, double c0, LogisticOptions opts) {
  return std::make_shared<HyperOptProblem>(std::move(data), c0, opts);
}

}  // namespace borep
