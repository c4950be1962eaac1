// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "borep/problems.hpp"
#include "salts.hpp"

namespace borep {

namespace {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Smallest singular value of m viewed as a map on its column space, zero when
// m has fewer rows than columns.
double min_singular(const Matrix& m) {
  if (m.size() == 0 || m.rows() < m.cols()) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Vector zeros_if_empty(Vector v, Index n) {
  if (v.size() == 0) return Vector::Zero(n);
  return v;
}

constexpr Index kSmallDim = 8;

}  // namespace

QuadraticBilevel::QuadraticBilevel(Matrix A, Matrix B, Vector c, QuadraticUpper upper,
                                   NoiseScales noise, std::optional<double> M, double m_radius)
    : A_(std::move(A)), B_(std::move(B)), c_(std::move(c)), noise_(noise) {
  init_lower();
  upper.a = zeros_if_empty(std::move(upper.a), B_.cols());
  upper.b = zeros_if_empty(std::move(upper.b), B_.rows());
  require_dim(upper.a, B_.cols(), "upper target a");
  require_dim(upper.b, B_.rows(), "upper target b");
  require(upper.wx >= 0.0 && upper.wy >= 0.0, "quadratic upper weights must be nonnegative");
  quadratic_ = std::move(upper);
  init_constants(M, m_radius);
}

QuadraticBilevel::QuadraticBilevel(Matrix A, Matrix B, Vector c, QuarticUpper upper,
                                   NoiseScales noise, std::optional<double> M, double m_radius)
    : A_(std::move(A)), B_(std::move(B)), c_(std::move(c)), noise_(noise) {
  init_lower();
  if (upper.W.size() == 0) upper.W = Matrix::Zero(B_.cols(), B_.rows());
  upper.target = zeros_if_empty(std::move(upper.target), B_.cols());
  if (upper.W.rows() != B_.cols() || upper.W.cols() != B_.rows()) {
    fail(ErrorCode::kDimensionMismatch, "quartic W must be d_x by d_y");
  }
  require_dim(upper.target, B_.cols(), "quartic target");
  require(upper.scale > 0.0, "quartic scale must be positive");
  quartic_ = std::move(upper);
  init_constants(M, m_radius);
}

void QuadraticBilevel::init_lower() {
  require(A_.rows() > 0 && A_.rows() == A_.cols(), "A must be square and nonempty");
  require(B_.rows() == A_.rows() && B_.cols() > 0, "B must have d_y rows and d_x > 0 columns");
  c_ = zeros_if_empty(std::move(c_), A_.rows());
  require_dim(c_, A_.rows(), "c");
  require(A_.allFinite() && B_.allFinite() && c_.allFinite(), "problem data must be finite");
  require((A_ - A_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + A_.cwiseAbs().maxCoeff()),
          "A must be symmetric");
  require(noise_.f >= 0.0 && noise_.g1 >= 0.0 && noise_.g2 >= 0.0, "noise scales must be >= 0");
  llt_.compute(A_);
  require(llt_.info() == Eigen::Success, "A must be positive definite");
  decoupled_ = B_.isZero(0.0);
}

void QuadraticBilevel::init_constants(std::optional<double> M, double m_radius) {
  const Index dx = B_.cols();
  const Index dy = B_.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A_, Eigen::EigenvaluesOnly);
  ProblemConstants c;
  c.mu = eig.eigenvalues().minCoeff();
  c.L = eig.eigenvalues().maxCoeff();
  require(c.mu > 0.0, "A must be positive definite");
  c.C_gxy = spectral_norm(B_);
  c.tau = 0.0;
  c.rho = 0.0;
  c.sigma_f1 = noise_.f * std::sqrt(static_cast<double>(dx));
  c.sigma_f2 = noise_.f * std::sqrt(static_cast<double>(dy));
  c.sigma_g1 = noise_.g1 * std::sqrt(static_cast<double>(dy));
  c.sigma_g2 = noise_.g2 * std::max(static_cast<double>(dy), std::sqrt(static_cast<double>(dx * dy)));

  const Matrix P = llt_.solve(B_);  // dy*/dx
  const Vector q = llt_.solve(c_);  // y*(0)
  const bool coupled = c.C_gxy > 0.0;

  if (quadratic_) {
    const auto& u = *quadratic_;
    c.L_x0 = u.wx;
    c.L_y0 = u.wy;
    if (M) {
      c.M = *M;
    } else if (!coupled) {
      c.M = u.wy * (q - u.b).norm();
    } else {
      c.M = u.wy * (spectral_norm(P) * m_radius + (q - u.b).norm());
      c.M_is_estimate = true;
    }
    // Phi is a convex quadratic; minimize through its normal equations.
    const Matrix H = u.wx * Matrix::Identity(dx, dx) + u.wy * P.transpose() * P;
    const Vector rhs = u.wx * u.a + u.wy * P.transpose() * (u.b - q);
    const Vector xmin = H.completeOrthogonalDecomposition().solve(rhs);
    phi_inf_ = phi_value(xmin);
  } else {
    const auto& u = *quartic_;
    const double w_norm = spectral_norm(u.W);
    const double j_norm = std::sqrt(1.0 + w_norm * w_norm);  // |[I W]|
    c.L_x0 = 3.0 * u.scale * j_norm;
    c.L_x1 = 3.0 * j_norm;
    c.L_y0 = 3.0 * u.scale * w_norm * j_norm;
    if (w_norm == 0.0) {
      c.L_y1 = 0.0;
    } else {
      const double smin = min_singular(u.W.transpose());
      c.L_y1 = smin > 1e-12 ? 3.0 * w_norm * j_norm / smin
                            : std::numeric_limits<double>::infinity();
    }
    const Matrix G = Matrix::Identity(dx, dx) + u.W * P;  // r(x) = G x + r0
    const Vector r0 = u.W * q - u.target;
    if (M) {
      c.M = *M;
    } else {
      const double rbar = spectral_norm(G) * m_radius + r0.norm();
      c.M = u.scale * w_norm * rbar * rbar * rbar;
      c.M_is_estimate = coupled;
    }
    const Vector xmin = G.completeOrthogonalDecomposition().solve(-r0);
    const double res = (G * xmin + r0).norm();
    phi_inf_ = 0.25 * u.scale * res * res * res * res;
  }
  constants_ = c;
}

void QuadraticBilevel::override_constants(const nlohmann::json& overrides) {
  from_json(overrides, constants_);
}

Vector QuadraticBilevel::exact_grad_x_f(const Vector& x, const Vector& y) const {
  if (quadratic_) return quadratic_->wx * (x - quadratic_->a);
  const auto& u = *quartic_;
  const Vector r = x + u.W * y - u.target;
  return u.scale * r.squaredNorm() * r;
}

Vector QuadraticBilevel::exact_grad_y_f(const Vector& x, const Vector& y) const {
  if (quadratic_) return quadratic_->wy * (y - quadratic_->b);
  const auto& u = *quartic_;
  const Vector r = x + u.W * y - u.target;
  return u.W.transpose() * (u.scale * r.squaredNorm() * r);
}

void QuadraticBilevel::grad_x_f(const Vector& x, const Vector& y, const RngToken& t,
                                Vector& out) const {
  if (quadratic_) {
    out = quadratic_->wx * (x - quadratic_->a);
  } else {
    const auto& u = *quartic_;
    out = x - u.target;
    out.noalias() += u.W * y;
    out *= u.scale * out.squaredNorm();
  }
  GaussianSource src(t, salt::kGradXF);
  add_gaussian(src, noise_.f, out);
}

void QuadraticBilevel::grad_y_f(const Vector& x, const Vector& y, const RngToken& t,
                                Vector& out) const {
  if (quadratic_) {
    out = quadratic_->wy * (y - quadratic_->b);
  } else {
    const auto& u = *quartic_;
    Vector r = x - u.target;
    r.noalias() += u.W * y;
    r *= u.scale * r.squaredNorm();
    out.noalias() = u.W.transpose() * r;
  }
  GaussianSource src(t, salt::kGradYF);
  add_gaussian(src, noise_.f, out);
}

void QuadraticBilevel::grad_y_g(const Vector& x, const Vector& y, const RngToken& t,
                                Vector& out) const {
  exact_grad_y_g(x, y, out);
  GaussianSource src(t, salt::kGradYG);
  add_gaussian(src, noise_.g1, out);
}

void QuadraticBilevel::grad_y_g_stream(const Vector& x, const Vector& y, GaussianSource& src,
                                       Vector& out) const {
  exact_grad_y_g(x, y, out);
  add_gaussian(src, noise_.g1, out);
}

void QuadraticBilevel::exact_grad_y_g(const Vector& x, const Vector& y, Vector& out) const {
  if (out.size() != A_.rows()) out.resize(A_.rows());
  // Epoch SGD calls this millions of times on tiny problems, where the
  // blocked product's dispatch costs more than the arithmetic.
  const Index n = A_.rows();
  if (n <= kSmallDim) {
    for (Index i = 0; i < n; ++i) {
      double v = -c_[i];
      for (Index j = 0; j < n; ++j) v += A_(i, j) * y[j];
      if (!decoupled_) {
        for (Index j = 0; j < x.size(); ++j) v -= B_(i, j) * x[j];
      }
      out[i] = v;
    }
  } else {
    out.noalias() = A_ * y;
    if (!decoupled_) out.noalias() -= B_ * x;
    out -= c_;
  }
}

void QuadraticBilevel::hvp_yy_g(const Vector&, const Vector&, const Vector& v, const RngToken& t,
                                Vector& out) const {
  out.resize(A_.rows());
  out.noalias() = A_ * v;
  if (noise_.g2 == 0.0) return;
  // Symmetric Gaussian perturbation E, applied entry by entry so the result
  // stays linear in v for a fixed token.
  GaussianSource src(t, salt::kHvp);
  const Index d = A_.rows();
  const double s = noise_.g2;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      const double e = s * src();
      out[i] += e * v[j];
      if (i != j) out[j] += e * v[i];
    }
  }
}

void QuadraticBilevel::jvp_xy_g(const Vector&, const Vector&, const Vector& v, const RngToken& t,
                                Vector& out) const {
  out.resize(B_.cols());
  out.noalias() = -(B_.transpose() * v);
  // When g ignores x, every sample of the mixed derivative is zero too.
  if (noise_.g2 == 0.0 || decoupled_) return;
  GaussianSource src(t, salt::kJvp);
  const double s = noise_.g2;
  for (Index i = 0; i < B_.cols(); ++i) {
    for (Index j = 0; j < B_.rows(); ++j) out[i] += s * src() * v[j];
  }
}

double QuadraticBilevel::f_value(const Vector& x, const Vector& y) const {
  if (quadratic_) {
    const auto& u = *quadratic_;
    return 0.5 * u.wx * (x - u.a).squaredNorm() + 0.5 * u.wy * (y - u.b).squaredNorm();
  }
  const auto& u = *quartic_;
  const double r2 = (x + u.W * y - u.target).squaredNorm();
  return 0.25 * u.scale * r2 * r2;
}

double QuadraticBilevel::g_value(const Vector& x, const Vector& y) const {
  return 0.5 * y.dot(A_ * y) - y.dot(B_ * x + c_);
}

Vector QuadraticBilevel::y_star(const Vector& x) const {
  require_dim(x, B_.cols(), "x");
  return llt_.solve(B_ * x + c_);
}

Vector QuadraticBilevel::z_star(const Vector& x) const {
  const Vector ys = y_star(x);
  return llt_.solve(exact_grad_y_f(x, ys));
}

Vector QuadraticBilevel::phi_grad(const Vector& x) const {
  const Vector ys = y_star(x);
  const Vector zs = llt_.solve(exact_grad_y_f(x, ys));
  // grad_x grad_y g = -B^T, so the implicit term enters with a plus sign.
  return exact_grad_x_f(x, ys) + B_.transpose() * zs;
}

double QuadraticBilevel::phi_value(const Vector& x) const { return f_value(x, y_star(x)); }

nlohmann::json QuadraticBilevel::describe() const {
  nlohmann::json j;
  j["kind"] = kind();
  j["dims"] = {B_.cols(), B_.rows()};
  j["noise"] = {{"f", noise_.f}, {"g1", noise_.g1}, {"g2", noise_.g2}};
  j["constants"] = constants_;
  j["derived"] = derive_constants(constants_);
  if (phi_inf_) j["phi_infimum"] = *phi_inf_;
  return j;
}

std::shared_ptr<QuadraticBilevel> make_quadratic(const QuadraticSpec& spec) {
  require(spec.dx > 0 && spec.dy > 0, "dims must be positive");
  Matrix A;
  if (spec.A) {
    A = *spec.A;
    if (A.rows() != spec.dy || A.cols() != spec.dy) {
      fail(ErrorCode::kDimensionMismatch, "A must be d_y by d_y");
    }
  } else {
    require(spec.spectrum.size() == 1 || static_cast<Index>(spec.spectrum.size()) == spec.dy,
            "spectrum must have one or d_y entries");
    Vector eig(spec.dy);
    for (Index i = 0; i < spec.dy; ++i) {
      const double e = spec.spectrum.size() == 1 ? spec.spectrum[0]
                                                 : spec.spectrum[static_cast<std::size_t>(i)];
      require(std::isfinite(e) && e > 0.0, "spectrum must lie in (0, inf)");
      eig[i] = e;
    }
    if ((eig.array() == eig[0]).all()) {
      A = eig[0] * Matrix::Identity(spec.dy, spec.dy);
    } else {
      // Random orthogonal conjugation of diag(spectrum).
      GaussianSource src(RngToken{spec.seed, Stream::kAux, 0}, salt::kFixtureA);
      Matrix g(spec.dy, spec.dy);
      for (Index j = 0; j < spec.dy; ++j)
        for (Index i = 0; i < spec.dy; ++i) g(i, j) = src();
      const Matrix Q = Eigen::HouseholderQR<Matrix>(g).householderQ();
      A = Q * eig.asDiagonal() * Q.transpose();
      A = 0.5 * (A + A.transpose()).eval();
    }
  }
  Matrix B = spec.B.size() == 0 ? Matrix::Zero(spec.dy, spec.dx) : spec.B;
  if (B.rows() != spec.dy || B.cols() != spec.dx) {
    fail(ErrorCode::kDimensionMismatch, "B must be d_y by d_x");
  }
  return std::make_shared<QuadraticBilevel>(std::move(A), std::move(B), spec.c, spec.upper,
                                            spec.noise, spec.M, spec.m_radius);
}

std::shared_ptr<QuadraticBilevel> make_quartic_upper(const QuadraticBilevel& p, const Matrix& W,
                                                     double scale, const Vector& target,
                                                     std::optional<double> M, double m_radius) {
  QuarticUpper u{W, target, scale};
  return std::make_shared<QuadraticBilevel>(p.A(), p.B(), p.c(), std::move(u), p.noise(), M,
                                            m_radius);
}

namespace {

NoiseScales noise_from_json(const nlohmann::json& j) {
  NoiseScales n;
  if (!j.contains("noise")) return n;
  const auto& v = j.at("noise");
  if (v.is_number()) {
    n.f = n.g1 = n.g2 = v.get<double>();
  } else {
    n.f = v.value("f", 0.0);
    n.g1 = v.value("g1", 0.0);
    n.g2 = v.value("g2", 0.0);
  }
  return n;
}

// "coupling": s gives s times the rectangular identity, {"random": s} a
// seeded Gaussian matrix rescaled to spectral norm s; "B" is taken verbatim.
Matrix coupling_from_json(const nlohmann::json& j, Index dx, Index dy, std::uint64_t seed) {
  if (j.contains("B")) return matrix_from_json(j.at("B"));
  if (!j.contains("coupling")) return Matrix::Zero(dy, dx);
  const auto& cj = j.at("coupling");
  if (cj.is_number()) return cj.get<double>() * Matrix::Identity(dy, dx);
  const double s = cj.at("random").get<double>();
  GaussianSource src(RngToken{seed, Stream::kAux, 0}, salt::kFixtureB);
  Matrix b(dy, dx);
  for (Index c = 0; c < dx; ++c)
    for (Index r = 0; r < dy; ++r) b(r, c) = src();
  const double nrm = spectral_norm(b);
  return nrm > 0.0 ? Matrix(s / nrm * b) : b;
}

Vector optional_vector(const nlohmann::json& j, const char* key) {
  return j.contains(key) ? vector_from_json(j.at(key)) : Vector();
}

std::pair<Index, Index> dims_from_json(const nlohmann::json& j) {
  const auto& d = j.at("dims");
  require(d.is_array() && d.size() == 2, "dims must be [d_x, d_y]");
  return {d[0].get<Index>(), d[1].get<Index>()};
}

ProblemPtr quadratic_from_json(const nlohmann::json& j, bool quartic) {
  QuadraticSpec spec;
  std::tie(spec.dx, spec.dy) = dims_from_json(j);
  require(spec.dx > 0 && spec.dy > 0, "dims must be positive");
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("A")) spec.A = matrix_from_json(j.at("A"));
  if (j.contains("spectrum")) {
    const auto& sp = j.at("spectrum");
    spec.spectrum = sp.is_number() ? std::vector<double>{sp.get<double>()}
                                   : sp.get<std::vector<double>>();
  }
  spec.B = coupling_from_json(j, spec.dx, spec.dy, spec.seed);
  spec.c = optional_vector(j, "c");
  spec.noise = noise_from_json(j);
  if (j.contains("M")) spec.M = j.at("M").get<double>();
  spec.m_radius = j.value("m_radius", 10.0);
  const nlohmann::json upper = j.value("upper", nlohmann::json::object());
  if (!quartic) {
    spec.upper.wx = upper.value("wx", 1.0);
    spec.upper.wy = upper.value("wy", 1.0);
    spec.upper.a = optional_vector(upper, "a");
    spec.upper.b = optional_vector(upper, "b");
    auto p = make_quadratic(spec);
    if (j.contains("constants")) p->override_constants(j.at("constants"));
    return p;
  }
  QuadraticSpec lower = spec;
  lower.M.reset();
  auto base = make_quadratic(lower);
  Matrix W;
  if (upper.contains("W")) {
    W = matrix_from_json(upper.at("W"));
  } else {
    W = upper.value("w", 1.0) * Matrix::Identity(spec.dx, spec.dy);
  }
  auto p = make_quartic_upper(*base, W, upper.value("scale", 1.0), optional_vector(upper, "target"),
                              spec.M, spec.m_radius);
  if (j.contains("constants")) p->override_constants(j.at("constants"));
  return p;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Index n = 0;
  Index d = 0;
  if (j.contains("dims") && j.at("kind").get<std::string>() == "hyperclean") {
    std::tie(n, d) = dims_from_json(j);
  } else {
    n = j.at("n").get<Index>();
    d = j.at("d").get<Index>();
  }
  return gen_synthetic_dataset(n, d, j.value("class_sep", 2.0), j.value("p_corrupt", 0.0),
                               j.value("seed", std::uint64_t{0}), j.value("n_val", Index{0}));
}

LogisticOptions logistic_options(const nlohmann::json& j) {
  LogisticOptions o;
  if (j.contains("batch")) {
    const auto& b = j.at("batch");
    if (b.is_number()) {
      o.batch_train = o.batch_val = b.get<Index>();
    } else {
      o.batch_train = b.value("train", Index{0});
      o.batch_val = b.value("val", Index{0});
    }
  }
  return o;
}

}  // namespace

ProblemPtr problem_from_json(const nlohmann::json& j) {
  require(j.is_object(), "problem description must be a JSON object");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") return quadratic_from_json(j, false);
  if (kind == "quartic") return quadratic_from_json(j, true);
  if (kind == "hyperclean") {
    auto p = make_hyperclean(dataset_from_json(j), j.value("c", 1e-2), logistic_options(j));
    if (j.contains("constants")) p->override_constants(j.at("constants"));
    return p;
  }
  if (kind == "hyperopt") {
    auto p = make_hyperopt(dataset_from_json(j), j.value("c0", 1e-2), logistic_options(j));
    if (j.contains("constants")) p->override_constants(j.at("constants"));
    return p;
  }
  fail(ErrorCode::kInvalidArgument, "unknown problem kind '" + kind + "'");
}

Vector initial_x(const Problem& p, const nlohmann::json& desc) {
  if (!desc.contains("x0")) return p.default_x0();
  Vector x = vector_from_json(desc.at("x0"));
  require_dim(x, p.dims().x, "x0");
  return x;
}

Vector initial_y(const Problem& p, const nlohmann::json& desc) {
  if (!desc.contains("y0")) return p.default_y0();
  Vector y = vector_from_json(desc.at("y0"));
  require_dim(y, p.dims().y, "y0");
  return y;
}

}  // namespace borep
