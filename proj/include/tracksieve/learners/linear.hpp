#pragma once

// L2-penalized logistic regression and a one-hidden-layer perceptron.
// Both standardize their inputs; constant columns are dropped.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tracksieve/error.hpp"
#include "tracksieve/rng.hpp"

namespace tracksieve {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct Standardizer {
  std::vector<std::size_t> columns;  // kept input columns
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    const double n = double(x.rows());
    std::vector<double> mu, sd;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double m = x.col(j).mean();
      double var = (x.col(j).array() - m).square().sum() / n;
      if (var <= 1e-24) continue;
      s.columns.push_back(std::size_t(j));
      mu.push_back(m);
      sd.push_back(std::sqrt(var));
    }
    s.mean = Eigen::Map<Eigen::VectorXd>(mu.data(), Eigen::Index(mu.size()));
    s.scale = Eigen::Map<Eigen::VectorXd>(sd.data(), Eigen::Index(sd.size()));
    return s;
  }

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z(x.rows(), Eigen::Index(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k)
      z.col(Eigen::Index(k)) =
          (x.col(Eigen::Index(columns[k])).array() - mean[Eigen::Index(k)]) / scale[Eigen::Index(k)];
    return z;
  }

  double value(const double* row, std::size_t k) const {
    return (row[columns[k]] - mean[Eigen::Index(k)]) / scale[Eigen::Index(k)];
  }
};

inline Eigen::MatrixXd to_matrix(const double* x, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x, Eigen::Index(rows), Eigen::Index(cols));
}

// --------------------------------------------------------------------------
// Logistic regression

// Objective (1/n) [sum of negative log-likelihoods + l2 * |w|^2] with
// beta = (intercept, w); the intercept is not penalized.
inline double logit_objective(const Eigen::VectorXd& beta, const Eigen::MatrixXd& z,
                              const Eigen::VectorXd& y, double l2) {
  Eigen::VectorXd eta = (z * beta.tail(beta.size() - 1)).array() + beta[0];
  double nll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta[i]) - y[i] * eta[i];
  return (nll + l2 * beta.tail(beta.size() - 1).squaredNorm()) / double(z.rows());
}

inline Eigen::VectorXd logit_gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& z,
                                      const Eigen::VectorXd& y, double l2) {
  Eigen::VectorXd eta = (z * beta.tail(beta.size() - 1)).array() + beta[0];
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = sigmoid(eta[i]) - y[i];
  Eigen::VectorXd g(beta.size());
  g[0] = r.sum();
  g.tail(beta.size() - 1) = z.transpose() * r + 2.0 * l2 * beta.tail(beta.size() - 1);
  return g / double(z.rows());
}

struct LogitFit {
  Standardizer standardizer;
  Eigen::VectorXd beta;  // intercept first, then standardized coefficients
  int iterations = 0;
  double gradient_norm = 0;
};

inline constexpr double kLogitGradientTolerance = 1e-6;
inline constexpr int kLogitMaxIterations = 500;

// Damped Newton iterations with Armijo backtracking.
inline LogitFit fit_logit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) {
  if (l2 < 0) throw Error(Errc::kInvalidHyperparameter, "l2 must be non-negative");
  LogitFit fit;
  fit.standardizer = Standardizer::fit(x);
  Eigen::MatrixXd z = fit.standardizer.transform(x);
  const Eigen::Index p = z.cols() + 1;
  const double n = double(z.rows());
  fit.beta = Eigen::VectorXd::Zero(p);
  double base = y.mean();
  fit.beta[0] = std::log(std::max(base, 1e-12) / std::max(1 - base, 1e-12));

  Eigen::MatrixXd zi(z.rows(), p);
  zi.col(0).setOnes();
  zi.rightCols(p - 1) = z;

  double f = logit_objective(fit.beta, z, y, l2);
  for (fit.iterations = 0; fit.iterations < kLogitMaxIterations; ++fit.iterations) {
    Eigen::VectorXd g = logit_gradient(fit.beta, z, y, l2);
    fit.gradient_norm = g.norm();
    if (fit.gradient_norm <= kLogitGradientTolerance) break;
    Eigen::VectorXd w(z.rows());
    Eigen::VectorXd eta = zi * fit.beta;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      double pi = sigmoid(eta[i]);
      w[i] = pi * (1 - pi);
    }
    Eigen::MatrixXd h = zi.transpose() * w.asDiagonal() * zi / n;
    for (Eigen::Index j = 1; j < p; ++j) h(j, j) += 2.0 * l2 / n;
    h.diagonal().array() += 1e-10;
    Eigen::VectorXd step = h.ldlt().solve(-g);
    if (!step.allFinite() || g.dot(step) >= 0) step = -g;
    double t = 1.0;
    double f_new = f;
    Eigen::VectorXd next;
    for (int k = 0; k < 50; ++k) {
      next = fit.beta + t * step;
      f_new = logit_objective(next, z, y, l2);
      if (f_new <= f + 1e-4 * t * g.dot(step)) break;
      t *= 0.5;
    }
    if (!(f_new < f) && t < 1e-12) break;
    fit.beta = next;
    f = f_new;
  }
  fit.gradient_norm = logit_gradient(fit.beta, z, y, l2).norm();
  return fit;
}

inline double logit_score(const LogitFit& fit, const double* row) {
  double eta = fit.beta[0];
  for (std::size_t k = 0; k < fit.standardizer.columns.size(); ++k)
    eta += fit.beta[Eigen::Index(k) + 1] * fit.standardizer.value(row, k);
  return sigmoid(eta);
}

// --------------------------------------------------------------------------
// Perceptron with one logistic hidden layer and a logistic output.

struct MlpWeights {
  Eigen::MatrixXd w1;  // hidden x (inputs + 1); column 0 is the bias
  Eigen::VectorXd w2;  // hidden + 1; entry 0 is the bias

  std::size_t size() const { return std::size_t(w1.size() + w2.size()); }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    v << Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size()), w2;
    return v;
  }

  static MlpWeights unflatten(const Eigen::VectorXd& v, Eigen::Index hidden, Eigen::Index inputs) {
    MlpWeights w;
    w.w1 = Eigen::Map<const Eigen::MatrixXd>(v.data(), hidden, inputs + 1);
    w.w2 = v.tail(hidden + 1);
    return w;
  }
};

struct MlpForward {
  Eigen::MatrixXd hidden;  // n x hidden
  Eigen::VectorXd output;  // n
};

inline MlpForward mlp_forward(const MlpWeights& w, const Eigen::MatrixXd& z) {
  MlpForward f;
  Eigen::MatrixXd a = z * w.w1.rightCols(w.w1.cols() - 1).transpose();
  a.rowwise() += w.w1.col(0).transpose();
  f.hidden = a.unaryExpr([](double v) { return sigmoid(v); });
  Eigen::VectorXd o = f.hidden * w.w2.tail(w.w2.size() - 1);
  o.array() += w.w2[0];
  f.output = o.unaryExpr([](double v) { return sigmoid(v); });
  return f;
}

// (1/n) [sum of cross-entropies + l2 * squared norm of all weights].
inline double mlp_objective(const MlpWeights& w, const Eigen::MatrixXd& z,
                            const Eigen::VectorXd& y, double l2) {
  Eigen::MatrixXd a = z * w.w1.rightCols(w.w1.cols() - 1).transpose();
  a.rowwise() += w.w1.col(0).transpose();
  Eigen::MatrixXd h = a.unaryExpr([](double v) { return sigmoid(v); });
  Eigen::VectorXd eta = h * w.w2.tail(w.w2.size() - 1);
  eta.array() += w.w2[0];
  double ce = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ce += softplus(eta[i]) - y[i] * eta[i];
  return (ce + l2 * (w.w1.squaredNorm() + w.w2.squaredNorm())) / double(z.rows());
}

inline MlpWeights mlp_gradient(const MlpWeights& w, const Eigen::MatrixXd& z,
                               const Eigen::VectorXd& y, double l2) {
  const double n = double(z.rows());
  MlpForward f = mlp_forward(w, z);
  Eigen::VectorXd delta = f.output - y;  // d CE / d output pre-activation
  MlpWeights g;
  g.w2.resize(w.w2.size());
  g.w2[0] = delta.sum();
  g.w2.tail(w.w2.size() - 1) = f.hidden.transpose() * delta;
  Eigen::MatrixXd dh = delta * w.w2.tail(w.w2.size() - 1).transpose();
  dh.array() *= f.hidden.array() * (1.0 - f.hidden.array());
  g.w1.resize(w.w1.rows(), w.w1.cols());
  g.w1.col(0) = dh.colwise().sum().transpose();
  g.w1.rightCols(w.w1.cols() - 1) = dh.transpose() * z;
  g.w1 += 2.0 * l2 * w.w1;
  g.w2 += 2.0 * l2 * w.w2;
  g.w1 /= n;
  g.w2 /= n;
  return g;
}

struct MlpFit {
  Standardizer standardizer;
  MlpWeights weights;
};

inline constexpr int kMlpIterations = 5000;
inline constexpr double kMlpStep = 0.1;

inline MlpFit fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int hidden_units,
                      double l2, std::uint64_t seed, int iterations = kMlpIterations,
                      double step = kMlpStep) {
  if (hidden_units < 1) throw Error(Errc::kInvalidHyperparameter, "hidden_units must be >= 1");
  if (l2 < 0) throw Error(Errc::kInvalidHyperparameter, "l2 must be non-negative");
  MlpFit fit;
  fit.standardizer = Standardizer::fit(x);
  Eigen::MatrixXd z = fit.standardizer.transform(x);
  Rng rng(seed);
  std::uniform_real_distribution<double> init(-0.5, 0.5);
  fit.weights.w1 = Eigen::MatrixXd(hidden_units, z.cols() + 1);
  fit.weights.w2 = Eigen::VectorXd(hidden_units + 1);
  for (Eigen::Index j = 0; j < fit.weights.w1.cols(); ++j)
    for (Eigen::Index i = 0; i < fit.weights.w1.rows(); ++i) fit.weights.w1(i, j) = init(rng);
  for (Eigen::Index i = 0; i < fit.weights.w2.size(); ++i) fit.weights.w2[i] = init(rng);
  for (int it = 0; it < iterations; ++it) {
    MlpWeights g = mlp_gradient(fit.weights, z, y, l2);
    fit.weights.w1 -= step * g.w1;
    fit.weights.w2 -= step * g.w2;
  }
  return fit;
}

inline double mlp_score(const MlpFit& fit, const double* row) {
  const auto& w = fit.weights;
  double out = w.w2[0];
  for (Eigen::Index h = 0; h < w.w1.rows(); ++h) {
    double a = w.w1(h, 0);
    for (std::size_t k = 0; k < fit.standardizer.columns.size(); ++k)
      a += w.w1(h, Eigen::Index(k) + 1) * fit.standardizer.value(row, k);
    out += w.w2[h + 1] * sigmoid(a);
  }
  return sigmoid(out);
}

// Garson: share of |input->hidden| * |hidden->output| per input, normalized
// within each hidden unit, then summed and normalized over inputs.
inline std::vector<double> garson_importance(const Eigen::MatrixXd& w1, const Eigen::VectorXd& w2) {
  const Eigen::Index inputs = w1.cols() - 1;
  std::vector<double> imp(std::size_t(inputs), 0.0);
  for (Eigen::Index h = 0; h < w1.rows(); ++h) {
    double total = 0;
    for (Eigen::Index i = 0; i < inputs; ++i) total += std::abs(w1(h, i + 1) * w2[h + 1]);
    if (total <= 0) continue;
    for (Eigen::Index i = 0; i < inputs; ++i)
      imp[std::size_t(i)] += std::abs(w1(h, i + 1) * w2[h + 1]) / total;
  }
  double sum = 0;
  for (double v : imp) sum += v;
  if (sum > 0)
    for (double& v : imp) v /= sum;
  return imp;
}

}  // namespace tracksieve
