#include "gaitad/svm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gaitad/error.hpp"

namespace gaitad {

namespace {

constexpr double kTau = 1e-12;

bool in_up(double alpha, double y, double c) { return (y > 0 && alpha < c) || (y < 0 && alpha > 0); }
bool in_low(double alpha, double y, double c) { return (y > 0 && alpha > 0) || (y < 0 && alpha < c); }

struct Violation {
  Eigen::Index i = -1;
  Eigen::Index j = -1;
  double m = -std::numeric_limits<double>::infinity();
  double big_m = std::numeric_limits<double>::infinity();
};

// Maximal violating pair; strict comparisons keep the lowest index on ties.
Violation select_pair(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::VectorXd& grad,
                      double c) {
  Violation v;
  for (Eigen::Index t = 0; t < alpha.size(); ++t) {
    const double score = -y[t] * grad[t];
    if (in_up(alpha[t], y[t], c) && score > v.m) {
      v.m = score;
      v.i = t;
    }
    if (in_low(alpha[t], y[t], c) && score < v.big_m) {
      v.big_m = score;
      v.j = t;
    }
  }
  return v;
}

}  // namespace

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                  double gamma) {
  if (u.size() != v.size()) fail(ErrorCode::kShapeError, "rbf_kernel: length mismatch");
  return std::exp(-gamma * (u - v).squaredNorm());
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& rows, double gamma) {
  const Eigen::Index n = rows.rows();
  const Eigen::VectorXd sq = rows.rowwise().squaredNorm();
  Eigen::MatrixXd k(n, n);
  k.triangularView<Eigen::Lower>() = rows * rows.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * k(i, j));
      k(i, j) = std::exp(-gamma * d2);
    }
  }
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

double default_gamma(const Eigen::MatrixXd& x) {
  if (x.size() == 0) fail(ErrorCode::kDegenerateDataset, "default_gamma: empty data");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 0.0)) fail(ErrorCode::kDegenerateDataset, "default_gamma: zero feature variance");
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd ay = alpha.cwiseProduct(y);
  return 0.5 * ay.dot(gram * ay) - alpha.sum();
}

double kkt_gap(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& gram,
               double c) {
  const Eigen::VectorXd grad = y.cwiseProduct(gram * alpha.cwiseProduct(y)) - Eigen::VectorXd::Ones(y.size());
  const Violation v = select_pair(alpha, y, grad, c);
  if (v.i < 0 || v.j < 0) return 0.0;
  return v.m - v.big_m;
}

SvmTrainResult train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& labels,
                         const SvmConfig& config) {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) {
    fail(ErrorCode::kDegenerateDataset, "train_svm: samples and labels must be non-empty and aligned");
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) y[t] = label_sign(labels[static_cast<std::size_t>(t)]);
  if ((y.array() > 0).all() || (y.array() < 0).all()) {
    fail(ErrorCode::kDegenerateDataset, "train_svm: single class");
  }
  if (!(config.c > 0.0) || !(config.tol > 0.0)) fail(ErrorCode::kInvalidArgument, "train_svm: C and tol must be positive");
  const double c = config.c;
  const double gamma = config.gamma > 0.0 ? config.gamma : default_gamma(x);
  const Eigen::MatrixXd k = rbf_gram(x, gamma);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = -Eigen::VectorXd::Ones(n);  // Q alpha - e
  SvmTrainResult result;
  long iter = 0;
  for (;; ++iter) {
    const Violation v = select_pair(alpha, y, grad, c);
    result.kkt_gap = (v.i < 0 || v.j < 0) ? 0.0 : v.m - v.big_m;
    if (result.kkt_gap < config.tol) break;
    if (iter >= config.max_iterations) {
      fail(ErrorCode::kConvergenceFailure, "train_svm: KKT gap " + std::to_string(result.kkt_gap) +
                                               " after " + std::to_string(iter) + " iterations");
    }
    const Eigen::Index i = v.i;
    const Eigen::Index j = v.j;
    const double qij = y[i] * y[j] * k(i, j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    grad += (y[i] * di) * y.cwiseProduct(k.col(i)) + (y[j] * dj) * y.cwiseProduct(k.col(j));
  }

  // Bias from free vectors, falling back to the midpoint of the feasible interval.
  double rho_sum = 0.0;
  long free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < c) {
      rho_sum += yg;
      ++free_count;
    } else if ((alpha[t] >= c && y[t] < 0) || (alpha[t] <= 0.0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = free_count > 0 ? rho_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);

  result.iterations = iter;
  result.alpha = alpha;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) result.support_indices.push_back(t);
  }
  SvmModel& m = result.model;
  m.gamma = gamma;
  m.c = c;
  m.bias = -rho;
  const auto n_sv = static_cast<Eigen::Index>(result.support_indices.size());
  m.support_vectors.resize(n_sv, x.cols());
  m.coefficients.resize(n_sv);
  for (Eigen::Index s = 0; s < n_sv; ++s) {
    const Eigen::Index t = result.support_indices[static_cast<std::size_t>(s)];
    m.support_vectors.row(s) = x.row(t);
    m.coefficients[s] = alpha[t] * y[t];
  }
  return result;
}

SvmPrediction predict_svm(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.support_vectors.rows() > 0 && model.support_vectors.cols() != x.size()) {
    fail(ErrorCode::kShapeError, "predict_svm: feature length mismatch");
  }
  double f = model.bias;
  for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s) {
    f += model.coefficients[s] * std::exp(-model.gamma * (model.support_vectors.row(s).transpose() - x).squaredNorm());
  }
  SvmPrediction p;
  p.decision = f;
  p.label = f >= 0.0 ? Label::kAnomalous : Label::kNormal;
  return p;
}

}  // namespace gaitad
