#pragma once

// Soft-margin RBF SVM trained by SMO on the dual. Anomalous samples carry
// y = +1, normal samples y = -1.

#include <Eigen/Core>

#include <vector>

#include "gaitad/signal.hpp"

namespace gaitad {

struct SvmConfig {
  double c = 1.0;
  /// Non-positive selects default_gamma() of the training data.
  double gamma = 0.0;
  double tol = 1e-3;
  long max_iterations = 10'000'000;
};

struct SvmModel {
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd coefficients;     // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
};

struct SvmTrainResult {
  SvmModel model;
  Eigen::VectorXd alpha;  // one per training sample
  std::vector<Eigen::Index> support_indices;
  long iterations = 0;
  double kkt_gap = 0.0;  // m(alpha) - M(alpha) at exit
};

struct SvmPrediction {
  Label label = Label::kAnomalous;
  double decision = 0.0;
};

inline double label_sign(Label label) { return label == Label::kAnomalous ? 1.0 : -1.0; }

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                  double gamma);

/// exp(-gamma * ||x_i - x_j||^2) for all row pairs, diagonal exactly 1.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& rows, double gamma);

/// 1 / (d * var) with var the population variance of every entry of x.
double default_gamma(const Eigen::MatrixXd& x);

/// x holds one sample per row. Throws DegenerateDataset on a single class and
/// ConvergenceFailure when max_iterations is exhausted.
SvmTrainResult train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& labels,
                         const SvmConfig& config);

/// f(x) = sum alpha_i y_i k(x_i, x) + b; f >= 0 predicts anomalous.
SvmPrediction predict_svm(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// 0.5 a' Q a - sum(a) with Q_ij = y_i y_j K_ij.
double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& gram);

/// Maximal KKT violation m(alpha) - M(alpha); non-positive means optimal.
double kkt_gap(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y, const Eigen::MatrixXd& gram,
               double c);

}  // namespace gaitad
