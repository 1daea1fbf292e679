#pragma once

// Convolutional classifier over the reshaped encoder state:
// reshape -> conv + ReLU -> max-pool -> flatten -> 2 logistic units -> softmax.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "gaitad/lstm.hpp"
#include "gaitad/optim.hpp"
#include "gaitad/signal.hpp"

namespace gaitad {

/// Dense row-major W x Y x Z array; element (i, j, k) is data[(i * Y + j) * Z + k].
struct Volume {
  Eigen::Index width = 0;
  Eigen::Index height = 0;
  Eigen::Index depth = 0;
  std::vector<double> data;

  Volume() = default;
  Volume(Eigen::Index w, Eigen::Index h, Eigen::Index d, double fill = 0.0)
      : width(w), height(h), depth(d), data(static_cast<std::size_t>(w * h * d), fill) {}

  std::size_t offset(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return static_cast<std::size_t>((i * height + j) * depth + k);
  }
  double& at(Eigen::Index i, Eigen::Index j, Eigen::Index k) { return data[offset(i, j, k)]; }
  double at(Eigen::Index i, Eigen::Index j, Eigen::Index k) const { return data[offset(i, j, k)]; }
  Eigen::Index size() const { return width * height * depth; }
};

struct CnnConfig {
  Eigen::Index width = 16;
  Eigen::Index height = 16;
  Eigen::Index depth = 2;
  Eigen::Index kernel_h = 10;
  Eigen::Index kernel_w = 6;
  Eigen::Index out_channels = 16;
  Eigen::Index conv_stride = 1;
  Eigen::Index pool_size = 4;
  Eigen::Index pool_stride = 2;
  double kernel_init_stddev = 0.05;

  Eigen::Index conv_h() const { return (width - kernel_h) / conv_stride + 1; }
  Eigen::Index conv_w() const { return (height - kernel_w) / conv_stride + 1; }
  Eigen::Index pool_h() const { return (conv_h() - pool_size) / pool_stride + 1; }
  Eigen::Index pool_w() const { return (conv_w() - pool_size) / pool_stride + 1; }
  /// Length M of the flattened pooled volume.
  Eigen::Index flat_size() const { return pool_h() * pool_w() * out_channels; }

  /// Throws ShapeError when the pipeline arithmetic does not fit state_size.
  void validate(Eigen::Index state_size) const;
};

struct CnnParams {
  CnnConfig config;
  Eigen::VectorXd kernel;        // kh x kw x in x out, row-major
  Eigen::VectorXd conv_bias;     // out
  Eigen::MatrixXd dense_weight;  // 2 x M
  Eigen::VectorXd dense_bias;    // 2

  static CnnParams zeros(const CnnConfig& config);
  /// Truncated-normal kernel, Glorot-uniform dense layer, zero biases.
  static CnnParams random(const CnnConfig& config, std::uint64_t seed);

  double kernel_at(Eigen::Index u, Eigen::Index v, Eigen::Index c, Eigen::Index o) const {
    return kernel[((u * config.kernel_w + v) * config.depth + c) * config.out_channels + o];
  }

  std::vector<ParamRef> tensors();
};

struct ClassScores {
  Eigen::Vector2d scores;         // s0 normal, s1 anomalous
  Eigen::Vector2d probabilities;  // softmax(scores)
  Label predicted = Label::kAnomalous;
};

Volume reshape_state(const Eigen::VectorXd& flat, Eigen::Index width, Eigen::Index height,
                     Eigen::Index depth);
Eigen::VectorXd flatten(const Volume& volume);

/// Valid convolution over (width, height) with depth as input channels,
/// bias add and ReLU.
Volume conv_forward(const Volume& input, const CnnParams& params);

/// Per-channel window maximum with valid boundary handling.
Volume maxpool(const Volume& input, Eigen::Index size, Eigen::Index stride);

Eigen::Vector2d softmax(const Eigen::Vector2d& scores);

/// Equal probabilities resolve to anomalous.
Label predict_label(const Eigen::Vector2d& probabilities);

ClassScores classify(const Eigen::VectorXd& state, const CnnParams& params);

/// Mean softmax cross-entropy over the batch; fills grads when non-null.
double cnn_batch_loss(const std::vector<const Eigen::VectorXd*>& states,
                      const std::vector<Label>& labels, const CnnParams& params, CnnParams* grads);

struct CnnTrainResult {
  CnnParams params;
  std::vector<double> loss_history;
  long steps = 0;
};

/// Throws DegenerateDataset when only one class is present.
CnnTrainResult train_classifier(const std::vector<Eigen::VectorXd>& states,
                                const std::vector<Label>& labels, const CnnConfig& config,
                                const TrainConfig& train);

double cnn_gradient_check(const CnnParams& params, const std::vector<Eigen::VectorXd>& states,
                          const std::vector<Label>& labels, double epsilon);

}  // namespace gaitad
