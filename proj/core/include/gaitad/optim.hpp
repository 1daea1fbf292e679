#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gaitad/lstm.hpp"

namespace gaitad {

/// Mini-batch SGD with a staircase learning-rate decay and optional global
/// gradient-norm clipping (clip_norm <= 0 disables it).
struct TrainConfig {
  double initial_lr = 0.01;
  long decay_steps = 1000;
  double decay_rate = 0.5;
  int epochs = 21;
  int batch_size = 16;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  /// Stop after this many steps when positive, regardless of epochs.
  long max_steps = 0;
};

/// lr(step) = initial_lr * decay_rate ^ floor(step / decay_steps).
inline double learning_rate(const TrainConfig& config, long step) {
  return config.initial_lr *
         std::pow(config.decay_rate, static_cast<double>(step / config.decay_steps));
}

inline double global_norm(const std::vector<ParamRef>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.values.squaredNorm();
  return std::sqrt(sq);
}

struct StepInfo {
  double gradient_norm = 0.0;
  double clip_scale = 1.0;
  double learning_rate = 0.0;
};

/// params -= lr * scale * grads where scale = min(1, clip_norm / ||grads||).
inline StepInfo sgd_step(std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
                         double lr, double clip_norm) {
  StepInfo info;
  info.learning_rate = lr;
  info.gradient_norm = global_norm(grads);
  if (clip_norm > 0.0 && info.gradient_norm > clip_norm) {
    info.clip_scale = clip_norm / info.gradient_norm;
  }
  const double factor = lr * info.clip_scale;
  for (std::size_t k = 0; k < params.size(); ++k) params[k].values -= factor * grads[k].values;
  return info;
}

/// Symmetric relative error with a floor on the denominator so that
/// near-zero gradients compare on an absolute scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace gaitad
