#pragma once

// Gait event detection on vertical acceleration, cycle slicing, per-cycle
// detrending, length normalization and dataset-level z-normalization.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "gaitad/signal.hpp"

namespace gaitad {

inline constexpr Eigen::Index kCycleChannels = 9;
inline constexpr Eigen::Index kCycleLength = 200;

struct GaitEvents {
  std::vector<Eigen::Index> ic;  // initial contacts
  std::vector<Eigen::Index> fc;  // final contacts
};

struct EventConfig {
  double dog_sigma_short = 0.02;  // s
  double dog_sigma_long = 0.1;    // s
  /// Half-width of the wavelet's effective support; sigma = cwt_support / 5.
  double cwt_support = 0.5;       // s
  double min_ic_interval = 0.7;   // s
  double max_ic_interval = 1.6;   // s
  double fc_window_fraction = 0.75;
  /// Candidate minima must reach this fraction of the deepest response.
  double min_depth_fraction = 0.3;
  double min_duration = 2.0;      // s
};

/// Gaussian smoothing with reflected edges; sigma in samples.
Eigen::VectorXd gaussian_smooth(const Eigen::VectorXd& x, double sigma);

/// Single-scale continuous wavelet transform with the Ricker (negative
/// second derivative of Gaussian) wavelet; sigma in samples.
Eigen::VectorXd ricker_cwt(const Eigen::VectorXd& x, double sigma);

/// DoG band-pass followed by the wavelet transform.
Eigen::VectorXd event_response(const Eigen::VectorXd& vertical_accel, double sample_rate,
                               const EventConfig& config = {});

/// Indices of strict local minima; flat bottoms report their midpoint.
std::vector<Eigen::Index> local_minima(const Eigen::VectorXd& x);
std::vector<Eigen::Index> local_maxima(const Eigen::VectorXd& x);

/// IC at gated minima of the transformed signal; FC at maxima of its second
/// difference inside (IC, IC + fraction * interval).
GaitEvents detect_events(const UniformSeries& vertical_accel, const EventConfig& config = {},
                         Eigen::Index channel = 0);

struct RawCycle {
  Eigen::MatrixXd data;  // 9 x L
  Label label = Label::kNormal;
  Eigen::Index start_index = 0;
};

/// Cycle i covers samples [IC(i), IC(i + 2)).
std::vector<RawCycle> slice_cycles(const MultiModalTrace& trace, const GaitEvents& events);

/// Removes the least-squares slope of every row about its midpoint.
Eigen::MatrixXd detrend_cycle(const Eigen::MatrixXd& cycle);

/// Linear interpolation of every row onto `target` points over [0, L - 1].
Eigen::MatrixXd normalize_length(const Eigen::MatrixXd& cycle, Eigen::Index target = kCycleLength);

struct GaitCycle {
  Eigen::MatrixXd data;  // 9 x 200
  Label label = Label::kNormal;
  std::string source_walk;
  Eigen::Index start_index = 0;

  /// Throws ShapeError unless the data is 9 x 200 and finite.
  void validate() const;
};

struct NormStats {
  Eigen::VectorXd mean;  // per channel
  Eigen::VectorXd std;   // population standard deviation, > 0
};

NormStats fit_norm_stats(const std::vector<GaitCycle>& cycles);
GaitCycle apply_norm(const GaitCycle& cycle, const NormStats& stats);
GaitCycle invert_norm(const GaitCycle& cycle, const NormStats& stats);

}  // namespace gaitad
