#pragma once

// Conditioning of raw timestamped sensor streams: resampling onto a uniform
// clock, zero-phase low-pass filtering and cross-modal delay alignment.

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace gaitad {

enum class Label { kNormal = 0, kAnomalous = 1 };

/// Samples with (possibly irregular) timestamps. One row per sample.
struct TimedSeries {
  std::vector<double> timestamps;
  Eigen::MatrixXd values;
  std::vector<std::string> channel_names;

  std::size_t size() const { return timestamps.size(); }
  Eigen::Index channels() const { return values.cols(); }

  /// Throws InvalidTimestamps / InvalidArgument when an invariant is broken.
  void validate() const;
};

/// Samples on the grid start_time + n / sample_rate.
struct UniformSeries {
  double sample_rate = 0.0;
  double start_time = 0.0;
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
  double time_at(Eigen::Index n) const {
    return start_time + static_cast<double>(n) / sample_rate;
  }
  double duration() const {
    return size() > 0 ? static_cast<double>(size() - 1) / sample_rate : 0.0;
  }
};

/// Aligned accelerometer, gyroscope and camera-angle streams of one walk.
struct MultiModalTrace {
  UniformSeries accel;
  UniformSeries gyro;
  UniformSeries angles;  // roll, pitch, yaw
  Label label = Label::kNormal;
};

/// Linear interpolation onto a target_rate grid spanning [first, last]
/// timestamp. Never extrapolates.
UniformSeries resample(const TimedSeries& input, double target_rate);

/// Digital Butterworth low-pass in transfer-function form, a[0] == 1.
struct IirFilter {
  std::vector<double> b;
  std::vector<double> a;
};

/// Bilinear-transform Butterworth design. cutoff must lie in (0, fs/2).
IirFilter design_butterworth_lowpass(int order, double cutoff, double sample_rate);

/// Magnitude response |H(e^{jw})| at frequency f (Hz).
double magnitude_response(const IirFilter& filter, double frequency, double sample_rate);

/// Forward-backward application with mirror reflection padding and steady-state
/// initial conditions. pad_length 0 selects 3 * (order + 1).
Eigen::VectorXd filtfilt(const IirFilter& filter, const Eigen::VectorXd& x,
                         std::size_t pad_length = 0);

struct LowpassConfig {
  int order = 4;
  double cutoff = 40.0;
};

/// Zero-phase Butterworth low-pass applied per channel.
UniformSeries lowpass(const UniformSeries& input, double cutoff, int order = 4);

/// Lag k maximizing the normalized cross-correlation of a[n - k] with b[n]
/// over |k| <= max_lag. A positive lag means b trails a. Ties go to the
/// smallest |k|, then to the positive lag.
int estimate_delay(const UniformSeries& a, const UniformSeries& b, int max_lag,
                   Eigen::Index channel_a = 0, Eigen::Index channel_b = 0);

struct AlignConfig {
  Eigen::Index vertical_accel_channel = 1;
  Eigen::Index pitch_channel = 1;
  int max_lag = 50;
};

/// Coarse registration by start_time followed by delay estimation of the
/// pitch angle against vertical acceleration; crops to the common support.
MultiModalTrace align(const UniformSeries& accel, const UniformSeries& gyro,
                      const UniformSeries& angles, const AlignConfig& config = {});

}  // namespace gaitad
