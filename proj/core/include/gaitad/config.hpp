#pragma once

// Pipeline configuration: one JSON document with a section per module.
// Every key is optional; missing keys keep their defaults and unknown keys
// are rejected.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "gaitad/cnn.hpp"
#include "gaitad/cycles.hpp"
#include "gaitad/egomotion.hpp"
#include "gaitad/optim.hpp"
#include "gaitad/seq2seq.hpp"
#include "gaitad/signal.hpp"
#include "gaitad/svm.hpp"

namespace gaitad {

struct SignalConfig {
  double sample_rate = 200.0;
  LowpassConfig lowpass;
  AlignConfig align;
};

struct EgoMotionConfig {
  RansacConfig ransac;
  double frame_rate = 30.0;
};

struct SplitSpec {
  /// Share of normal cycles reserved for the autoencoder.
  double encoder_fraction = 0.6254;
  double encoder_train_fraction = 0.9;
  double classifier_train_fraction = 0.9;
  /// Majority class is down-sampled only above this majority:minority ratio.
  double max_class_ratio = 1.2;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when a fraction leaves (0, 1).
  void validate() const;
};

enum class AnomalyKind { kShuffle, kHemiplegic, kSlow, kTilt };

std::string anomaly_name(AnomalyKind kind);
AnomalyKind parse_anomaly(const std::string& name);

struct SynthConfig {
  int walks = 200;
  int anomalous_walks = 60;
  std::vector<AnomalyKind> anomaly_kinds{AnomalyKind::kShuffle, AnomalyKind::kHemiplegic,
                                         AnomalyKind::kSlow, AnomalyKind::kTilt};
  int steps_per_walk = 20;
  double step_interval = 1.0;      // s, mean IC-to-IC time
  double interval_spread = 0.1;    // relative, per-walk uniform spread of the mean
  double step_jitter = 0.03;       // relative, per step
  double imu_rate = 150.0;         // Hz, nominal
  double imu_rate_jitter = 0.3;    // relative spread of sample intervals
  double frame_rate = 30.0;
  double max_video_delay = 0.1;    // s
  double accel_noise = 0.05;
  double gyro_noise = 0.02;
  double angle_noise = 0.0;
  double slow_factor = 0.7;
  double tilt_angle = 0.35;        // rad
  /// Emit correspondences instead of precomputed angles.
  bool correspondences = false;
  int points_per_frame = 40;
  std::uint64_t seed = 1;
};

struct PipelineConfig {
  SignalConfig signal;
  EgoMotionConfig egomotion;
  EventConfig events;
  EncoderConfig encoder;
  TrainConfig encoder_train;
  CnnConfig cnn;
  TrainConfig cnn_train{0.1, 1000, 0.5, 11, 16, 0.0, 1, 0};
  SvmConfig svm;
  SplitSpec split;
  SynthConfig synth;

  /// Applies one global seed to every seeded stage.
  void set_seed(std::uint64_t seed);
};

nlohmann::json config_to_json(const PipelineConfig& config);
/// Overlays the document onto `base`; throws InvalidArgument on unknown keys
/// or wrongly typed values.
PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& base = {});

}  // namespace gaitad
