#pragma once

// Synthetic walks with known initial-contact times. Anomalies are simple
// parametric deformations of the normal stride template, not clinical models.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gaitad/config.hpp"
#include "gaitad/egomotion.hpp"
#include "gaitad/io.hpp"
#include "gaitad/signal.hpp"

namespace gaitad {

struct SyntheticWalk {
  std::string id;
  Label label = Label::kNormal;
  std::optional<AnomalyKind> kind;
  TimedSeries accel;
  TimedSeries gyro;
  TimedSeries angles;                         // per-frame roll, pitch, yaw
  std::vector<FrameMatches> correspondences;  // empty unless requested
  double frame_rate = 30.0;
  /// Offset of the video clock relative to the inertial clock.
  double video_start = 0.0;
  double base_interval = 1.0;  // s, walk's mean IC-to-IC time before jitter
  std::vector<double> ic_times;
  std::vector<double> fc_times;
};

/// One walk; identical inputs produce bit-identical output.
SyntheticWalk generate_walk(const SynthConfig& config, int index, Label label,
                            std::optional<AnomalyKind> kind);

/// config.walks walks; the last config.anomalous_walks are anomalous and cycle
/// through config.anomaly_kinds.
std::vector<SyntheticWalk> generate_synthetic(const SynthConfig& config);

/// Writes CSV / JSONL files and a manifest per walk under dir/<id>/, plus
/// dir/manifests.json listing them and dir/ground_truth.json.
std::vector<WalkManifest> write_synthetic(const std::vector<SyntheticWalk>& walks,
                                          const std::filesystem::path& dir);

}  // namespace gaitad
