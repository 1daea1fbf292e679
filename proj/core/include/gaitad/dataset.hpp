#pragma once

// Walk-to-cycles processing: conditioning, optional ego-motion, event
// detection, slicing, detrending and length normalization.

#include <iosfwd>
#include <string>
#include <vector>

#include "gaitad/config.hpp"
#include "gaitad/cycles.hpp"
#include "gaitad/io.hpp"
#include "gaitad/signal.hpp"

namespace gaitad {

struct WalkInputs {
  std::string id;
  Label label = Label::kNormal;
  TimedSeries accel;
  TimedSeries gyro;
  TimedSeries angles;
};

/// Reads the walk's files, running ego-motion when the manifest points at
/// correspondences.
WalkInputs load_walk(const WalkManifest& manifest, const PipelineConfig& config);

/// Resamples every stream, low-passes the inertial ones and aligns.
MultiModalTrace condition_walk(const WalkInputs& walk, const PipelineConfig& config);

/// Detrended, length-normalized (not z-normalized) cycles of one walk.
std::vector<GaitCycle> walk_cycles(const WalkInputs& walk, const PipelineConfig& config);

struct WalkStatus {
  std::string id;
  std::size_t cycles = 0;
  std::string error;  // error code name, empty on success
  std::string message;
};

struct Dataset {
  std::vector<GaitCycle> cycles;
  NormStats stats;
  std::vector<WalkStatus> walks;
};

/// Failing walks are logged and skipped; PipelineFailure when none succeed.
Dataset build_dataset(const std::vector<WalkManifest>& manifests, const PipelineConfig& config,
                      std::ostream* log = nullptr);

}  // namespace gaitad
