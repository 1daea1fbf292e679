#include "gaitad/dataset.hpp"

#include <ostream>

#include "gaitad/egomotion.hpp"
#include "gaitad/error.hpp"

namespace gaitad {

WalkInputs load_walk(const WalkManifest& manifest, const PipelineConfig& config) {
  WalkInputs w;
  w.id = manifest.id;
  w.label = manifest.label;
  w.accel = read_series_csv(manifest.accel);
  w.gyro = read_series_csv(manifest.gyro);
  if (manifest.has_correspondences()) {
    const auto frames = read_correspondences(manifest.angles_or_correspondences);
    const PoseChain chain = poses_from_matches(frames, config.egomotion.ransac);
    w.angles = angles_to_series(chain, manifest.frame_rate.value_or(config.egomotion.frame_rate), manifest.video_start);
  } else {
    w.angles = read_series_csv(manifest.angles_or_correspondences);
  }
  for (const TimedSeries* s : {&w.accel, &w.gyro, &w.angles}) {
    if (s->channels() != 3) fail(ErrorCode::kShapeError, "walk " + w.id + ": every stream needs 3 channels");
  }
  return w;
}

MultiModalTrace condition_walk(const WalkInputs& walk, const PipelineConfig& config) {
  const double fs = config.signal.sample_rate;
  const auto& lp = config.signal.lowpass;
  const UniformSeries accel = lowpass(resample(walk.accel, fs), lp.cutoff, lp.order);
  const UniformSeries gyro = lowpass(resample(walk.gyro, fs), lp.cutoff, lp.order);
  const UniformSeries angles = resample(walk.angles, fs);
  MultiModalTrace trace = align(accel, gyro, angles, config.signal.align);
  trace.label = walk.label;
  return trace;
}

std::vector<GaitCycle> walk_cycles(const WalkInputs& walk, const PipelineConfig& config) {
  const MultiModalTrace trace = condition_walk(walk, config);
  const GaitEvents events = detect_events(trace.accel, config.events, config.signal.align.vertical_accel_channel);
  std::vector<GaitCycle> out;
  for (const RawCycle& raw : slice_cycles(trace, events)) {
    GaitCycle c;
    c.data = normalize_length(detrend_cycle(raw.data));
    c.label = walk.label;
    c.source_walk = walk.id;
    c.start_index = raw.start_index;
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

Dataset build_dataset(const std::vector<WalkManifest>& manifests, const PipelineConfig& config, std::ostream* log) {
  if (manifests.empty()) fail(ErrorCode::kPipelineFailure, "no walk manifests supplied");
  Dataset ds;
  for (const auto& m : manifests) {
    WalkStatus status;
    status.id = m.id;
    try {
      auto cycles = walk_cycles(load_walk(m, config), config);
      status.cycles = cycles.size();
      for (auto& c : cycles) ds.cycles.push_back(std::move(c));
    } catch (const Error& e) {
      status.error = std::string(to_string(e.code()));
      status.message = e.what();
      if (log) *log << "skip " << m.id << ": " << status.error << ": " << status.message << "\n";
    }
    ds.walks.push_back(std::move(status));
  }
  if (ds.cycles.empty()) fail(ErrorCode::kPipelineFailure, "every walk failed to produce gait cycles");
  ds.stats = fit_norm_stats(ds.cycles);
  return ds;
}

}  // namespace gaitad
