#pragma once

// File formats: sensor CSV, correspondence JSON lines, walk manifests,
// cycle JSON lines and normalization statistics.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gaitad/cycles.hpp"
#include "gaitad/egomotion.hpp"
#include "gaitad/signal.hpp"

namespace gaitad {

namespace fs = std::filesystem;

/// Header `t,<ch0>,...`; one sample per line.
TimedSeries read_series_csv(const fs::path& path);
void write_series_csv(const fs::path& path, const TimedSeries& series);

/// One record per frame: {"frame": n, "matches": [[xp, yp, xc, yc], ...]}.
std::vector<FrameMatches> read_correspondences(const fs::path& path);
void write_correspondences(const fs::path& path, const std::vector<FrameMatches>& frames);

struct WalkManifest {
  std::string id;
  fs::path accel;
  fs::path gyro;
  fs::path angles_or_correspondences;
  Label label = Label::kNormal;
  /// Timing of a `.jsonl` correspondence stream; ignored for angle CSVs.
  /// Unset falls back to the configured frame rate.
  std::optional<double> frame_rate;
  double video_start = 0.0;

  bool has_correspondences() const;
};

Label parse_label(const std::string& text);
std::string label_name(Label label);

/// Relative paths resolve against base_dir.
WalkManifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir, const std::string& fallback_id);
nlohmann::json manifest_to_json(const WalkManifest& m);

/// Accepts a manifest object, an array of manifest objects or paths, or a
/// directory scanned for `manifest.json` / `*.manifest.json` in path order.
std::vector<WalkManifest> load_manifests(const fs::path& path);

void write_cycles(const fs::path& path, const std::vector<GaitCycle>& cycles);
std::vector<GaitCycle> read_cycles(const fs::path& path);

nlohmann::json norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const nlohmann::json& j);
void write_text(const fs::path& path, const std::string& text);

}  // namespace gaitad
