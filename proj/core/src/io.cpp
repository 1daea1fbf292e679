#include "gaitad/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "gaitad/error.hpp"

namespace gaitad {

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kFormatError, path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                      std::string(s) + "'");
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

TimedSeries read_series_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kFormatError, path.string() + ": empty file");
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "t") {
    fail(ErrorCode::kFormatError, path.string() + ": header must start with 't,'");
  }
  TimedSeries series;
  for (std::size_t k = 1; k < header.size(); ++k) series.channel_names.emplace_back(header[k]);
  const std::size_t channels = header.size() - 1;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      fail(ErrorCode::kFormatError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields");
    }
    series.timestamps.push_back(parse_double(cells[0], path, line_no));
    for (std::size_t k = 1; k < cells.size(); ++k) values.push_back(parse_double(cells[k], path, line_no));
  }
  const auto rows = static_cast<Eigen::Index>(series.timestamps.size());
  series.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, static_cast<Eigen::Index>(channels));
  series.validate();
  return series;
}

void write_series_csv(const fs::path& path, const TimedSeries& series) {
  std::ofstream out = open_out(path);
  std::string text = "t";
  for (const auto& name : series.channel_names) text += "," + name;
  text += "\n";
  for (std::size_t n = 0; n < series.size(); ++n) {
    append_double(text, series.timestamps[n]);
    for (Eigen::Index c = 0; c < series.channels(); ++c) {
      text += ',';
      append_double(text, series.values(static_cast<Eigen::Index>(n), c));
    }
    text += '\n';
  }
  out << text;
}

std::vector<FrameMatches> read_correspondences(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<FrameMatches> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      FrameMatches f;
      f.frame_index = j.at("frame").get<int>();
      for (const auto& m : j.at("matches")) {
        if (m.size() != 4) fail(ErrorCode::kFormatError, "match must have 4 coordinates");
        f.matches.push_back(Correspondence::from_xy(m[0].get<double>(), m[1].get<double>(),
                                                    m[2].get<double>(), m[3].get<double>()));
      }
      frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

void write_correspondences(const fs::path& path, const std::vector<FrameMatches>& frames) {
  std::ofstream out = open_out(path);
  std::string text;
  for (const auto& f : frames) {
    text += "{\"frame\":" + std::to_string(f.frame_index) + ",\"matches\":[";
    for (std::size_t k = 0; k < f.matches.size(); ++k) {
      const auto& m = f.matches[k];
      if (k) text += ',';
      text += '[';
      append_double(text, m.p_prev.x() / m.p_prev.z());
      text += ',';
      append_double(text, m.p_prev.y() / m.p_prev.z());
      text += ',';
      append_double(text, m.p_curr.x() / m.p_curr.z());
      text += ',';
      append_double(text, m.p_curr.y() / m.p_curr.z());
      text += ']';
    }
    text += "]}\n";
  }
  out << text;
}

bool WalkManifest::has_correspondences() const {
  const auto ext = angles_or_correspondences.extension().string();
  return ext == ".jsonl";
}

Label parse_label(const std::string& text) {
  if (text == "normal" || text == "0") return Label::kNormal;
  if (text == "anomalous" || text == "1") return Label::kAnomalous;
  fail(ErrorCode::kFormatError, "unknown label '" + text + "'");
}

std::string label_name(Label label) { return label == Label::kNormal ? "normal" : "anomalous"; }

WalkManifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir, const std::string& fallback_id) {
  try {
    WalkManifest m;
    m.id = j.value("id", fallback_id);
    m.accel = resolve(base_dir, j.at("accel").get<std::string>());
    m.gyro = resolve(base_dir, j.at("gyro").get<std::string>());
    m.angles_or_correspondences = resolve(base_dir, j.at("angles_or_correspondences").get<std::string>());
    const auto& label = j.at("label");
    m.label = label.is_number() ? parse_label(std::to_string(label.get<int>())) : parse_label(label.get<std::string>());
    if (j.contains("frame_rate")) {
      m.frame_rate = j.at("frame_rate").get<double>();
      if (!(*m.frame_rate > 0.0)) fail(ErrorCode::kFormatError, "frame_rate must be positive");
    }
    m.video_start = j.value("video_start", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, "manifest " + fallback_id + ": " + e.what());
  }
}

nlohmann::json manifest_to_json(const WalkManifest& m) {
  nlohmann::json j;
  j["id"] = m.id;
  j["accel"] = m.accel.generic_string();
  j["gyro"] = m.gyro.generic_string();
  j["angles_or_correspondences"] = m.angles_or_correspondences.generic_string();
  j["label"] = label_name(m.label);
  if (m.frame_rate) j["frame_rate"] = *m.frame_rate;
  j["video_start"] = m.video_start;
  return j;
}

std::vector<WalkManifest> load_manifests(const fs::path& path) {
  std::vector<WalkManifest> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      const std::string name = entry.path().filename().string();
      const bool is_manifest = name == "manifest.json" ||
                               (name.size() > 14 && name.ends_with(".manifest.json"));
      if (entry.is_regular_file() && is_manifest) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      out.push_back(manifest_from_json(read_json(f), f.parent_path(), f.parent_path().filename().string()));
    }
    return out;
  }
  const auto j = read_json(path);
  const fs::path base = path.parent_path();
  if (j.is_object()) {
    out.push_back(manifest_from_json(j, base, path.stem().string()));
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (j[k].is_string()) {
        const fs::path p = resolve(base, j[k].get<std::string>());
        out.push_back(manifest_from_json(read_json(p), p.parent_path(), p.parent_path().filename().string()));
      } else {
        out.push_back(manifest_from_json(j[k], base, "walk" + std::to_string(k)));
      }
    }
  } else {
    fail(ErrorCode::kFormatError, path.string() + ": expected a manifest object or array");
  }
  return out;
}

void write_cycles(const fs::path& path, const std::vector<GaitCycle>& cycles) {
  std::ofstream out = open_out(path);
  std::string text;
  for (const auto& c : cycles) {
    text.clear();
    text += "{\"label\":";
    text += c.label == Label::kAnomalous ? '1' : '0';
    text += ",\"walk\":" + nlohmann::json(c.source_walk).dump();
    text += ",\"start\":" + std::to_string(c.start_index) + ",\"data\":[";
    for (Eigen::Index r = 0; r < c.data.rows(); ++r) {
      if (r) text += ',';
      text += '[';
      for (Eigen::Index t = 0; t < c.data.cols(); ++t) {
        if (t) text += ',';
        append_double(text, c.data(r, t));
      }
      text += ']';
    }
    text += "]}\n";
    out << text;
  }
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

std::vector<GaitCycle> read_cycles(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<GaitCycle> cycles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GaitCycle c;
      c.label = j.at("label").get<int>() == 1 ? Label::kAnomalous : Label::kNormal;
      const auto& walk = j.at("walk");
      c.source_walk = walk.is_string() ? walk.get<std::string>() : walk.dump();
      c.start_index = j.at("start").get<Eigen::Index>();
      const auto& data = j.at("data");
      const auto rows = static_cast<Eigen::Index>(data.size());
      const auto cols = rows > 0 ? static_cast<Eigen::Index>(data[0].size()) : 0;
      c.data.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = data[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) fail(ErrorCode::kShapeError, "ragged cycle data");
        for (Eigen::Index t = 0; t < cols; ++t) c.data(r, t) = row[static_cast<std::size_t>(t)].get<double>();
      }
      c.validate();
      cycles.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cycles;
}

nlohmann::json norm_stats_to_json(const NormStats& stats) {
  return {{"mean", std::vector<double>(stats.mean.data(), stats.mean.data() + stats.mean.size())},
          {"std", std::vector<double>(stats.std.data(), stats.std.data() + stats.std.size())}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
  try {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto std = j.at("std").get<std::vector<double>>();
    if (mean.size() != std.size()) fail(ErrorCode::kFormatError, "norm stats: length mismatch");
    NormStats s;
    s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.std = Eigen::Map<const Eigen::VectorXd>(std.data(), static_cast<Eigen::Index>(std.size()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, std::string("norm stats: ") + e.what());
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

}  // namespace gaitad
