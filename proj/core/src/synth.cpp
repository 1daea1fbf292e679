#include "gaitad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gaitad/error.hpp"
#include "gaitad/rng.hpp"

namespace gaitad {

namespace {

constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Template {
  double accel_vertical = 1.5;
  double accel_lateral = 0.8;
  double accel_forward = 1.0;
  double dip_depth = 3.0;
  double dip_width = 0.025;  // s
  double fc_height = 1.0;
  double fc_width = 0.03;    // s
  double fc_phase = 0.6;
  double gyro_pitch = 0.6;
  double gyro_yaw = 0.8;
  double gyro_roll = 0.3;
  double cam_pitch = 0.02;   // rad per frame
  double cam_roll = 0.01;
  double cam_yaw = 0.005;
};

// Deterministic description of one walk's gait, evaluated at arbitrary times.
struct Gait {
  Template shape;
  std::vector<double> ic;     // IC times, plus the end of the final step
  std::vector<double> amp;    // per step
  std::vector<double> side;   // +1 / -1 per step
  double dip_scale = 1.0;
  double tilt = 0.0;
  double pitch_offset = 0.0;
  double pitch_drift = 0.0;   // rad per second
  double duration = 0.0;

  // Step index containing t, or -1 outside the walking phase.
  std::ptrdiff_t step_at(double t) const {
    if (t < ic.front() || t >= ic.back()) return -1;
    const auto it = std::upper_bound(ic.begin(), ic.end(), t);
    return (it - ic.begin()) - 1;
  }

  double phase(std::ptrdiff_t k, double t) const {
    const auto i = static_cast<std::size_t>(k);
    return (t - ic[i]) / (ic[i + 1] - ic[i]);
  }

  double impulses(double t) const {
    double v = 0.0;
    for (std::size_t k = 0; k + 1 < ic.size(); ++k) {
      const double dt = t - ic[k];
      if (std::abs(dt) < 6.0 * shape.dip_width) {
        v -= shape.dip_depth * amp[k] * dip_scale * std::exp(-0.5 * dt * dt / (shape.dip_width * shape.dip_width));
      }
      const double df = t - fc_time(k);
      if (std::abs(df) < 6.0 * shape.fc_width) {
        v += shape.fc_height * amp[k] * std::exp(-0.5 * df * df / (shape.fc_width * shape.fc_width));
      }
    }
    return v;
  }

  double fc_time(std::size_t k) const { return ic[k] + shape.fc_phase * (ic[k + 1] - ic[k]); }

  Eigen::Vector3d accel(double t) const {
    Eigen::Vector3d a(0.0, kGravity * std::cos(tilt), kGravity * std::sin(tilt));
    const auto k = step_at(t);
    if (k >= 0) {
      const double phi = phase(k, t);
      const double m = amp[static_cast<std::size_t>(k)];
      const double s = side[static_cast<std::size_t>(k)];
      a[0] += s * shape.accel_lateral * m * std::sin(std::numbers::pi * phi);
      a[1] += shape.accel_vertical * m * 0.5 * (1.0 - std::cos(kTwoPi * phi));
      a[2] += shape.accel_forward * m * std::sin(kTwoPi * phi);
    }
    a[1] += impulses(t);
    return a;
  }

  Eigen::Vector3d gyro(double t) const {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    const auto k = step_at(t);
    if (k >= 0) {
      const double phi = phase(k, t);
      const double m = amp[static_cast<std::size_t>(k)];
      const double s = side[static_cast<std::size_t>(k)];
      g[0] = shape.gyro_pitch * m * std::sin(kTwoPi * phi);
      g[1] = s * shape.gyro_yaw * m * std::sin(std::numbers::pi * phi);
      g[2] = s * shape.gyro_roll * m * std::sin(kTwoPi * phi);
    }
    return g;
  }

  Eigen::Vector3d camera(double t) const {
    Eigen::Vector3d r(0.0, pitch_offset + pitch_drift * t, 0.0);  // roll, pitch, yaw
    const auto k = step_at(t);
    if (k >= 0) {
      const double phi = phase(k, t);
      const double m = amp[static_cast<std::size_t>(k)];
      const double s = side[static_cast<std::size_t>(k)];
      r[0] += s * shape.cam_roll * m * std::sin(std::numbers::pi * phi);
      r[1] += shape.cam_pitch * m * 0.5 * (1.0 - std::cos(kTwoPi * phi));
      r[2] += shape.cam_yaw * m * std::sin(kTwoPi * phi);
    }
    return r;
  }
};

std::vector<double> irregular_times(Rng& rng, double rate, double jitter, double duration) {
  std::vector<double> t;
  double now = rng.uniform(0.0, 0.5 / rate);
  while (now <= duration) {
    t.push_back(now);
    now += (1.0 + rng.uniform(-jitter, jitter)) / rate;
  }
  return t;
}

template <class F>
TimedSeries sample(const std::vector<double>& times, std::vector<std::string> names, Rng& rng, double noise,
                   F&& signal) {
  TimedSeries s;
  s.timestamps = times;
  s.channel_names = std::move(names);
  s.values.resize(static_cast<Eigen::Index>(times.size()), 3);
  for (std::size_t n = 0; n < times.size(); ++n) {
    const Eigen::Vector3d v = signal(times[n]);
    for (Eigen::Index c = 0; c < 3; ++c) {
      s.values(static_cast<Eigen::Index>(n), c) = v[c] + (noise > 0.0 ? rng.normal(0.0, noise) : 0.0);
    }
  }
  return s;
}

std::vector<FrameMatches> scene_matches(const TimedSeries& angles, int points, Rng& rng) {
  std::vector<FrameMatches> frames;
  for (std::size_t n = 1; n < angles.size(); ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    const Mat3 r = compose_euler(angles.values(row, 0), angles.values(row, 1), angles.values(row, 2));
    const Vec3 t(rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005), -0.05);
    FrameMatches f;
    f.frame_index = static_cast<int>(n);
    for (int p = 0; p < points; ++p) {
      const Vec3 x_prev(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0), rng.uniform(2.0, 10.0));
      const Vec3 x_curr = r * x_prev + t;
      f.matches.push_back(Correspondence::from_xy(x_prev.x() / x_prev.z(), x_prev.y() / x_prev.z(),
                                                  x_curr.x() / x_curr.z(), x_curr.y() / x_curr.z()));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

SyntheticWalk generate_walk(const SynthConfig& config, int index, Label label, std::optional<AnomalyKind> kind) {
  if (config.steps_per_walk < 1 || !(config.step_interval > 0.0) || !(config.imu_rate > 0.0) ||
      !(config.frame_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "synth: steps, interval and rates must be positive");
  }
  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(index)));
  SyntheticWalk walk;
  char id[32];
  std::snprintf(id, sizeof id, "walk%04d", index);
  walk.id = id;
  walk.label = label;
  walk.kind = kind;
  walk.frame_rate = config.frame_rate;

  Gait gait;
  const double walk_amp = rng.uniform(0.9, 1.1);
  walk.base_interval = config.step_interval * (1.0 + rng.uniform(-config.interval_spread, config.interval_spread));
  double interval = walk.base_interval;
  double amp_scale = 1.0;
  if (kind == AnomalyKind::kShuffle) {
    amp_scale = 0.45;
    gait.dip_scale = 0.4 / 0.45;
  } else if (kind == AnomalyKind::kSlow) {
    interval /= config.slow_factor;
    amp_scale = 0.75;
  } else if (kind == AnomalyKind::kTilt) {
    gait.tilt = config.tilt_angle;
    gait.pitch_offset = 0.01;
  }

  double t = rng.uniform(1.0, 1.5);
  for (int k = 0; k <= config.steps_per_walk; ++k) {
    const double side = (k % 2 == 0) ? 1.0 : -1.0;
    gait.ic.push_back(t);
    if (k == config.steps_per_walk) break;
    double step = interval * (1.0 + rng.uniform(-config.step_jitter, config.step_jitter));
    double amp = walk_amp * amp_scale * rng.uniform(0.95, 1.05);
    if (kind == AnomalyKind::kHemiplegic) {
      step *= 1.0 + 0.15 * side;
      if (side < 0) amp *= 0.5;
    }
    gait.amp.push_back(amp);
    gait.side.push_back(side);
    t += step;
  }
  gait.duration = t + 1.0;
  if (kind == AnomalyKind::kTilt) gait.pitch_drift = 0.01 / gait.duration;
  walk.ic_times.assign(gait.ic.begin(), gait.ic.end() - 1);
  for (std::size_t k = 0; k + 1 < gait.ic.size(); ++k) walk.fc_times.push_back(gait.fc_time(k));

  const auto accel_times = irregular_times(rng, config.imu_rate, config.imu_rate_jitter, gait.duration);
  const auto gyro_times = irregular_times(rng, config.imu_rate, config.imu_rate_jitter, gait.duration);
  walk.accel = sample(accel_times, {"x", "y", "z"}, rng, config.accel_noise, [&](double s) { return gait.accel(s); });
  walk.gyro = sample(gyro_times, {"x", "y", "z"}, rng, config.gyro_noise, [&](double s) { return gait.gyro(s); });

  walk.video_start = rng.uniform(-config.max_video_delay, config.max_video_delay);
  const auto frames = static_cast<std::size_t>(std::floor(gait.duration * config.frame_rate)) + 1;
  walk.angles.channel_names = {"roll", "pitch", "yaw"};
  walk.angles.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frames), 3);
  for (std::size_t n = 0; n < frames; ++n) {
    const double true_time = static_cast<double>(n) / config.frame_rate;
    walk.angles.timestamps.push_back(walk.video_start + true_time);
    if (n == 0) continue;
    Eigen::Vector3d r = gait.camera(true_time);
    if (config.angle_noise > 0.0) {
      for (Eigen::Index c = 0; c < 3; ++c) r[c] += rng.normal(0.0, config.angle_noise);
    }
    walk.angles.values.row(static_cast<Eigen::Index>(n)) = r.transpose();
  }
  if (config.correspondences) walk.correspondences = scene_matches(walk.angles, config.points_per_frame, rng);
  return walk;
}

std::vector<SyntheticWalk> generate_synthetic(const SynthConfig& config) {
  if (config.walks < 1) fail(ErrorCode::kInvalidArgument, "synth: walk count must be at least 1");
  if (config.anomalous_walks < 0 || config.anomalous_walks > config.walks) {
    fail(ErrorCode::kInvalidArgument, "synth: anomalous walk count out of range");
  }
  if (config.anomalous_walks > 0 && config.anomaly_kinds.empty()) {
    fail(ErrorCode::kInvalidArgument, "synth: anomalous walks requested without anomaly kinds");
  }
  std::vector<SyntheticWalk> walks;
  const int normal = config.walks - config.anomalous_walks;
  for (int i = 0; i < config.walks; ++i) {
    if (i < normal) {
      walks.push_back(generate_walk(config, i, Label::kNormal, std::nullopt));
    } else {
      const auto kind = config.anomaly_kinds[static_cast<std::size_t>(i - normal) % config.anomaly_kinds.size()];
      walks.push_back(generate_walk(config, i, Label::kAnomalous, kind));
    }
  }
  return walks;
}

std::vector<WalkManifest> write_synthetic(const std::vector<SyntheticWalk>& walks, const std::filesystem::path& dir) {
  std::vector<WalkManifest> manifests;
  nlohmann::json list = nlohmann::json::array();
  nlohmann::json truth = nlohmann::json::array();
  for (const auto& w : walks) {
    const auto walk_dir = dir / w.id;
    WalkManifest m;
    m.id = w.id;
    m.label = w.label;
    m.frame_rate = w.frame_rate;
    m.video_start = w.video_start;
    m.accel = walk_dir / "accel.csv";
    m.gyro = walk_dir / "gyro.csv";
    write_series_csv(m.accel, w.accel);
    write_series_csv(m.gyro, w.gyro);
    if (!w.correspondences.empty()) {
      m.angles_or_correspondences = walk_dir / "correspondences.jsonl";
      write_correspondences(m.angles_or_correspondences, w.correspondences);
    } else {
      m.angles_or_correspondences = walk_dir / "angles.csv";
      write_series_csv(m.angles_or_correspondences, w.angles);
    }
    nlohmann::json mj = manifest_to_json(m);
    mj["accel"] = "accel.csv";
    mj["gyro"] = "gyro.csv";
    mj["angles_or_correspondences"] = m.angles_or_correspondences.filename().string();
    write_json(walk_dir / "manifest.json", mj);
    list.push_back(w.id + "/manifest.json");
    truth.push_back({{"id", w.id},
                     {"label", label_name(w.label)},
                     {"kind", w.kind ? anomaly_name(*w.kind) : "none"},
                     {"base_interval", w.base_interval},
                     {"video_start", w.video_start},
                     {"ic_times", w.ic_times},
                     {"fc_times", w.fc_times}});
    manifests.push_back(std::move(m));
  }
  write_json(dir / "manifests.json", list);
  write_json(dir / "ground_truth.json", truth);
  return manifests;
}

}  // namespace gaitad
