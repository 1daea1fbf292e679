#include "gaitad/config.hpp"

#include <set>
#include <string>

#include "gaitad/error.hpp"

namespace gaitad {

using nlohmann::json;

namespace {

class Writer {
 public:
  explicit Writer(json& out) : out_(out) {}

  template <class T>
  void field(const char* key, T& value) {
    out_[key] = value;
  }

  void field(const char* key, std::vector<AnomalyKind>& kinds) {
    json arr = json::array();
    for (auto k : kinds) arr.push_back(anomaly_name(k));
    out_[key] = arr;
  }

  template <class F>
  void section(const char* key, F&& body) {
    json child = json::object();
    Writer w(child);
    body(w);
    out_[key] = child;
  }

 private:
  json& out_;
};

class Reader {
 public:
  Reader(const json& in, std::string path) : in_(in), path_(std::move(path)) {
    if (!in_.is_object()) fail(ErrorCode::kInvalidArgument, "config: " + label() + " must be an object");
  }

  template <class T>
  void field(const char* key, T& value) {
    const auto it = in_.find(key);
    seen_.insert(key);
    if (it == in_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected number");
      }
      value = it->template get<T>();
    } catch (const std::exception& e) {
      fail(ErrorCode::kInvalidArgument, "config: " + child_label(key) + ": " + e.what());
    }
  }

  void field(const char* key, std::vector<AnomalyKind>& kinds) {
    const auto it = in_.find(key);
    seen_.insert(key);
    if (it == in_.end()) return;
    if (!it->is_array()) fail(ErrorCode::kInvalidArgument, "config: " + child_label(key) + ": expected array");
    kinds.clear();
    for (const auto& v : *it) {
      if (!v.is_string()) fail(ErrorCode::kInvalidArgument, "config: " + child_label(key) + ": expected names");
      kinds.push_back(parse_anomaly(v.get<std::string>()));
    }
  }

  template <class F>
  void section(const char* key, F&& body) {
    const auto it = in_.find(key);
    seen_.insert(key);
    if (it == in_.end()) return;
    Reader r(*it, child_label(key));
    body(r);
    r.finish();
  }

  void finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorCode::kInvalidArgument, "config: unknown key " + child_label(it.key()));
    }
  }

 private:
  std::string label() const { return path_.empty() ? "document" : path_; }
  std::string child_label(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& in_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class V>
void visit_train(V& v, TrainConfig& c) {
  v.field("initial_lr", c.initial_lr);
  v.field("decay_steps", c.decay_steps);
  v.field("decay_rate", c.decay_rate);
  v.field("epochs", c.epochs);
  v.field("batch_size", c.batch_size);
  v.field("clip_norm", c.clip_norm);
  v.field("seed", c.seed);
  v.field("max_steps", c.max_steps);
}

template <class V>
void visit(V& v, PipelineConfig& c) {
  v.section("signal", [&](auto& s) {
    s.field("sample_rate", c.signal.sample_rate);
    s.section("lowpass", [&](auto& l) {
      l.field("order", c.signal.lowpass.order);
      l.field("cutoff", c.signal.lowpass.cutoff);
    });
    s.section("align", [&](auto& a) {
      a.field("vertical_accel_channel", c.signal.align.vertical_accel_channel);
      a.field("pitch_channel", c.signal.align.pitch_channel);
      a.field("max_lag", c.signal.align.max_lag);
    });
  });
  v.section("egomotion", [&](auto& s) {
    s.field("frame_rate", c.egomotion.frame_rate);
    s.section("ransac", [&](auto& r) {
      r.field("iterations", c.egomotion.ransac.iterations);
      r.field("threshold", c.egomotion.ransac.threshold);
      r.field("min_inlier_ratio", c.egomotion.ransac.min_inlier_ratio);
      r.field("seed", c.egomotion.ransac.seed);
    });
  });
  v.section("cycles", [&](auto& s) {
    s.field("dog_sigma_short", c.events.dog_sigma_short);
    s.field("dog_sigma_long", c.events.dog_sigma_long);
    s.field("cwt_support", c.events.cwt_support);
    s.field("min_ic_interval", c.events.min_ic_interval);
    s.field("max_ic_interval", c.events.max_ic_interval);
    s.field("fc_window_fraction", c.events.fc_window_fraction);
    s.field("min_depth_fraction", c.events.min_depth_fraction);
    s.field("min_duration", c.events.min_duration);
  });
  v.section("encoder", [&](auto& s) {
    s.field("layers", c.encoder.layers);
    s.field("hidden_size", c.encoder.hidden_size);
    s.field("bidirectional", c.encoder.bidirectional);
    s.field("dropout_keep", c.encoder.dropout_keep);
    s.field("input_size", c.encoder.input_size);
    s.section("train", [&](auto& t) { visit_train(t, c.encoder_train); });
  });
  v.section("cnn", [&](auto& s) {
    s.field("width", c.cnn.width);
    s.field("height", c.cnn.height);
    s.field("depth", c.cnn.depth);
    s.field("kernel_h", c.cnn.kernel_h);
    s.field("kernel_w", c.cnn.kernel_w);
    s.field("out_channels", c.cnn.out_channels);
    s.field("conv_stride", c.cnn.conv_stride);
    s.field("pool_size", c.cnn.pool_size);
    s.field("pool_stride", c.cnn.pool_stride);
    s.field("kernel_init_stddev", c.cnn.kernel_init_stddev);
    s.section("train", [&](auto& t) { visit_train(t, c.cnn_train); });
  });
  v.section("svm", [&](auto& s) {
    s.field("c", c.svm.c);
    s.field("gamma", c.svm.gamma);
    s.field("tol", c.svm.tol);
    s.field("max_iterations", c.svm.max_iterations);
  });
  v.section("split", [&](auto& s) {
    s.field("encoder_fraction", c.split.encoder_fraction);
    s.field("encoder_train_fraction", c.split.encoder_train_fraction);
    s.field("classifier_train_fraction", c.split.classifier_train_fraction);
    s.field("max_class_ratio", c.split.max_class_ratio);
    s.field("seed", c.split.seed);
  });
  v.section("synth", [&](auto& s) {
    auto& y = c.synth;
    s.field("walks", y.walks);
    s.field("anomalous_walks", y.anomalous_walks);
    s.field("anomaly_kinds", y.anomaly_kinds);
    s.field("steps_per_walk", y.steps_per_walk);
    s.field("step_interval", y.step_interval);
    s.field("interval_spread", y.interval_spread);
    s.field("step_jitter", y.step_jitter);
    s.field("imu_rate", y.imu_rate);
    s.field("imu_rate_jitter", y.imu_rate_jitter);
    s.field("frame_rate", y.frame_rate);
    s.field("max_video_delay", y.max_video_delay);
    s.field("accel_noise", y.accel_noise);
    s.field("gyro_noise", y.gyro_noise);
    s.field("angle_noise", y.angle_noise);
    s.field("slow_factor", y.slow_factor);
    s.field("tilt_angle", y.tilt_angle);
    s.field("correspondences", y.correspondences);
    s.field("points_per_frame", y.points_per_frame);
    s.field("seed", y.seed);
  });
}

}  // namespace

void SplitSpec::validate() const {
  auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_unit(encoder_fraction) || !in_unit(encoder_train_fraction) || !in_unit(classifier_train_fraction)) {
    fail(ErrorCode::kInvalidArgument, "split fractions must lie in (0, 1)");
  }
  if (!(max_class_ratio >= 1.0)) fail(ErrorCode::kInvalidArgument, "max_class_ratio must be >= 1");
}

std::string anomaly_name(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kShuffle: return "shuffle";
    case AnomalyKind::kHemiplegic: return "hemiplegic";
    case AnomalyKind::kSlow: return "slow";
    case AnomalyKind::kTilt: return "tilt";
  }
  return "unknown";
}

AnomalyKind parse_anomaly(const std::string& name) {
  if (name == "shuffle") return AnomalyKind::kShuffle;
  if (name == "hemiplegic") return AnomalyKind::kHemiplegic;
  if (name == "slow") return AnomalyKind::kSlow;
  if (name == "tilt") return AnomalyKind::kTilt;
  fail(ErrorCode::kInvalidArgument, "unknown anomaly kind '" + name + "'");
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  encoder_train.seed = seed;
  cnn_train.seed = seed;
  split.seed = seed;
  synth.seed = seed;
}

json config_to_json(const PipelineConfig& config) {
  PipelineConfig copy = config;
  json out = json::object();
  Writer w(out);
  visit(w, copy);
  return out;
}

PipelineConfig config_from_json(const json& j, const PipelineConfig& base) {
  PipelineConfig out = base;
  Reader r(j, "");
  visit(r, out);
  r.finish();
  out.encoder.validate();
  out.split.validate();
  return out;
}

}  // namespace gaitad
