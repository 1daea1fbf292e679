#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gaitad/dataset.hpp"
#include "gaitad/io.hpp"
#include "gaitad/model_io.hpp"
#include "gaitad/protocol.hpp"
#include "gaitad/synth.hpp"
#include "test_util.hpp"

namespace gaitad {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("gaitad_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Label> label_vector(std::size_t normal, std::size_t anomalous) {
  std::vector<Label> v(normal, Label::kNormal);
  v.insert(v.end(), anomalous, Label::kAnomalous);
  return v;
}

TEST(Config, RoundTrip) {
  PipelineConfig c;
  c.set_seed(42);
  c.encoder.hidden_size = 8;
  c.cnn_train.epochs = 3;
  c.synth.anomaly_kinds = {AnomalyKind::kTilt};
  c.svm.gamma = 0.25;
  const auto j = config_to_json(c);
  const PipelineConfig back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.encoder.hidden_size, 8);
  EXPECT_EQ(back.split.seed, 42u);
  EXPECT_EQ(back.encoder_train.seed, 42u);
}

TEST(Config, PartialOverride) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"encoder": {"hidden_size": 16}})"));
  EXPECT_EQ(c.encoder.hidden_size, 16);
  EXPECT_EQ(c.encoder.layers, 2);
  EXPECT_EQ(c.cnn_train.epochs, 11);
}

TEST(Config, UnknownKeyAndWrongType) {
  EXPECT_GAITAD_ERROR(config_from_json(nlohmann::json::parse(R"({"encoder": {"hiden_size": 16}})")),
                      ErrorCode::kInvalidArgument);
  EXPECT_GAITAD_ERROR(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), ErrorCode::kInvalidArgument);
  EXPECT_GAITAD_ERROR(config_from_json(nlohmann::json::parse(R"({"svm": {"c": "one"}})")),
                      ErrorCode::kInvalidArgument);
}

TEST(Io, SeriesCsvRoundTrip) {
  TempDir tmp;
  TimedSeries s;
  s.timestamps = {0.0, 0.1, 0.30000000000000004, 1e-7 + 0.5};
  s.values.resize(4, 3);
  s.values << 1, 2, 3, -4.5, 1e-300, 6, 7.125, 8, 9, 0.1, 0.2, 1.0 / 3.0;
  s.channel_names = {"x", "y", "z"};
  write_series_csv(tmp.path() / "a.csv", s);
  const auto back = read_series_csv(tmp.path() / "a.csv");
  EXPECT_EQ(back.timestamps, s.timestamps);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.channel_names, s.channel_names);
}

TEST(Io, MalformedCsv) {
  TempDir tmp;
  write_text(tmp.path() / "bad.csv", "t,x\n0,1\n0.1,abc\n");
  EXPECT_GAITAD_ERROR(read_series_csv(tmp.path() / "bad.csv"), ErrorCode::kFormatError);
  write_text(tmp.path() / "back.csv", "t,x\n0,1\n-1,2\n");
  EXPECT_GAITAD_ERROR(read_series_csv(tmp.path() / "back.csv"), ErrorCode::kInvalidTimestamps);
  EXPECT_GAITAD_ERROR(read_series_csv(tmp.path() / "missing.csv"), ErrorCode::kIoError);
}

TEST(Io, CorrespondencesRoundTrip) {
  TempDir tmp;
  Rng rng(1);
  std::vector<FrameMatches> frames(3);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    frames[n].frame_index = static_cast<int>(n + 1);
    for (int k = 0; k < 9; ++k) {
      Correspondence c;
      c.p_prev = Vec3(rng.normal(), rng.normal(), 1.0);
      c.p_curr = Vec3(rng.normal(), rng.normal(), 1.0);
      frames[n].matches.push_back(c);
    }
  }
  write_correspondences(tmp.path() / "m.jsonl", frames);
  const auto back = read_correspondences(tmp.path() / "m.jsonl");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(back[n].frame_index, frames[n].frame_index);
    for (std::size_t k = 0; k < 9; ++k) {
      EXPECT_EQ(back[n].matches[k].p_prev, frames[n].matches[k].p_prev);
      EXPECT_EQ(back[n].matches[k].p_curr, frames[n].matches[k].p_curr);
    }
  }
}

TEST(Io, CyclesAndNormStatsRoundTrip) {
  TempDir tmp;
  Rng rng(2);
  std::vector<GaitCycle> cycles(3);
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    cycles[i].data.resize(9, kCycleLength);
    for (Eigen::Index k = 0; k < cycles[i].data.size(); ++k) cycles[i].data.data()[k] = rng.normal();
    cycles[i].label = i == 1 ? Label::kAnomalous : Label::kNormal;
    cycles[i].source_walk = "w" + std::to_string(i);
    cycles[i].start_index = static_cast<Eigen::Index>(10 * i);
  }
  write_cycles(tmp.path() / "c.jsonl", cycles);
  const auto back = read_cycles(tmp.path() / "c.jsonl");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].data, cycles[i].data);
    EXPECT_EQ(back[i].label, cycles[i].label);
    EXPECT_EQ(back[i].source_walk, cycles[i].source_walk);
    EXPECT_EQ(back[i].start_index, cycles[i].start_index);
  }
  const NormStats stats = fit_norm_stats(cycles);
  const NormStats again = norm_stats_from_json(norm_stats_to_json(stats));
  EXPECT_EQ(again.mean, stats.mean);
  EXPECT_EQ(again.std, stats.std);
}

TEST(Io, ManifestDirectoryScan) {
  TempDir tmp;
  SynthConfig cfg;
  cfg.walks = 3;
  cfg.anomalous_walks = 1;
  cfg.steps_per_walk = 4;
  const auto written = write_synthetic(generate_synthetic(cfg), tmp.path());
  const auto from_list = load_manifests(tmp.path() / "manifests.json");
  const auto from_dir = load_manifests(tmp.path());
  ASSERT_EQ(from_list.size(), 3u);
  ASSERT_EQ(from_dir.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(from_list[i].id, written[i].id);
    EXPECT_EQ(from_dir[i].id, written[i].id);
    EXPECT_EQ(fs::weakly_canonical(from_list[i].accel), fs::weakly_canonical(written[i].accel));
    EXPECT_EQ(from_list[i].label, written[i].label);
  }
  EXPECT_EQ(from_list[2].label, Label::kAnomalous);
  EXPECT_GAITAD_ERROR(parse_label("sideways"), ErrorCode::kFormatError);
}

TEST(Synth, DeterministicUnderSeed) {
  SynthConfig cfg;
  cfg.walks = 4;
  cfg.anomalous_walks = 2;
  cfg.steps_per_walk = 5;
  cfg.correspondences = true;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].accel.values, b[i].accel.values);
    EXPECT_EQ(a[i].accel.timestamps, b[i].accel.timestamps);
    EXPECT_EQ(a[i].gyro.values, b[i].gyro.values);
    EXPECT_EQ(a[i].angles.values, b[i].angles.values);
    EXPECT_EQ(a[i].ic_times, b[i].ic_times);
    EXPECT_EQ(a[i].correspondences.size(), b[i].correspondences.size());
  }
  cfg.seed = 2;
  EXPECT_NE(generate_synthetic(cfg)[0].accel.values, a[0].accel.values);
}

TEST(Synth, AnomalyKindsCycle) {
  SynthConfig cfg;
  cfg.walks = 10;
  cfg.anomalous_walks = 5;
  cfg.steps_per_walk = 3;
  const auto walks = generate_synthetic(cfg);
  EXPECT_EQ(walks[4].label, Label::kNormal);
  EXPECT_FALSE(walks[4].kind.has_value());
  EXPECT_EQ(walks[5].kind, AnomalyKind::kShuffle);
  EXPECT_EQ(walks[8].kind, AnomalyKind::kTilt);
  EXPECT_EQ(walks[9].kind, AnomalyKind::kShuffle);
  EXPECT_EQ(walks[9].label, Label::kAnomalous);
}

TEST(Synth, SlowdownStretchesCadence) {
  SynthConfig cfg;
  cfg.steps_per_walk = 12;
  for (int index = 0; index < 5; ++index) {
    const auto normal = generate_walk(cfg, index, Label::kNormal, std::nullopt);
    const auto slow = generate_walk(cfg, index, Label::kAnomalous, AnomalyKind::kSlow);
    auto mean_interval = [](const std::vector<double>& ic) { return (ic.back() - ic.front()) / static_cast<double>(ic.size() - 1); };
    const double ratio = mean_interval(slow.ic_times) / mean_interval(normal.ic_times);
    EXPECT_NEAR(ratio, 1.0 / 0.7, 0.05 / 0.7);
  }
}

TEST(Dataset, PrecomputedAnglesMatchCorrespondencePath) {
  TempDir tmp;
  SynthConfig cfg;
  cfg.walks = 2;
  cfg.anomalous_walks = 1;
  cfg.anomaly_kinds = {AnomalyKind::kTilt};
  cfg.steps_per_walk = 8;
  cfg.correspondences = true;
  const auto walks = generate_synthetic(cfg);
  const auto manifests = write_synthetic(walks, tmp.path());
  const PipelineConfig pc;
  for (std::size_t w = 0; w < walks.size(); ++w) {
    ASSERT_TRUE(manifests[w].has_correspondences());
    WalkManifest angles = manifests[w];
    angles.angles_or_correspondences = tmp.path() / "angles.csv";
    write_series_csv(angles.angles_or_correspondences, walks[w].angles);
    const auto via_matches = walk_cycles(load_walk(manifests[w], pc), pc);
    const auto via_angles = walk_cycles(load_walk(angles, pc), pc);
    ASSERT_EQ(via_matches.size(), via_angles.size());
    ASSERT_GT(via_matches.size(), 0u);
    for (std::size_t i = 0; i < via_matches.size(); ++i) {
      EXPECT_LT((via_matches[i].data - via_angles[i].data).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Dataset, EmptyManifestListFails) {
  EXPECT_GAITAD_ERROR(build_dataset({}, PipelineConfig{}), ErrorCode::kPipelineFailure);
}

TEST(Dataset, ShortWalkIsSkippedAndLogged) {
  TempDir tmp;
  SynthConfig cfg;
  cfg.walks = 2;
  cfg.anomalous_walks = 0;
  cfg.steps_per_walk = 6;
  auto walks = generate_synthetic(cfg);
  SynthConfig short_cfg = cfg;
  short_cfg.steps_per_walk = 1;
  walks.push_back(generate_walk(short_cfg, 7, Label::kNormal, std::nullopt));
  auto& s = walks.back();
  // Keep only the first 1.5 s of every stream.
  auto crop = [](TimedSeries& ts, double end) {
    std::size_t n = 0;
    while (n < ts.timestamps.size() && ts.timestamps[n] <= end) ++n;
    ts.timestamps.resize(n);
    ts.values.conservativeResize(static_cast<Eigen::Index>(n), Eigen::NoChange);
  };
  crop(s.accel, 1.5);
  crop(s.gyro, 1.5);
  crop(s.angles, 1.5);
  const auto manifests = write_synthetic(walks, tmp.path());
  std::ostringstream log;
  const auto ds = build_dataset(manifests, PipelineConfig{}, &log);
  ASSERT_EQ(ds.walks.size(), 3u);
  EXPECT_EQ(ds.walks[2].error, "NoGaitDetected");
  EXPECT_EQ(ds.walks[2].cycles, 0u);
  EXPECT_GT(ds.walks[0].cycles, 0u);
  EXPECT_NE(log.str().find(s.id), std::string::npos);
}

TEST(Dataset, AllWalksFailing) {
  TempDir tmp;
  WalkManifest m;
  m.id = "ghost";
  m.accel = tmp.path() / "nope.csv";
  m.gyro = m.accel;
  m.angles_or_correspondences = m.accel;
  EXPECT_GAITAD_ERROR(build_dataset({m}, PipelineConfig{}), ErrorCode::kPipelineFailure);
}

TEST(Split, ReferenceCounts) {
  const auto labels = label_vector(7941, 2744);
  const auto s = compute_split(labels, SplitSpec{});
  EXPECT_EQ(s.encoder_train.size() + s.encoder_test.size(), 4966u);
  EXPECT_EQ(s.encoder_train.size(), 4469u);
  EXPECT_EQ(s.encoder_test.size(), 497u);
  EXPECT_EQ(s.classifier_train.size(), 5147u);
  EXPECT_EQ(s.classifier_test.size(), 572u);
  EXPECT_TRUE(s.unused.empty());
}

TEST(Split, DisjointAndExhaustiveProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t normal = 50 + rng.index(2000);
    const std::size_t anomalous = 20 + rng.index(1500);
    auto labels = label_vector(normal, anomalous);
    rng.shuffle(labels);
    SplitSpec spec;
    spec.seed = rng.next();
    const auto s = compute_split(labels, spec);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto* part : {&s.encoder_train, &s.encoder_test, &s.classifier_train, &s.classifier_test, &s.unused}) {
      seen.insert(part->begin(), part->end());
      total += part->size();
    }
    EXPECT_EQ(total, labels.size());
    EXPECT_EQ(seen.size(), labels.size());
    for (auto i : s.encoder_train) EXPECT_EQ(labels[i], Label::kNormal);
    for (auto i : s.encoder_test) EXPECT_EQ(labels[i], Label::kNormal);
    std::size_t pool_normal = 0;
    std::size_t pool_anomalous = 0;
    for (const auto* part : {&s.classifier_train, &s.classifier_test}) {
      for (auto i : *part) (labels[i] == Label::kNormal ? pool_normal : pool_anomalous)++;
    }
    const double hi = static_cast<double>(std::max(pool_normal, pool_anomalous));
    const double lo = static_cast<double>(std::min(pool_normal, pool_anomalous));
    EXPECT_LE(hi / lo, spec.max_class_ratio + 1e-12);
  }
}

TEST(Split, DeterministicUnderSeed) {
  const auto labels = label_vector(300, 200);
  SplitSpec spec;
  spec.seed = 9;
  const auto a = compute_split(labels, spec);
  const auto b = compute_split(labels, spec);
  EXPECT_EQ(a.classifier_test, b.classifier_test);
  spec.seed = 10;
  EXPECT_NE(compute_split(labels, spec).classifier_test, a.classifier_test);
}

TEST(Split, MissingClassIsDegenerate) {
  EXPECT_GAITAD_ERROR(compute_split(label_vector(100, 0), SplitSpec{}), ErrorCode::kDegenerateDataset);
}

TEST(Report, ClassSharesOfReferenceTestSet) {
  std::vector<Label> truth = label_vector(282, 290);
  const auto r = make_report("svm", truth, truth, {});
  EXPECT_EQ(r.total(), 572);
  const auto j = report_to_json(r);
  EXPECT_NEAR(r.percent(0, 0), 49.3, 0.05);
  EXPECT_NEAR(r.percent(1, 1), 50.7, 0.05);
  EXPECT_NEAR(r.percent(0, 0) + r.percent(1, 1), 100.0, 1e-9);
  EXPECT_EQ(r.accuracy(), 1.0);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("282 (49.3%)"), std::string::npos);
  EXPECT_NE(text.find("290 (50.7%)"), std::string::npos);
}

TEST(Report, PrecisionAndRecall) {
  const std::vector<Label> truth{Label::kNormal, Label::kNormal, Label::kAnomalous, Label::kAnomalous, Label::kAnomalous};
  const std::vector<Label> pred{Label::kNormal, Label::kAnomalous, Label::kAnomalous, Label::kAnomalous, Label::kNormal};
  const auto r = make_report("x", truth, pred, {});
  EXPECT_EQ(r.counts[0][0], 1);
  EXPECT_EQ(r.counts[0][1], 1);
  EXPECT_EQ(r.counts[1][0], 1);
  EXPECT_EQ(r.counts[1][1], 2);
  EXPECT_DOUBLE_EQ(r.accuracy(), 0.6);
  EXPECT_DOUBLE_EQ(r.precision(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.precision(0), 0.5);
  EXPECT_DOUBLE_EQ(r.recall(0), 0.5);
}

TEST(ModelBundle, RoundTrip) {
  TempDir tmp;
  ModelBundle b;
  b.config.encoder.hidden_size = 3;
  b.config.encoder.layers = 1;
  b.autoencoder = Seq2SeqParams::random(b.config.encoder, 1);
  CnnConfig cc;
  cc.width = 4;
  cc.height = 3;
  cc.depth = 1;
  cc.kernel_h = 2;
  cc.kernel_w = 2;
  cc.out_channels = 2;
  cc.pool_size = 1;
  cc.pool_stride = 1;
  b.cnn = CnnParams::random(cc, 2);
  SvmModel svm;
  svm.support_vectors = Eigen::MatrixXd::Random(3, 5);
  svm.coefficients = Eigen::Vector3d(0.5, -0.25, -0.25);
  svm.bias = 0.125;
  svm.gamma = 0.01;
  b.svm = svm;
  NormStats ns;
  ns.mean = Eigen::VectorXd::LinSpaced(9, 0.0, 1.0);
  ns.std = Eigen::VectorXd::Constant(9, 0.3);
  b.norm = ns;
  save_bundle(tmp.path() / "m.json", b);
  const ModelBundle back = load_bundle(tmp.path() / "m.json");
  EXPECT_EQ(bundle_to_json(back), bundle_to_json(b));
  ASSERT_TRUE(back.autoencoder && back.cnn && back.svm && back.norm);
  EXPECT_EQ(back.svm->support_vectors, svm.support_vectors);
  EXPECT_EQ(back.cnn->kernel, b.cnn->kernel);
  save_bundle(tmp.path() / "m2.json", back);
  EXPECT_EQ(slurp(tmp.path() / "m.json"), slurp(tmp.path() / "m2.json"));
}

TEST(ModelBundle, VersionMismatch) {
  auto j = bundle_to_json(ModelBundle{});
  j["format_version"] = kBundleFormatVersion + 1;
  EXPECT_GAITAD_ERROR(bundle_from_json(j), ErrorCode::kFormatError);
}

}  // namespace
}  // namespace gaitad
