#include "gaitad/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gaitad/error.hpp"
#include "gaitad/io.hpp"
#include "gaitad/rng.hpp"

namespace gaitad {

using nlohmann::json;

namespace {

std::size_t share(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

int cls(Label l) { return l == Label::kAnomalous ? 1 : 0; }

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kDegenerateDataset, what);
}

std::vector<const Eigen::MatrixXd*> cycle_ptrs(const PreparedData& data, const std::vector<std::size_t>& idx) {
  std::vector<const Eigen::MatrixXd*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&data.normalized[i].data);
  return out;
}

std::vector<Label> labels_of(const PreparedData& data, const std::vector<std::size_t>& idx) {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data.normalized[i].label);
  return out;
}

}  // namespace

SplitIndices compute_split(const std::vector<Label>& labels, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> normal;
  std::vector<std::size_t> anomalous;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::kNormal ? normal : anomalous).push_back(i);
  }
  require(!normal.empty() && !anomalous.empty(), "split: both labels are required");

  Rng rng(spec.seed);
  rng.shuffle(normal);
  rng.shuffle(anomalous);

  SplitIndices s;
  const std::size_t n_encoder = share(normal.size(), spec.encoder_fraction);
  const std::size_t n_encoder_train = share(n_encoder, spec.encoder_train_fraction);
  require(n_encoder_train > 0 && n_encoder_train < n_encoder, "split: too few normal cycles for the encoder");
  require(n_encoder < normal.size(), "split: no normal cycles left for the classifier");
  s.encoder_train.assign(normal.begin(), normal.begin() + static_cast<std::ptrdiff_t>(n_encoder_train));
  s.encoder_test.assign(normal.begin() + static_cast<std::ptrdiff_t>(n_encoder_train),
                        normal.begin() + static_cast<std::ptrdiff_t>(n_encoder));

  std::vector<std::size_t> pool_normal(normal.begin() + static_cast<std::ptrdiff_t>(n_encoder), normal.end());
  std::vector<std::size_t> pool_anomalous = anomalous;
  auto& major = pool_normal.size() >= pool_anomalous.size() ? pool_normal : pool_anomalous;
  const auto& minor = pool_normal.size() >= pool_anomalous.size() ? pool_anomalous : pool_normal;
  if (static_cast<double>(major.size()) > spec.max_class_ratio * static_cast<double>(minor.size())) {
    s.unused.assign(major.begin() + static_cast<std::ptrdiff_t>(minor.size()), major.end());
    major.resize(minor.size());
  }

  std::vector<std::size_t> pool = pool_normal;
  pool.insert(pool.end(), pool_anomalous.begin(), pool_anomalous.end());
  rng.shuffle(pool);
  const std::size_t n_train = share(pool.size(), spec.classifier_train_fraction);
  require(n_train > 0 && n_train < pool.size(), "split: too few cycles for the classifier");
  s.classifier_train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.classifier_test.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());

  bool train_normal = false;
  bool train_anomalous = false;
  for (auto i : s.classifier_train) (labels[i] == Label::kNormal ? train_normal : train_anomalous) = true;
  require(train_normal && train_anomalous, "split: classifier training set holds a single class");
  std::sort(s.unused.begin(), s.unused.end());
  return s;
}

double EvalReport::accuracy() const {
  const long n = total();
  return n > 0 ? static_cast<double>(counts[0][0] + counts[1][1]) / static_cast<double>(n) : 0.0;
}

double EvalReport::percent(int truth, int predicted) const {
  const long n = total();
  return n > 0 ? 100.0 * static_cast<double>(counts[truth][predicted]) / static_cast<double>(n) : 0.0;
}

double EvalReport::precision(int c) const {
  const long predicted = counts[0][c] + counts[1][c];
  return predicted > 0 ? static_cast<double>(counts[c][c]) / static_cast<double>(predicted) : 0.0;
}

double EvalReport::recall(int c) const {
  const long actual = counts[c][0] + counts[c][1];
  return actual > 0 ? static_cast<double>(counts[c][c]) / static_cast<double>(actual) : 0.0;
}

EvalReport make_report(const std::string& model, const std::vector<Label>& truth,
                       const std::vector<Label>& predicted, const std::vector<std::size_t>& test_indices) {
  if (truth.size() != predicted.size()) fail(ErrorCode::kInvalidArgument, "report: label count mismatch");
  EvalReport r;
  r.model = model;
  r.test_indices = test_indices;
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.counts[cls(truth[i])][cls(predicted[i])];
  return r;
}

json report_to_json(const EvalReport& r) {
  json j;
  j["model"] = r.model;
  j["test_size"] = r.total();
  j["accuracy"] = r.accuracy();
  j["confusion_counts"] = {{{"true", "normal"}, {"predicted_normal", r.counts[0][0]}, {"predicted_anomalous", r.counts[0][1]}},
                           {{"true", "anomalous"}, {"predicted_normal", r.counts[1][0]}, {"predicted_anomalous", r.counts[1][1]}}};
  j["confusion_percent"] = {{{"true", "normal"}, {"predicted_normal", r.percent(0, 0)}, {"predicted_anomalous", r.percent(0, 1)}},
                            {{"true", "anomalous"}, {"predicted_normal", r.percent(1, 0)}, {"predicted_anomalous", r.percent(1, 1)}}};
  j["precision"] = {{"normal", r.precision(0)}, {"anomalous", r.precision(1)}};
  j["recall"] = {{"normal", r.recall(0)}, {"anomalous", r.recall(1)}};
  j["test_indices"] = r.test_indices;
  return j;
}

std::string format_report(const EvalReport& r) {
  char buf[512];
  std::string out = r.model + " confusion matrix on " + std::to_string(r.total()) + " test cycles\n";
  std::snprintf(buf, sizeof buf, "%-12s | %-24s | %-24s\n", "", "predicted \"normal\"", "predicted \"anomalous\"");
  out += buf;
  const char* names[2] = {"normal", "anomalous"};
  for (int t = 0; t < 2; ++t) {
    char a[32];
    char b[32];
    std::snprintf(a, sizeof a, "%ld (%.1f%%)", r.counts[t][0], r.percent(t, 0));
    std::snprintf(b, sizeof b, "%ld (%.1f%%)", r.counts[t][1], r.percent(t, 1));
    std::snprintf(buf, sizeof buf, "%-12s | %-24s | %-24s\n", names[t], a, b);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy %.3f%%  precision normal/anomalous %.3f/%.3f  recall normal/anomalous %.3f/%.3f\n",
                100.0 * r.accuracy(), r.precision(0), r.precision(1), r.recall(0), r.recall(1));
  out += buf;
  return out;
}

PreparedData prepare_data(const std::vector<GaitCycle>& cycles, const PipelineConfig& config) {
  std::vector<Label> labels;
  for (const auto& c : cycles) labels.push_back(c.label);
  const SplitIndices split = compute_split(labels, config.split);
  std::vector<GaitCycle> encoder_cycles;
  for (auto i : split.encoder_train) encoder_cycles.push_back(cycles[i]);
  return prepare_data(cycles, config, fit_norm_stats(encoder_cycles));
}

PreparedData prepare_data(const std::vector<GaitCycle>& cycles, const PipelineConfig& config,
                          const NormStats& norm) {
  std::vector<Label> labels;
  for (const auto& c : cycles) labels.push_back(c.label);
  PreparedData d;
  d.split = compute_split(labels, config.split);
  d.norm = norm;
  d.normalized.reserve(cycles.size());
  for (const auto& c : cycles) d.normalized.push_back(apply_norm(c, norm));
  return d;
}

EncoderStage train_encoder_stage(const PreparedData& data, const PipelineConfig& config, std::ostream* log) {
  std::vector<GaitCycle> train;
  for (auto i : data.split.encoder_train) train.push_back(data.normalized[i]);
  if (log) *log << "train-encoder: " << train.size() << " normal cycles\n";
  auto result = train_autoencoder(train, Seq2SeqParams::random(config.encoder, config.encoder_train.seed),
                                  config.encoder_train);
  EncoderStage stage;
  stage.params = std::move(result.params);
  stage.loss_history = std::move(result.loss_history);
  const auto test = cycle_ptrs(data, data.split.encoder_test);
  stage.test_loss = batch_loss(test, stage.params, Mode::kInfer, 0, nullptr);
  if (log) {
    *log << "train-encoder: " << result.steps << " steps, final batch loss "
         << (stage.loss_history.empty() ? 0.0 : stage.loss_history.back()) << ", test loss " << stage.test_loss
         << "\n";
  }
  return stage;
}

Eigen::MatrixXd encode_cycles(const PreparedData& data, const std::vector<std::size_t>& indices,
                              const Seq2SeqParams& params) {
  return encode_states(cycle_ptrs(data, indices), params);
}

CnnParams train_cnn_stage(const PreparedData& data, const Seq2SeqParams& encoder, const PipelineConfig& config,
                          std::ostream* log) {
  const Eigen::MatrixXd states = encode_cycles(data, data.split.classifier_train, encoder);
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index k = 0; k < states.cols(); ++k) xs.emplace_back(states.col(k));
  const auto result = train_classifier(xs, labels_of(data, data.split.classifier_train), config.cnn, config.cnn_train);
  if (log) {
    *log << "train-classifier: " << result.steps << " steps, final batch loss "
         << (result.loss_history.empty() ? 0.0 : result.loss_history.back()) << "\n";
  }
  return result.params;
}

Eigen::MatrixXd flatten_cycles(const PreparedData& data, const std::vector<std::size_t>& indices) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), kCycleChannels * kCycleLength);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Eigen::MatrixXd& d = data.normalized[indices[r]].data;
    for (Eigen::Index c = 0; c < kCycleChannels; ++c) {
      x.block(static_cast<Eigen::Index>(r), c * kCycleLength, 1, kCycleLength) = d.row(c);
    }
  }
  return x;
}

SvmModel train_svm_stage(const PreparedData& data, const PipelineConfig& config, std::ostream* log) {
  const auto result = train_svm(flatten_cycles(data, data.split.classifier_train),
                                labels_of(data, data.split.classifier_train), config.svm);
  if (log) {
    *log << "train-svm: " << result.model.support_vectors.rows() << " support vectors, " << result.iterations
         << " iterations, gamma " << result.model.gamma << "\n";
  }
  return result.model;
}

EvalReport evaluate_cnn(const PreparedData& data, const Seq2SeqParams& encoder, const CnnParams& cnn) {
  const auto& idx = data.split.classifier_test;
  const Eigen::MatrixXd states = encode_cycles(data, idx, encoder);
  std::vector<Label> predicted;
  for (Eigen::Index k = 0; k < states.cols(); ++k) predicted.push_back(classify(states.col(k), cnn).predicted);
  return make_report("rnn-cnn", labels_of(data, idx), predicted, idx);
}

EvalReport evaluate_svm(const PreparedData& data, const SvmModel& svm) {
  const auto& idx = data.split.classifier_test;
  const Eigen::MatrixXd x = flatten_cycles(data, idx);
  std::vector<Label> predicted;
  for (Eigen::Index r = 0; r < x.rows(); ++r) predicted.push_back(predict_svm(svm, x.row(r).transpose()).label);
  return make_report("svm", labels_of(data, idx), predicted, idx);
}

ProtocolResult run_protocol(const std::vector<GaitCycle>& cycles, const PipelineConfig& config, std::ostream* log) {
  const PreparedData data = prepare_data(cycles, config);
  ProtocolResult r;
  r.split = data.split;
  if (log) {
    *log << "split: encoder " << data.split.encoder_train.size() << "/" << data.split.encoder_test.size()
         << ", classifier " << data.split.classifier_train.size() << "/" << data.split.classifier_test.size()
         << ", unused " << data.split.unused.size() << "\n";
  }
  r.encoder = train_encoder_stage(data, config, log);
  const CnnParams cnn = train_cnn_stage(data, r.encoder.params, config, log);
  const SvmModel svm = train_svm_stage(data, config, log);
  r.cnn_report = evaluate_cnn(data, r.encoder.params, cnn);
  r.svm_report = evaluate_svm(data, svm);
  r.bundle.config = config;
  r.bundle.norm = data.norm;
  r.bundle.autoencoder = r.encoder.params;
  r.bundle.cnn = cnn;
  r.bundle.svm = svm;
  return r;
}

json protocol_summary(const ProtocolResult& r) {
  json j;
  j["split"] = {{"encoder_train", r.split.encoder_train.size()},
                {"encoder_test", r.split.encoder_test.size()},
                {"classifier_train", r.split.classifier_train.size()},
                {"classifier_test", r.split.classifier_test.size()},
                {"unused", r.split.unused.size()}};
  j["encoder_test_loss"] = r.encoder.test_loss;
  j["reports"] = {report_to_json(r.cnn_report), report_to_json(r.svm_report)};
  return j;
}

}  // namespace gaitad
