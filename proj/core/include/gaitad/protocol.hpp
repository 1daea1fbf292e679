#pragma once

// Experimental protocol: disjoint encoder / classifier splits, staged
// training of the autoencoder, CNN and SVM, and confusion-matrix reports.

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

#include "gaitad/config.hpp"
#include "gaitad/cycles.hpp"
#include "gaitad/model_io.hpp"

namespace gaitad {

struct SplitIndices {
  std::vector<std::size_t> encoder_train;
  std::vector<std::size_t> encoder_test;
  std::vector<std::size_t> classifier_train;
  std::vector<std::size_t> classifier_test;
  std::vector<std::size_t> unused;  // removed by class balancing
};

/// Shuffles each class once with spec.seed, reserves a share of the normal
/// cycles for the autoencoder and balances the classifier pool.
/// Throws DegenerateDataset when any partition would be empty.
SplitIndices compute_split(const std::vector<Label>& labels, const SplitSpec& spec);

struct EvalReport {
  std::string model;
  /// counts[true][predicted], 0 = normal, 1 = anomalous.
  long counts[2][2] = {{0, 0}, {0, 0}};
  std::vector<std::size_t> test_indices;

  long total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  double accuracy() const;
  /// Share of the whole test set, in percent.
  double percent(int truth, int predicted) const;
  double precision(int cls) const;
  double recall(int cls) const;
};

EvalReport make_report(const std::string& model, const std::vector<Label>& truth,
                       const std::vector<Label>& predicted, const std::vector<std::size_t>& test_indices);

nlohmann::json report_to_json(const EvalReport& report);
/// Confusion matrix with counts and percentages, one row per true class.
std::string format_report(const EvalReport& report);

struct PreparedData {
  SplitIndices split;
  NormStats norm;
  std::vector<GaitCycle> normalized;  // z-normalized with `norm`
};

/// Split plus statistics fitted on the encoder training cycles only.
PreparedData prepare_data(const std::vector<GaitCycle>& cycles, const PipelineConfig& config);

/// z-normalized copies using existing statistics, with the split recomputed.
PreparedData prepare_data(const std::vector<GaitCycle>& cycles, const PipelineConfig& config,
                          const NormStats& norm);

struct EncoderStage {
  Seq2SeqParams params;
  std::vector<double> loss_history;
  double test_loss = 0.0;  // mean per-cycle summed squared error
};

EncoderStage train_encoder_stage(const PreparedData& data, const PipelineConfig& config,
                                 std::ostream* log = nullptr);

/// state_size x n flattened encoder states of the chosen cycles.
Eigen::MatrixXd encode_cycles(const PreparedData& data, const std::vector<std::size_t>& indices,
                              const Seq2SeqParams& params);

CnnParams train_cnn_stage(const PreparedData& data, const Seq2SeqParams& encoder, const PipelineConfig& config,
                          std::ostream* log = nullptr);

/// Flattened cycles as rows, channel-major within each row.
Eigen::MatrixXd flatten_cycles(const PreparedData& data, const std::vector<std::size_t>& indices);

SvmModel train_svm_stage(const PreparedData& data, const PipelineConfig& config, std::ostream* log = nullptr);

EvalReport evaluate_cnn(const PreparedData& data, const Seq2SeqParams& encoder, const CnnParams& cnn);
EvalReport evaluate_svm(const PreparedData& data, const SvmModel& svm);

struct ProtocolResult {
  ModelBundle bundle;
  SplitIndices split;
  EncoderStage encoder;
  EvalReport cnn_report;
  EvalReport svm_report;
};

ProtocolResult run_protocol(const std::vector<GaitCycle>& cycles, const PipelineConfig& config,
                            std::ostream* log = nullptr);

/// Both reports plus split sizes and the encoder test loss.
nlohmann::json protocol_summary(const ProtocolResult& result);

}  // namespace gaitad
