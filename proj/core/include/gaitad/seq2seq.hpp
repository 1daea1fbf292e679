#pragma once

// Sequence-to-sequence autoencoder: stacked bidirectional peephole-LSTM
// encoder and a stepwise linear decoder, trained on normal gait cycles only.
// The encoder's final state is the embedding handed to the classifiers.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "gaitad/cycles.hpp"
#include "gaitad/lstm.hpp"
#include "gaitad/optim.hpp"

namespace gaitad {

struct EncoderConfig {
  int layers = 2;
  int hidden_size = 64;
  bool bidirectional = true;
  double dropout_keep = 0.8;
  int input_size = static_cast<int>(kCycleChannels);

  int directions() const { return bidirectional ? 2 : 1; }
  Eigen::Index output_width() const { return static_cast<Eigen::Index>(directions()) * hidden_size; }
  /// Length of the flattened final state: layers x directions x (c, h) x hidden.
  Eigen::Index state_size() const { return static_cast<Eigen::Index>(layers) * directions() * 2 * hidden_size; }

  /// Throws InvalidArgument when out of range.
  void validate() const;
};

struct DecoderParams {
  Eigen::MatrixXd weight;  // 9 x output_width
  Eigen::VectorXd bias;    // 9
};

struct Seq2SeqParams {
  EncoderConfig config;
  std::vector<std::vector<LstmLayerParams>> encoder;  // [layer][direction]
  DecoderParams decoder;

  static Seq2SeqParams zeros(const EncoderConfig& config);
  /// Uniform in [-init_scale, init_scale] from a seeded generator.
  static Seq2SeqParams random(const EncoderConfig& config, std::uint64_t seed,
                              double init_scale = 0.08);

  std::vector<ParamRef> tensors();
  Eigen::Index parameter_count() const;
};

/// Final (c, h) of every layer and direction. flatten() orders them layer
/// major, then direction (forward, backward), then c before h.
struct EncoderState {
  std::vector<std::vector<Eigen::VectorXd>> cell;    // [layer][direction]
  std::vector<std::vector<Eigen::VectorXd>> hidden;  // [layer][direction]

  Eigen::VectorXd flatten() const;
};

enum class Mode { kTrain, kInfer };

struct EncodeResult {
  Eigen::MatrixXd outputs;  // output_width x T, top layer, forward rows first
  EncoderState state;
};

/// x is channels x T. In train mode dropout masks come from dropout_seed.
EncodeResult encode(const Eigen::MatrixXd& x, const Seq2SeqParams& params, Mode mode = Mode::kInfer,
                    std::uint64_t dropout_seed = 0);

/// x_hat_i = W_D * output_i + b_D for every step i.
Eigen::MatrixXd decode(const Eigen::MatrixXd& outputs, const DecoderParams& decoder);

/// Sum of squared differences over all steps and channels.
double mse_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);

/// Mean over the batch of the per-cycle summed squared error. When grads is
/// non-null it receives the exact BPTT gradient (overwritten).
double batch_loss(const std::vector<const Eigen::MatrixXd*>& batch, const Seq2SeqParams& params,
                  Mode mode, std::uint64_t dropout_seed, Seq2SeqParams* grads);

/// Flattened final states (state_size x n) in inference mode.
Eigen::MatrixXd encode_states(const std::vector<const Eigen::MatrixXd*>& sequences,
                              const Seq2SeqParams& params, Eigen::Index batch_size = 64);

struct AutoencoderTrainResult {
  Seq2SeqParams params;
  std::vector<double> loss_history;  // one entry per step
  long steps = 0;
};

/// Mini-batch SGD over full-sequence BPTT. Every cycle must be labeled normal.
AutoencoderTrainResult train_autoencoder(const std::vector<GaitCycle>& cycles,
                                         Seq2SeqParams initial, const TrainConfig& config);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  std::string worst_parameter;
  Eigen::Index checked = 0;
};

/// Fourth-order central differences of batch_loss w.r.t. every parameter (or those whose
/// name starts with `only_prefix`) compared against the analytic gradient.
GradientCheckResult gradient_check(const Seq2SeqParams& params, const std::vector<Eigen::MatrixXd>& xs,
                                   double epsilon, Mode mode = Mode::kInfer,
                                   std::uint64_t dropout_seed = 0, const std::string& only_prefix = "");

}  // namespace gaitad
