#include "gaitad/seq2seq.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <string>

#include "gaitad/error.hpp"
#include "gaitad/rng.hpp"

namespace gaitad {

void EncoderConfig::validate() const {
  if (layers < 1) fail(ErrorCode::kInvalidArgument, "encoder needs at least one layer");
  if (hidden_size < 1) fail(ErrorCode::kInvalidArgument, "hidden size must be >= 1");
  if (input_size < 1) fail(ErrorCode::kInvalidArgument, "input size must be >= 1");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "dropout keep probability must lie in (0, 1]");
  }
}

Seq2SeqParams Seq2SeqParams::zeros(const EncoderConfig& config) {
  config.validate();
  Seq2SeqParams p;
  p.config = config;
  for (int l = 0; l < config.layers; ++l) {
    const Eigen::Index in = l == 0 ? config.input_size : config.output_width();
    std::vector<LstmLayerParams> dirs;
    for (int d = 0; d < config.directions(); ++d) {
      dirs.push_back(LstmLayerParams::zeros(in, config.hidden_size));
    }
    p.encoder.push_back(std::move(dirs));
  }
  p.decoder.weight = Eigen::MatrixXd::Zero(config.input_size, config.output_width());
  p.decoder.bias = Eigen::VectorXd::Zero(config.input_size);
  return p;
}

Seq2SeqParams Seq2SeqParams::random(const EncoderConfig& config, std::uint64_t seed,
                                    double init_scale) {
  Seq2SeqParams p = zeros(config);
  Rng rng(seed);
  for (auto& t : p.tensors()) {
    for (Eigen::Index i = 0; i < t.values.size(); ++i) {
      t.values[i] = rng.uniform(-init_scale, init_scale);
    }
  }
  return p;
}

std::vector<ParamRef> Seq2SeqParams::tensors() {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    for (std::size_t d = 0; d < encoder[l].size(); ++d) {
      const std::string prefix =
          "encoder.l" + std::to_string(l) + (d == 0 ? ".fw." : ".bw.");
      for (auto& t : encoder[l][d].tensors(prefix)) out.push_back(std::move(t));
    }
  }
  out.push_back({"decoder.weight",
                 Eigen::Map<Eigen::VectorXd>(decoder.weight.data(), decoder.weight.size())});
  out.push_back({"decoder.bias", Eigen::Map<Eigen::VectorXd>(decoder.bias.data(), decoder.bias.size())});
  return out;
}

Eigen::Index Seq2SeqParams::parameter_count() const {
  Eigen::Index n = decoder.weight.size() + decoder.bias.size();
  for (const auto& layer : encoder) {
    for (const auto& d : layer) {
      n += d.w_input.size() + d.w_recurrent.size() + d.bias.size() + d.peep_input.size() +
           d.peep_forget.size() + d.peep_output.size();
    }
  }
  return n;
}

Eigen::VectorXd EncoderState::flatten() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < cell.size(); ++l) {
    for (std::size_t d = 0; d < cell[l].size(); ++d) total += cell[l][d].size() + hidden[l][d].size();
  }
  Eigen::VectorXd out(total);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < cell.size(); ++l) {
    for (std::size_t d = 0; d < cell[l].size(); ++d) {
      out.segment(pos, cell[l][d].size()) = cell[l][d];
      pos += cell[l][d].size();
      out.segment(pos, hidden[l][d].size()) = hidden[l][d];
      pos += hidden[l][d].size();
    }
  }
  return out;
}

namespace {

struct DirectionPass {
  LstmSequence seq;      // in the direction's own time order
  Eigen::MatrixXd mask;  // H x (T * B) in natural time order; empty when not dropping
};

struct ForwardPass {
  Eigen::Index steps = 0;
  Eigen::Index batch = 0;
  std::vector<std::vector<DirectionPass>> layers;
  Eigen::MatrixXd top;  // output_width x (T * B), natural order
};

Eigen::MatrixXd stack_batch(const std::vector<const Eigen::MatrixXd*>& batch, Eigen::Index rows) {
  const Eigen::Index steps = batch.front()->cols();
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out(rows, steps * b);
  for (Eigen::Index k = 0; k < b; ++k) {
    const Eigen::MatrixXd& x = *batch[static_cast<std::size_t>(k)];
    if (x.rows() != rows || x.cols() != steps) {
      fail(ErrorCode::kShapeError, "sequences in a batch must share shape");
    }
    for (Eigen::Index t = 0; t < steps; ++t) out.col(t * b + k) = x.col(t);
  }
  return out;
}

ForwardPass run_forward(Eigen::MatrixXd input, Eigen::Index batch, const Seq2SeqParams& params,
                        Mode mode, std::uint64_t dropout_seed) {
  const EncoderConfig& cfg = params.config;
  ForwardPass pass;
  pass.batch = batch;
  pass.steps = input.cols() / batch;
  const bool drop = mode == Mode::kTrain && cfg.dropout_keep < 1.0;
  Rng rng(dropout_seed);

  for (int l = 0; l < cfg.layers; ++l) {
    std::vector<DirectionPass> dirs;
    Eigen::MatrixXd next(cfg.output_width(), input.cols());
    for (int d = 0; d < cfg.directions(); ++d) {
      const auto& layer = params.encoder[static_cast<std::size_t>(l)][static_cast<std::size_t>(d)];
      DirectionPass dp;
      dp.seq = lstm_forward(layer, d == 0 ? input : reverse_steps(input, batch), batch);
      Eigen::MatrixXd out = d == 0 ? dp.seq.hidden : reverse_steps(dp.seq.hidden, batch);
      if (drop) {
        dp.mask.resize(out.rows(), out.cols());
        const double inv_keep = 1.0 / cfg.dropout_keep;
        for (Eigen::Index i = 0; i < dp.mask.size(); ++i) {
          dp.mask.data()[i] = rng.bernoulli(cfg.dropout_keep) ? inv_keep : 0.0;
        }
        out.array() *= dp.mask.array();
      }
      next.middleRows(static_cast<Eigen::Index>(d) * cfg.hidden_size, cfg.hidden_size) = out;
      dirs.push_back(std::move(dp));
    }
    pass.layers.push_back(std::move(dirs));
    input = std::move(next);
  }
  pass.top = std::move(input);
  return pass;
}

}  // namespace

EncodeResult encode(const Eigen::MatrixXd& x, const Seq2SeqParams& params, Mode mode,
                    std::uint64_t dropout_seed) {
  if (x.rows() != params.config.input_size || x.cols() < 1) {
    fail(ErrorCode::kShapeError, "encode: input must be input_size x T");
  }
  const ForwardPass pass = run_forward(x, 1, params, mode, dropout_seed);
  EncodeResult result;
  result.outputs = pass.top;
  for (const auto& layer : pass.layers) {
    std::vector<Eigen::VectorXd> cells;
    std::vector<Eigen::VectorXd> hiddens;
    for (const auto& dp : layer) {
      cells.push_back(dp.seq.cell.col(dp.seq.cell.cols() - 1));
      hiddens.push_back(dp.seq.hidden.col(dp.seq.hidden.cols() - 1));
    }
    result.state.cell.push_back(std::move(cells));
    result.state.hidden.push_back(std::move(hiddens));
  }
  return result;
}

Eigen::MatrixXd decode(const Eigen::MatrixXd& outputs, const DecoderParams& decoder) {
  if (outputs.rows() != decoder.weight.cols()) {
    fail(ErrorCode::kShapeError, "decode: encoder width does not match decoder");
  }
  Eigen::MatrixXd x_hat = decoder.weight * outputs;
  x_hat.colwise() += decoder.bias;
  return x_hat;
}

double mse_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    fail(ErrorCode::kShapeError, "mse_loss: shape mismatch");
  }
  return (x - x_hat).squaredNorm();
}

double batch_loss(const std::vector<const Eigen::MatrixXd*>& batch, const Seq2SeqParams& params,
                  Mode mode, std::uint64_t dropout_seed, Seq2SeqParams* grads) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "empty batch");
  const EncoderConfig& cfg = params.config;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::MatrixXd target = stack_batch(batch, cfg.input_size);
  const ForwardPass pass = run_forward(target, b, params, mode, dropout_seed);
  const Eigen::MatrixXd x_hat = decode(pass.top, params.decoder);
  const Eigen::MatrixXd residual = x_hat - target;
  const double loss = residual.squaredNorm() / static_cast<double>(b);
  if (!std::isfinite(loss)) fail(ErrorCode::kNumericalDivergence, "non-finite reconstruction loss");
  if (grads == nullptr) return loss;

  *grads = Seq2SeqParams::zeros(cfg);
  const Eigen::MatrixXd d_xhat = (2.0 / static_cast<double>(b)) * residual;
  grads->decoder.weight.noalias() = d_xhat * pass.top.transpose();
  grads->decoder.bias = d_xhat.rowwise().sum();
  Eigen::MatrixXd d_out = params.decoder.weight.transpose() * d_xhat;

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const Eigen::Index in_rows = l == 0 ? cfg.input_size : cfg.output_width();
    Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(in_rows, d_out.cols());
    for (int d = 0; d < cfg.directions(); ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const DirectionPass& dp = pass.layers[ul][ud];
      Eigen::MatrixXd d_h = d_out.middleRows(static_cast<Eigen::Index>(d) * cfg.hidden_size, cfg.hidden_size);
      if (dp.mask.size() > 0) d_h.array() *= dp.mask.array();
      if (d == 0) {
        d_in += lstm_backward(params.encoder[ul][ud], dp.seq, d_h, grads->encoder[ul][ud]);
      } else {
        d_in += reverse_steps(lstm_backward(params.encoder[ul][ud], dp.seq, reverse_steps(d_h, b),
                                            grads->encoder[ul][ud]),
                              b);
      }
    }
    d_out = std::move(d_in);
  }
  return loss;
}

Eigen::MatrixXd encode_states(const std::vector<const Eigen::MatrixXd*>& sequences,
                              const Seq2SeqParams& params, Eigen::Index batch_size) {
  const EncoderConfig& cfg = params.config;
  Eigen::MatrixXd states(cfg.state_size(), static_cast<Eigen::Index>(sequences.size()));
  for (std::size_t begin = 0; begin < sequences.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(sequences.size(), begin + static_cast<std::size_t>(batch_size));
    const std::vector<const Eigen::MatrixXd*> chunk(sequences.begin() + static_cast<std::ptrdiff_t>(begin),
                                                    sequences.begin() + static_cast<std::ptrdiff_t>(end));
    const auto b = static_cast<Eigen::Index>(chunk.size());
    const ForwardPass pass = run_forward(stack_batch(chunk, cfg.input_size), b, params, Mode::kInfer, 0);
    for (Eigen::Index k = 0; k < b; ++k) {
      Eigen::Index pos = 0;
      const Eigen::Index col = static_cast<Eigen::Index>(begin) + k;
      for (const auto& layer : pass.layers) {
        for (const auto& dp : layer) {
          const Eigen::Index last = (dp.seq.steps - 1) * b + k;
          states.col(col).segment(pos, cfg.hidden_size) = dp.seq.cell.col(last);
          pos += cfg.hidden_size;
          states.col(col).segment(pos, cfg.hidden_size) = dp.seq.hidden.col(last);
          pos += cfg.hidden_size;
        }
      }
    }
  }
  return states;
}

AutoencoderTrainResult train_autoencoder(const std::vector<GaitCycle>& cycles,
                                         Seq2SeqParams initial, const TrainConfig& config) {
  if (cycles.empty()) fail(ErrorCode::kDegenerateDataset, "no cycles to train the autoencoder on");
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    if (cycles[i].label != Label::kNormal) {
      fail(ErrorCode::kInvalidArgument,
           "autoencoder training set contains a non-normal cycle at index " + std::to_string(i));
    }
  }
  if (config.batch_size < 1 || config.epochs < 0 || config.decay_steps < 1) {
    fail(ErrorCode::kInvalidArgument, "invalid training configuration");
  }

  AutoencoderTrainResult result;
  result.params = std::move(initial);
  Rng rng(config.seed);
  std::vector<std::size_t> order(cycles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Seq2SeqParams grads;
  auto params_view = result.params.tensors();

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      std::vector<const Eigen::MatrixXd*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&cycles[order[k]].data);
      const std::uint64_t dropout_seed = config.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(step + 1));
      double loss = 0.0;
      try {
        loss = batch_loss(batch, result.params, Mode::kTrain, dropout_seed, &grads);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNumericalDivergence) {
          fail(ErrorCode::kNumericalDivergence, "training diverged at step " + std::to_string(step));
        }
        throw;
      }
      const auto grad_view = grads.tensors();
      sgd_step(params_view, grad_view, learning_rate(config, step), config.clip_norm);
      result.loss_history.push_back(loss);
      ++step;
    }
  }
  result.steps = step;
  return result;
}

GradientCheckResult gradient_check(const Seq2SeqParams& params, const std::vector<Eigen::MatrixXd>& xs,
                                   double epsilon, Mode mode, std::uint64_t dropout_seed,
                                   const std::string& only_prefix) {
  std::vector<const Eigen::MatrixXd*> batch;
  for (const auto& x : xs) batch.push_back(&x);
  Seq2SeqParams grads;
  batch_loss(batch, params, mode, dropout_seed, &grads);

  Seq2SeqParams probe = params;
  auto probe_view = probe.tensors();
  const auto grad_view = grads.tensors();
  GradientCheckResult result;
  for (std::size_t k = 0; k < probe_view.size(); ++k) {
    if (!only_prefix.empty() && probe_view[k].name.rfind(only_prefix, 0) != 0) continue;
    for (Eigen::Index i = 0; i < probe_view[k].values.size(); ++i) {
      const double saved = probe_view[k].values[i];
      auto loss_at = [&](double offset) {
        probe_view[k].values[i] = saved + offset;
        return batch_loss(batch, probe, mode, dropout_seed, nullptr);
      };
      const double near = loss_at(epsilon) - loss_at(-epsilon);
      const double far = loss_at(2.0 * epsilon) - loss_at(-2.0 * epsilon);
      probe_view[k].values[i] = saved;
      const double numeric = (8.0 * near - far) / (12.0 * epsilon);
      const double analytic = grad_view[k].values[i];
      const double err = relative_error(analytic, numeric);
      result.max_abs_analytic = std::max(result.max_abs_analytic, std::abs(analytic));
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = probe_view[k].name + "[" + std::to_string(i) + "]";
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace gaitad
