#include "gaitad/cnn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gaitad/error.hpp"
#include "gaitad/rng.hpp"

namespace gaitad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string dims_string(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c) + ")";
}

}  // namespace

void CnnConfig::validate(Eigen::Index state_size) const {
  if (width * height * depth != state_size) {
    fail(ErrorCode::kShapeError, "dims " + dims_string(width, height, depth) +
                                     " do not match state length " + std::to_string(state_size));
  }
  if (kernel_h < 1 || kernel_w < 1 || out_channels < 1 || conv_stride < 1 || pool_size < 1 ||
      pool_stride < 1) {
    fail(ErrorCode::kShapeError, "convolution and pooling sizes must be positive");
  }
  if (kernel_h > width || kernel_w > height) {
    fail(ErrorCode::kShapeError, "kernel larger than input extent");
  }
  if (conv_h() < pool_size || conv_w() < pool_size) {
    fail(ErrorCode::kShapeError, "convolution output " + std::to_string(conv_h()) + " x " +
                                     std::to_string(conv_w()) + " smaller than the pooling window");
  }
}

CnnParams CnnParams::zeros(const CnnConfig& config) {
  config.validate(config.width * config.height * config.depth);
  CnnParams p;
  p.config = config;
  p.kernel = Eigen::VectorXd::Zero(config.kernel_h * config.kernel_w * config.depth * config.out_channels);
  p.conv_bias = Eigen::VectorXd::Zero(config.out_channels);
  p.dense_weight = Eigen::MatrixXd::Zero(2, config.flat_size());
  p.dense_bias = Eigen::VectorXd::Zero(2);
  return p;
}

CnnParams CnnParams::random(const CnnConfig& config, std::uint64_t seed) {
  CnnParams p = zeros(config);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < p.kernel.size(); ++i) p.kernel[i] = rng.truncated_normal(config.kernel_init_stddev);
  const double limit = std::sqrt(6.0 / static_cast<double>(config.flat_size() + 2));
  for (Eigen::Index i = 0; i < p.dense_weight.size(); ++i) p.dense_weight.data()[i] = rng.uniform(-limit, limit);
  return p;
}

std::vector<ParamRef> CnnParams::tensors() {
  auto view = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
  std::vector<ParamRef> out;
  out.push_back({"cnn.kernel", view(kernel)});
  out.push_back({"cnn.conv_bias", view(conv_bias)});
  out.push_back({"cnn.dense_weight", view(dense_weight)});
  out.push_back({"cnn.dense_bias", view(dense_bias)});
  return out;
}

Volume reshape_state(const Eigen::VectorXd& flat, Eigen::Index width, Eigen::Index height,
                     Eigen::Index depth) {
  if (width < 1 || height < 1 || depth < 1 || width * height * depth != flat.size()) {
    fail(ErrorCode::kShapeError, "cannot reshape length " + std::to_string(flat.size()) + " to " +
                                     dims_string(width, height, depth));
  }
  Volume v(width, height, depth);
  std::copy(flat.data(), flat.data() + flat.size(), v.data.begin());
  return v;
}

Eigen::VectorXd flatten(const Volume& volume) {
  return Eigen::Map<const Eigen::VectorXd>(volume.data.data(), volume.size());
}

namespace {

// Patch matrix: row (a * conv_w + b), column ((u * kw + v) * depth + c).
RowMatrix im2col(const Volume& in, const CnnConfig& cfg) {
  const Eigen::Index ch = cfg.conv_h();
  const Eigen::Index cw = cfg.conv_w();
  RowMatrix cols(ch * cw, cfg.kernel_h * cfg.kernel_w * in.depth);
  for (Eigen::Index a = 0; a < ch; ++a) {
    for (Eigen::Index b = 0; b < cw; ++b) {
      double* row = cols.row(a * cw + b).data();
      Eigen::Index k = 0;
      for (Eigen::Index u = 0; u < cfg.kernel_h; ++u) {
        const double* src = &in.data[in.offset(a * cfg.conv_stride + u, b * cfg.conv_stride, 0)];
        const Eigen::Index span = cfg.kernel_w * in.depth;
        std::copy(src, src + span, row + k);
        k += span;
      }
    }
  }
  return cols;
}

Eigen::Map<const RowMatrix> kernel_matrix(const CnnParams& p) {
  const auto& c = p.config;
  return Eigen::Map<const RowMatrix>(p.kernel.data(), c.kernel_h * c.kernel_w * c.depth, c.out_channels);
}

struct CnnForward {
  RowMatrix patches;  // P x K
  RowMatrix pre;      // P x out, pre-activation
  Volume pooled;
  std::vector<std::size_t> argmax;  // pooled element -> offset into the activation volume
  Eigen::VectorXd flat;
  Eigen::Vector2d logits;
  Eigen::Vector2d scores;
  Eigen::Vector2d probabilities;
};

Volume pool_with_argmax(const Volume& in, Eigen::Index size, Eigen::Index stride,
                        std::vector<std::size_t>* argmax) {
  if (in.width < size || in.height < size) {
    fail(ErrorCode::kShapeError, "pooling window larger than input extent");
  }
  const Eigen::Index ph = (in.width - size) / stride + 1;
  const Eigen::Index pw = (in.height - size) / stride + 1;
  Volume out(ph, pw, in.depth);
  if (argmax) argmax->assign(static_cast<std::size_t>(out.size()), 0);
  for (Eigen::Index a = 0; a < ph; ++a) {
    for (Eigen::Index b = 0; b < pw; ++b) {
      for (Eigen::Index c = 0; c < in.depth; ++c) {
        std::size_t best = in.offset(a * stride, b * stride, c);
        for (Eigen::Index u = 0; u < size; ++u) {
          for (Eigen::Index v = 0; v < size; ++v) {
            const std::size_t off = in.offset(a * stride + u, b * stride + v, c);
            if (in.data[off] > in.data[best]) best = off;
          }
        }
        out.at(a, b, c) = in.data[best];
        if (argmax) (*argmax)[out.offset(a, b, c)] = best;
      }
    }
  }
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

CnnForward run_cnn(const Eigen::VectorXd& state, const CnnParams& p) {
  const CnnConfig& cfg = p.config;
  const Volume in = reshape_state(state, cfg.width, cfg.height, cfg.depth);
  CnnForward f;
  f.patches = im2col(in, cfg);
  f.pre.noalias() = f.patches * kernel_matrix(p);
  f.pre.rowwise() += p.conv_bias.transpose();
  Volume act(cfg.conv_h(), cfg.conv_w(), cfg.out_channels);
  Eigen::Map<RowMatrix>(act.data.data(), f.pre.rows(), f.pre.cols()) = f.pre.cwiseMax(0.0);
  f.pooled = pool_with_argmax(act, cfg.pool_size, cfg.pool_stride, &f.argmax);
  f.flat = flatten(f.pooled);
  f.logits = p.dense_weight * f.flat + p.dense_bias;
  f.scores = Eigen::Vector2d(sigmoid(f.logits[0]), sigmoid(f.logits[1]));
  f.probabilities = softmax(f.scores);
  return f;
}

}  // namespace

Volume conv_forward(const Volume& input, const CnnParams& params) {
  const CnnConfig& cfg = params.config;
  if (input.depth != cfg.depth) fail(ErrorCode::kShapeError, "input channels do not match kernel");
  if (input.width < cfg.kernel_h || input.height < cfg.kernel_w) {
    fail(ErrorCode::kShapeError, "kernel larger than input extent");
  }
  CnnConfig local = cfg;
  local.width = input.width;
  local.height = input.height;
  const RowMatrix patches = im2col(input, local);
  RowMatrix pre = patches * kernel_matrix(params);
  pre.rowwise() += params.conv_bias.transpose();
  Volume out(local.conv_h(), local.conv_w(), cfg.out_channels);
  Eigen::Map<RowMatrix>(out.data.data(), pre.rows(), pre.cols()) = pre.cwiseMax(0.0);
  return out;
}

Volume maxpool(const Volume& input, Eigen::Index size, Eigen::Index stride) {
  return pool_with_argmax(input, size, stride, nullptr);
}

Eigen::Vector2d softmax(const Eigen::Vector2d& scores) {
  const double m = scores.maxCoeff();
  const Eigen::Vector2d e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

Label predict_label(const Eigen::Vector2d& probabilities) {
  return probabilities[0] > probabilities[1] ? Label::kNormal : Label::kAnomalous;
}

ClassScores classify(const Eigen::VectorXd& state, const CnnParams& params) {
  const CnnForward f = run_cnn(state, params);
  ClassScores out;
  out.scores = f.scores;
  out.probabilities = f.probabilities;
  out.predicted = predict_label(f.probabilities);
  return out;
}

double cnn_batch_loss(const std::vector<const Eigen::VectorXd*>& states,
                      const std::vector<Label>& labels, const CnnParams& params, CnnParams* grads) {
  if (states.empty() || states.size() != labels.size()) {
    fail(ErrorCode::kInvalidArgument, "states and labels must be non-empty and aligned");
  }
  const CnnConfig& cfg = params.config;
  const double inv_n = 1.0 / static_cast<double>(states.size());
  if (grads) *grads = CnnParams::zeros(cfg);
  double loss = 0.0;
  RowMatrix d_kernel;
  if (grads) d_kernel = RowMatrix::Zero(cfg.kernel_h * cfg.kernel_w * cfg.depth, cfg.out_channels);

  for (std::size_t n = 0; n < states.size(); ++n) {
    const CnnForward f = run_cnn(*states[n], params);
    const int y = labels[n] == Label::kAnomalous ? 1 : 0;
    loss -= std::log(f.probabilities[y]) * inv_n;
    if (!grads) continue;

    Eigen::Vector2d d_scores = f.probabilities;
    d_scores[y] -= 1.0;
    const Eigen::Vector2d d_logits =
        (d_scores.array() * f.scores.array() * (1.0 - f.scores.array())).matrix() * inv_n;
    grads->dense_weight.noalias() += d_logits * f.flat.transpose();
    grads->dense_bias += d_logits;
    const Eigen::VectorXd d_flat = params.dense_weight.transpose() * d_logits;

    RowMatrix d_pre = RowMatrix::Zero(f.pre.rows(), f.pre.cols());
    for (Eigen::Index k = 0; k < d_flat.size(); ++k) {
      d_pre.data()[f.argmax[static_cast<std::size_t>(k)]] += d_flat[k];
    }
    d_pre = (f.pre.array() > 0.0).select(d_pre, 0.0);
    d_kernel.noalias() += f.patches.transpose() * d_pre;
    grads->conv_bias += d_pre.colwise().sum().transpose();
  }
  if (grads) grads->kernel = Eigen::Map<const Eigen::VectorXd>(d_kernel.data(), d_kernel.size());
  if (!std::isfinite(loss)) fail(ErrorCode::kNumericalDivergence, "non-finite classifier loss");
  return loss;
}

CnnTrainResult train_classifier(const std::vector<Eigen::VectorXd>& states,
                                const std::vector<Label>& labels, const CnnConfig& config,
                                const TrainConfig& train) {
  if (states.size() != labels.size() || states.empty()) {
    fail(ErrorCode::kDegenerateDataset, "classifier needs aligned, non-empty states and labels");
  }
  const bool has_normal = std::find(labels.begin(), labels.end(), Label::kNormal) != labels.end();
  const bool has_anomalous = std::find(labels.begin(), labels.end(), Label::kAnomalous) != labels.end();
  if (!has_normal || !has_anomalous) {
    fail(ErrorCode::kDegenerateDataset, "classifier training set contains a single class");
  }
  config.validate(states.front().size());

  CnnTrainResult result;
  result.params = CnnParams::random(config, train.seed);
  auto params_view = result.params.tensors();
  Rng rng(train.seed ^ 0xC2B2AE3D27D4EB4FULL);
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CnnParams grads;

  long step = 0;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(train.batch_size)) {
      if (train.max_steps > 0 && step >= train.max_steps) break;
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(train.batch_size));
      std::vector<const Eigen::VectorXd*> batch;
      std::vector<Label> batch_labels;
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(&states[order[k]]);
        batch_labels.push_back(labels[order[k]]);
      }
      const double loss = cnn_batch_loss(batch, batch_labels, result.params, &grads);
      const auto grad_view = grads.tensors();
      sgd_step(params_view, grad_view, learning_rate(train, step), train.clip_norm);
      result.loss_history.push_back(loss);
      ++step;
    }
  }
  result.steps = step;
  return result;
}

double cnn_gradient_check(const CnnParams& params, const std::vector<Eigen::VectorXd>& states,
                          const std::vector<Label>& labels, double epsilon) {
  std::vector<const Eigen::VectorXd*> batch;
  for (const auto& s : states) batch.push_back(&s);
  CnnParams grads;
  cnn_batch_loss(batch, labels, params, &grads);
  CnnParams probe = params;
  auto probe_view = probe.tensors();
  const auto grad_view = grads.tensors();
  double worst = 0.0;
  for (std::size_t k = 0; k < probe_view.size(); ++k) {
    for (Eigen::Index i = 0; i < probe_view[k].values.size(); ++i) {
      const double saved = probe_view[k].values[i];
      probe_view[k].values[i] = saved + epsilon;
      const double up = cnn_batch_loss(batch, labels, probe, nullptr);
      probe_view[k].values[i] = saved - epsilon;
      const double down = cnn_batch_loss(batch, labels, probe, nullptr);
      probe_view[k].values[i] = saved;
      worst = std::max(worst, relative_error(grad_view[k].values[i], (up - down) / (2.0 * epsilon)));
    }
  }
  return worst;
}

}  // namespace gaitad
