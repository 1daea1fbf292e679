#include <gtest/gtest.h>

#include <cmath>

#include "gaitad/cnn.hpp"
#include "test_util.hpp"

namespace gaitad {
namespace {

CnnConfig small_config() {
  CnnConfig c;
  c.width = 8;
  c.height = 8;
  c.depth = 2;
  c.kernel_h = 3;
  c.kernel_w = 3;
  c.out_channels = 4;
  c.pool_size = 2;
  c.pool_stride = 2;
  c.kernel_init_stddev = 0.3;
  return c;
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

TEST(ReshapeState, RowMajorLayout) {
  const Eigen::VectorXd flat = Eigen::VectorXd::LinSpaced(24, 0.0, 23.0);
  const Volume v = reshape_state(flat, 2, 3, 4);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index k = 0; k < 4; ++k) EXPECT_EQ(v.at(i, j, k), flat[i * 12 + j * 4 + k]);
  EXPECT_EQ(flatten(v), flat);
}

TEST(ReshapeState, SizeMismatch) {
  EXPECT_GAITAD_ERROR(reshape_state(Eigen::VectorXd::Zero(24), 2, 3, 5), ErrorCode::kShapeError);
}

TEST(ReshapeState, RoundTripProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index w = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index h = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Eigen::VectorXd flat = random_vector(rng, w * h * d);
    EXPECT_EQ(flatten(reshape_state(flat, w, h, d)), flat);
  }
}

TEST(CnnConfig, DefaultFitsDeskEncoder) {
  const CnnConfig c;
  c.validate(512);
  EXPECT_EQ(c.conv_h(), 7);
  EXPECT_EQ(c.conv_w(), 11);
  EXPECT_EQ(c.pool_h(), 2);
  EXPECT_EQ(c.pool_w(), 4);
  EXPECT_EQ(c.flat_size(), 128);
  EXPECT_GAITAD_ERROR(c.validate(4096), ErrorCode::kShapeError);
}

TEST(CnnConfig, ClosedFormShapes) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    CnnConfig c;
    c.width = 10 + static_cast<Eigen::Index>(rng.index(20));
    c.height = 6 + static_cast<Eigen::Index>(rng.index(20));
    c.depth = 1;
    if (c.width - 10 + 1 < 4 || c.height - 6 + 1 < 4) continue;
    CnnParams p = CnnParams::zeros(c);
    const Volume conv = conv_forward(Volume(c.width, c.height, 1, 1.0), p);
    EXPECT_EQ(conv.width, c.width - 10 + 1);
    EXPECT_EQ(conv.height, c.height - 6 + 1);
    const Volume pooled = maxpool(conv, 4, 2);
    EXPECT_EQ(pooled.width, (conv.width - 4) / 2 + 1);
    EXPECT_EQ(pooled.height, (conv.height - 4) / 2 + 1);
    EXPECT_EQ(pooled.depth, 16);
  }
}

TEST(ConvForward, AllOnesSumsKernelVolume) {
  CnnConfig c;
  c.width = 12;
  c.height = 8;
  c.depth = 8;
  c.pool_size = 1;
  c.pool_stride = 1;
  CnnParams p = CnnParams::zeros(c);
  p.kernel.setOnes();
  const Volume out = conv_forward(Volume(12, 8, 8, 1.0), p);
  EXPECT_EQ(out.width, 3);
  EXPECT_EQ(out.height, 3);
  EXPECT_EQ(out.depth, 16);
  for (double x : out.data) EXPECT_EQ(x, 480.0);
}

TEST(ConvForward, BiasOnlyAndRelu) {
  CnnConfig c = small_config();
  CnnParams p = CnnParams::zeros(c);
  p.conv_bias << 0.5, -1.0, 2.0, 0.0;
  Rng rng(3);
  Volume in(8, 8, 2);
  for (double& x : in.data) x = rng.normal();
  const Volume out = conv_forward(in, p);
  for (Eigen::Index i = 0; i < out.width; ++i)
    for (Eigen::Index j = 0; j < out.height; ++j) {
      EXPECT_EQ(out.at(i, j, 0), 0.5);
      EXPECT_EQ(out.at(i, j, 1), 0.0);
      EXPECT_EQ(out.at(i, j, 2), 2.0);
      EXPECT_EQ(out.at(i, j, 3), 0.0);
    }
}

TEST(ConvForward, NegativePreactivationIsZero) {
  CnnConfig c = small_config();
  CnnParams p = CnnParams::zeros(c);
  p.kernel.setConstant(-1.0);
  const Volume out = conv_forward(Volume(8, 8, 2, 1.0), p);
  for (double x : out.data) EXPECT_EQ(x, 0.0);
}

TEST(ConvForward, MatchesDirectSum) {
  const CnnConfig c = small_config();
  const CnnParams p = CnnParams::random(c, 4);
  Rng rng(4);
  Volume in(8, 8, 2);
  for (double& x : in.data) x = rng.normal();
  const Volume out = conv_forward(in, p);
  for (Eigen::Index i = 0; i < out.width; ++i)
    for (Eigen::Index j = 0; j < out.height; ++j)
      for (Eigen::Index o = 0; o < 4; ++o) {
        double s = p.conv_bias[o];
        for (Eigen::Index u = 0; u < 3; ++u)
          for (Eigen::Index v = 0; v < 3; ++v)
            for (Eigen::Index ch = 0; ch < 2; ++ch) s += in.at(i + u, j + v, ch) * p.kernel_at(u, v, ch, o);
        EXPECT_NEAR(out.at(i, j, o), std::max(0.0, s), 1e-12);
      }
}

TEST(ConvForward, KernelLargerThanInput) {
  const CnnParams p = CnnParams::zeros(CnnConfig{});
  EXPECT_GAITAD_ERROR(conv_forward(Volume(8, 16, 2), p), ErrorCode::kShapeError);
  EXPECT_GAITAD_ERROR(conv_forward(Volume(16, 16, 3), p), ErrorCode::kShapeError);
  CnnConfig tiny;
  tiny.width = 8;
  EXPECT_GAITAD_ERROR(tiny.validate(8 * 16 * 2), ErrorCode::kShapeError);
}

TEST(MaxPool, ConstantVolume) {
  const Volume out = maxpool(Volume(9, 7, 3, 2.5), 4, 2);
  EXPECT_EQ(out.width, 3);
  EXPECT_EQ(out.height, 2);
  for (double x : out.data) EXPECT_EQ(x, 2.5);
}

TEST(MaxPool, SpikeReachesEveryCoveringWindow) {
  // On 6x6 the windows cover 0..3 and 2..5 per axis, so (2, 3) is in all four.
  Volume in(6, 6, 1, 0.0);
  in.at(2, 3, 0) = 7.0;
  const Volume out = maxpool(in, 4, 2);
  ASSERT_EQ(out.width, 2);
  ASSERT_EQ(out.height, 2);
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b) EXPECT_EQ(out.at(a, b, 0), 7.0);
  Volume corner(6, 6, 1, 0.0);
  corner.at(0, 0, 0) = 7.0;
  const Volume c = maxpool(corner, 4, 2);
  EXPECT_EQ(c.at(0, 0, 0), 7.0);
  EXPECT_EQ(c.at(0, 1, 0), 0.0);
  EXPECT_EQ(c.at(1, 0, 0), 0.0);
  EXPECT_EQ(c.at(1, 1, 0), 0.0);
}

TEST(MaxPool, MonotoneRampPicksBottomRight) {
  Volume in(11, 9, 2);
  for (Eigen::Index i = 0; i < 11; ++i)
    for (Eigen::Index j = 0; j < 9; ++j)
      for (Eigen::Index k = 0; k < 2; ++k) in.at(i, j, k) = static_cast<double>(i * 100 + j * 3 + k);
  const Volume out = maxpool(in, 4, 2);
  for (Eigen::Index a = 0; a < out.width; ++a)
    for (Eigen::Index b = 0; b < out.height; ++b)
      for (Eigen::Index k = 0; k < 2; ++k) EXPECT_EQ(out.at(a, b, k), in.at(2 * a + 3, 2 * b + 3, k));
}

TEST(MaxPool, TooSmall) {
  EXPECT_GAITAD_ERROR(maxpool(Volume(3, 8, 1), 4, 2), ErrorCode::kShapeError);
}

TEST(Softmax, HandValues) {
  const Eigen::Vector2d p = softmax(Eigen::Vector2d(std::log(3.0), 0.0));
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndNormalization) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector2d s(rng.normal(0.0, 5.0), rng.normal(0.0, 5.0));
    const double shift = rng.normal(0.0, 50.0);
    const Eigen::Vector2d p = softmax(s);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GT(p.minCoeff(), 0.0);
    EXPECT_LT((softmax(s + Eigen::Vector2d::Constant(shift)) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Classify, ZeroDenseLayerTiesToAnomalous) {
  const CnnConfig c;
  CnnParams p = CnnParams::random(c, 6);
  p.dense_weight.setZero();
  p.dense_bias.setZero();
  Rng rng(6);
  const auto r = classify(random_vector(rng, 512), p);
  EXPECT_EQ(r.scores, Eigen::Vector2d(0.5, 0.5));
  EXPECT_EQ(r.probabilities, Eigen::Vector2d(0.5, 0.5));
  EXPECT_EQ(r.predicted, Label::kAnomalous);
}

TEST(Classify, LogisticScoresFromDenseBias) {
  const CnnConfig c;
  CnnParams p = CnnParams::zeros(c);
  p.dense_bias << 2.0, -1.0;
  const auto r = classify(Eigen::VectorXd::Zero(512), p);
  const double s0 = 1.0 / (1.0 + std::exp(-2.0));
  const double s1 = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(r.scores[0], s0, 1e-15);
  EXPECT_NEAR(r.scores[1], s1, 1e-15);
  EXPECT_NEAR(r.probabilities[0], std::exp(s0) / (std::exp(s0) + std::exp(s1)), 1e-15);
  EXPECT_EQ(r.predicted, Label::kNormal);
}

TEST(Classify, ProbabilitiesSumToOne) {
  const CnnParams p = CnnParams::random(CnnConfig{}, 7);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = classify(random_vector(rng, 512, 3.0), p);
    EXPECT_NEAR(r.probabilities.sum(), 1.0, 1e-12);
  }
}

TEST(CnnLoss, ScoreLayerGradientIsPMinusOneHot) {
  // With zero conv and dense weights only the dense bias matters:
  // d loss / d s = p - onehot, and d s / d b = s (1 - s).
  const CnnConfig c = small_config();
  CnnParams p = CnnParams::zeros(c);
  p.dense_bias << 0.3, -0.4;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(128);
  CnnParams grads;
  cnn_batch_loss({&x}, {Label::kAnomalous}, p, &grads);
  const Eigen::Vector2d s(1.0 / (1.0 + std::exp(-0.3)), 1.0 / (1.0 + std::exp(0.4)));
  const Eigen::Vector2d prob = softmax(s);
  const Eigen::Vector2d expected = (prob - Eigen::Vector2d(0.0, 1.0)).cwiseProduct(s.cwiseProduct(Eigen::Vector2d::Ones() - s));
  EXPECT_LT((grads.dense_bias - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CnnLoss, GradientCheck) {
  const CnnConfig c = small_config();
  CnnParams p = CnnParams::random(c, 8);
  Rng rng(8);
  p.conv_bias = random_vector(rng, 4, 0.1);
  p.dense_bias = random_vector(rng, 2, 0.1);
  std::vector<Eigen::VectorXd> xs;
  std::vector<Label> labels;
  for (int i = 0; i < 4; ++i) {
    xs.push_back(random_vector(rng, 128));
    labels.push_back(i % 2 ? Label::kAnomalous : Label::kNormal);
  }
  EXPECT_LT(cnn_gradient_check(p, xs, labels, 1e-6), 1e-4);
}

TEST(CnnLoss, DefaultConfigGradientCheck) {
  CnnParams p = CnnParams::random(CnnConfig{}, 9);
  Rng rng(9);
  const std::vector<Eigen::VectorXd> xs{random_vector(rng, 512), random_vector(rng, 512)};
  EXPECT_LT(cnn_gradient_check(p, xs, {Label::kNormal, Label::kAnomalous}, 1e-6), 1e-4);
}

struct Clusters {
  std::vector<Eigen::VectorXd> xs;
  std::vector<Label> labels;
};

Clusters separated_clusters(Rng& rng, int per_class) {
  Clusters c;
  const Eigen::VectorXd center = random_vector(rng, 128);
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool anomalous = i % 2 == 1;
    c.xs.push_back((anomalous ? -1.0 : 1.0) * center + random_vector(rng, 128, 0.2));
    c.labels.push_back(anomalous ? Label::kAnomalous : Label::kNormal);
  }
  return c;
}

TEST(TrainClassifier, SeparableClustersReachFullAccuracy) {
  Rng rng(10);
  const auto data = separated_clusters(rng, 40);
  TrainConfig tc{0.5, 1000, 0.5, 11, 16, 0.0, 3, 0};
  const auto r = train_classifier(data.xs, data.labels, small_config(), tc);
  int correct = 0;
  for (std::size_t i = 0; i < data.xs.size(); ++i) correct += classify(data.xs[i], r.params).predicted == data.labels[i];
  EXPECT_EQ(correct, 80);
  EXPECT_EQ(r.steps, 55);
}

TEST(TrainClassifier, Deterministic) {
  Rng rng(11);
  const auto data = separated_clusters(rng, 10);
  TrainConfig tc{0.1, 1000, 0.5, 2, 4, 0.0, 5, 0};
  auto a = train_classifier(data.xs, data.labels, small_config(), tc).params;
  auto b = train_classifier(data.xs, data.labels, small_config(), tc).params;
  const auto va = a.tensors();
  const auto vb = b.tensors();
  for (std::size_t k = 0; k < va.size(); ++k) EXPECT_EQ(va[k].values, vb[k].values);
}

TEST(TrainClassifier, SingleClassIsDegenerate) {
  Rng rng(12);
  const std::vector<Eigen::VectorXd> xs{random_vector(rng, 128), random_vector(rng, 128)};
  EXPECT_GAITAD_ERROR(train_classifier(xs, {Label::kNormal, Label::kNormal}, small_config(), {}),
                      ErrorCode::kDegenerateDataset);
}

}  // namespace
}  // namespace gaitad
