#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gaitad/cnn.hpp"
#include "gaitad/seq2seq.hpp"
#include "gaitad/svm.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_EncodeCycle(benchmark::State& state) {
  gaitad::EncoderConfig config;
  config.hidden_size = static_cast<int>(state.range(0));
  const auto params = gaitad::Seq2SeqParams::random(config, 1);
  const Eigen::MatrixXd x = random_matrix(gaitad::kCycleChannels, gaitad::kCycleLength, 2);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::encode(x, params));
}
BENCHMARK(BM_EncodeCycle)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BatchLossWithGradient(benchmark::State& state) {
  gaitad::EncoderConfig config;
  const auto params = gaitad::Seq2SeqParams::random(config, 1);
  std::vector<Eigen::MatrixXd> xs;
  for (int i = 0; i < state.range(0); ++i)
    xs.push_back(random_matrix(gaitad::kCycleChannels, gaitad::kCycleLength, 10 + i));
  std::vector<const Eigen::MatrixXd*> batch;
  for (const auto& x : xs) batch.push_back(&x);
  gaitad::Seq2SeqParams grads = gaitad::Seq2SeqParams::zeros(config);
  for (auto _ : state)
    benchmark::DoNotOptimize(gaitad::batch_loss(batch, params, gaitad::Mode::kTrain, 3, &grads));
}
BENCHMARK(BM_BatchLossWithGradient)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Classify(benchmark::State& state) {
  const auto params = gaitad::CnnParams::random(gaitad::CnnConfig{}, 1);
  const Eigen::VectorXd s = random_matrix(512, 1, 4).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::classify(s, params));
}
BENCHMARK(BM_Classify);

void BM_RbfGram(benchmark::State& state) {
  const Eigen::MatrixXd x = random_matrix(state.range(0), 512, 5);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::rbf_gram(x, 1.0 / 512.0));
}
BENCHMARK(BM_RbfGram)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_TrainSvm(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Eigen::MatrixXd x = random_matrix(n, 64, 6);
  std::vector<gaitad::Label> labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool anomalous = i % 4 == 0;
    if (anomalous) x.row(i).array() += 0.5;
    labels.push_back(anomalous ? gaitad::Label::kAnomalous : gaitad::Label::kNormal);
  }
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::train_svm(x, labels, gaitad::SvmConfig{}));
}
BENCHMARK(BM_TrainSvm)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

}  // namespace
