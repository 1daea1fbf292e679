#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "gaitad/cycles.hpp"
#include "gaitad/signal.hpp"

namespace {

Eigen::VectorXd tone(Eigen::Index n, double rate) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    x[i] = std::sin(2.0 * std::numbers::pi * 2.0 * t) + 0.2 * std::sin(2.0 * std::numbers::pi * 80.0 * t);
  }
  return x;
}

void BM_Filtfilt(benchmark::State& state) {
  const auto filter = gaitad::design_butterworth_lowpass(4, 20.0, 200.0);
  const Eigen::VectorXd x = tone(state.range(0), 200.0);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::filtfilt(filter, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Filtfilt)->Arg(2000)->Arg(20000);

void BM_Resample(benchmark::State& state) {
  gaitad::TimedSeries in;
  const Eigen::Index n = state.range(0);
  in.values.resize(n, 3);
  double t = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    in.timestamps.push_back(t);
    t += (i % 3 == 0) ? 0.012 : 0.009;
    in.values.row(i).setConstant(std::sin(t));
  }
  in.channel_names = {"x", "y", "z"};
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::resample(in, 200.0));
}
BENCHMARK(BM_Resample)->Arg(10000);

void BM_EventResponse(benchmark::State& state) {
  const Eigen::VectorXd x = tone(state.range(0), 200.0);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::event_response(x, 200.0));
}
BENCHMARK(BM_EventResponse)->Arg(4000);

}  // namespace
