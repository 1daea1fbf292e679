#include <benchmark/benchmark.h>

#include <random>

#include "gaitad/egomotion.hpp"

namespace {

gaitad::FrameMatches make_frame(int n, double outlier_ratio) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const gaitad::Mat3 r = gaitad::compose_euler(0.02, -0.01, 0.015);
  const gaitad::Vec3 t = gaitad::Vec3(0.3, 0.05, 1.0).normalized();
  gaitad::FrameMatches frame;
  for (int i = 0; i < n; ++i) {
    const gaitad::Vec3 x(u(rng), u(rng), 4.0 + 2.0 * u(rng));
    const gaitad::Vec3 y = r * x + t;
    gaitad::Correspondence c{x / x.z(), y / y.z()};
    if (i < outlier_ratio * n) c.p_curr = gaitad::Vec3(u(rng), u(rng), 1.0);
    frame.matches.push_back(c);
  }
  return frame;
}

void BM_EightPoint(benchmark::State& state) {
  const auto frame = make_frame(static_cast<int>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::eight_point(frame.matches));
}
BENCHMARK(BM_EightPoint)->Arg(8)->Arg(200);

void BM_Ransac(benchmark::State& state) {
  const auto frame = make_frame(200, 0.2);
  gaitad::RansacConfig config;
  config.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::estimate_essential(frame, config));
}
BENCHMARK(BM_Ransac)->Arg(100)->Arg(500);

void BM_EulerAngles(benchmark::State& state) {
  const gaitad::Mat3 r = gaitad::compose_euler(0.3, -0.4, 1.1);
  for (auto _ : state) benchmark::DoNotOptimize(gaitad::euler_angles(r));
}
BENCHMARK(BM_EulerAngles);

}  // namespace
