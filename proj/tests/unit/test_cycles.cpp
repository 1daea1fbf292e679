#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gaitad/cycles.hpp"
#include "gaitad/synth.hpp"
#include "test_util.hpp"

namespace gaitad {
namespace {

constexpr double kPi = std::numbers::pi;

// Smooth 1 Hz bumps with a sharp Gaussian dip at t = 0.5, 1.5, 2.5, ...
UniformSeries dipped_series(double duration, double rate = 200.0) {
  const auto n = static_cast<Eigen::Index>(duration * rate) + 1;
  UniformSeries s;
  s.sample_rate = rate;
  s.values.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 9.81 + 0.8 * (1.0 - std::cos(2.0 * kPi * t)) / 2.0;
    for (double c = 0.5; c < duration; c += 1.0) v -= 3.0 * std::exp(-0.5 * std::pow((t - c) / 0.025, 2));
    s.values(i, 0) = v;
  }
  return s;
}

TEST(GaussianSmooth, PreservesConstantAndMean) {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(300, 4.0);
  EXPECT_LT((gaussian_smooth(c, 5.0) - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RickerCwt, ZeroOnConstant) {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(400, 2.0);
  EXPECT_LT(ricker_cwt(c, 10.0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LocalExtrema, StrictAndFlat) {
  Eigen::VectorXd x(9);
  x << 3, 1, 3, 2, 2, 2, 5, 0, 4;
  EXPECT_EQ(local_minima(x), (std::vector<Eigen::Index>{1, 4, 7}));
  EXPECT_EQ(local_maxima(x), (std::vector<Eigen::Index>{2, 6}));
}

TEST(DetectEvents, ConstructedMinima) {
  const auto s = dipped_series(12.0);
  const auto ev = detect_events(s);
  ASSERT_EQ(ev.ic.size(), 12u);
  for (std::size_t k = 0; k < ev.ic.size(); ++k) {
    EXPECT_LE(std::abs(static_cast<double>(ev.ic[k]) - (100.0 + 200.0 * static_cast<double>(k))), 5.0);
  }
  for (std::size_t k = 0; k < ev.fc.size(); ++k) {
    EXPECT_GT(ev.fc[k], ev.ic[k]);
  }
}

TEST(DetectEvents, IntervalsRespectGates) {
  Rng rng(3);
  SynthConfig cfg;
  for (int w = 0; w < 5; ++w) {
    const auto walk = generate_walk(cfg, w, Label::kNormal, std::nullopt);
    const auto accel = resample(walk.accel, 200.0);
    const auto ev = detect_events(accel, {}, 1);
    EventConfig gates;
    for (std::size_t k = 1; k < ev.ic.size(); ++k) {
      const double dt = static_cast<double>(ev.ic[k] - ev.ic[k - 1]) / 200.0;
      EXPECT_GE(dt, gates.min_ic_interval);
      EXPECT_LE(dt, gates.max_ic_interval);
    }
  }
}

TEST(DetectEvents, NormalSyntheticWalkHitsGroundTruth) {
  SynthConfig cfg;
  cfg.steps_per_walk = 12;
  const auto walk = generate_walk(cfg, 0, Label::kNormal, std::nullopt);
  const auto accel = lowpass(resample(walk.accel, 200.0), 20.0, 4);
  const auto ev = detect_events(accel, {}, 1);
  ASSERT_EQ(ev.ic.size(), walk.ic_times.size());
  for (std::size_t k = 0; k < ev.ic.size(); ++k) {
    EXPECT_LE(std::abs(accel.time_at(ev.ic[k]) - walk.ic_times[k]), 5.0 / 200.0 + 1e-12) << "ic " << k;
  }
}

TEST(DetectEvents, ConstantSignalHasNoGait) {
  UniformSeries s;
  s.sample_rate = 200.0;
  s.values = Eigen::MatrixXd::Constant(2000, 1, 9.81);
  EXPECT_GAITAD_ERROR(detect_events(s), ErrorCode::kNoGaitDetected);
}

TEST(DetectEvents, ShortWalkHasNoGait) {
  EXPECT_GAITAD_ERROR(detect_events(dipped_series(1.5)), ErrorCode::kNoGaitDetected);
}

MultiModalTrace ramp_trace(Eigen::Index n) {
  MultiModalTrace t;
  for (UniformSeries* s : {&t.accel, &t.gyro, &t.angles}) {
    s->sample_rate = 200.0;
    s->values.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) s->values.row(i).setConstant(static_cast<double>(i));
  }
  t.label = Label::kAnomalous;
  return t;
}

TEST(SliceCycles, SpansTwoSteps) {
  const auto trace = ramp_trace(1000);
  GaitEvents ev;
  ev.ic = {100, 300, 520, 700};
  const auto cycles = slice_cycles(trace, ev);
  ASSERT_EQ(cycles.size(), 2u);
  EXPECT_EQ(cycles[0].data.rows(), 9);
  EXPECT_EQ(cycles[0].data.cols(), 420);
  EXPECT_EQ(cycles[1].data.cols(), 400);
  EXPECT_EQ(cycles[0].start_index, 100);
  EXPECT_EQ(cycles[0].data(0, 0), 100.0);
  EXPECT_EQ(cycles[0].data(8, 419), 519.0);
  EXPECT_EQ(cycles[1].label, Label::kAnomalous);
}

TEST(SliceCycles, TooFewContacts) {
  GaitEvents ev;
  ev.ic = {100, 300};
  EXPECT_GAITAD_ERROR(slice_cycles(ramp_trace(1000), ev), ErrorCode::kNoGaitDetected);
}

TEST(SliceCycles, ContactOutsideTrace) {
  GaitEvents ev;
  ev.ic = {100, 300, 1200};
  EXPECT_GAITAD_ERROR(slice_cycles(ramp_trace(1000), ev), ErrorCode::kShapeError);
}

TEST(DetrendCycle, RampPlusWholePeriodSine) {
  const Eigen::Index n = 400;
  Eigen::MatrixXd m(9, n);
  Eigen::MatrixXd expected(9, n);
  for (Eigen::Index r = 0; r < 9; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sine = std::sin(2.0 * kPi * 2.0 * static_cast<double>(i) / static_cast<double>(n));
      m(r, i) = 0.3 * static_cast<double>(r + 1) * static_cast<double>(i) + sine + static_cast<double>(r);
      expected(r, i) = sine;
    }
  }
  const Eigen::MatrixXd d = detrend_cycle(m);
  // A whole-period sine is not orthogonal to the ramp on a discrete grid, so
  // compare after removing the sine's own least-squares slope.
  const Eigen::MatrixXd sine_only = detrend_cycle(expected);
  for (Eigen::Index r = 0; r < 9; ++r) {
    const double offset = d(r, 0) - sine_only(r, 0);
    EXPECT_LT((d.row(r).array() - offset - sine_only.row(r).array()).abs().maxCoeff(), 1e-9);
  }
}

TEST(DetrendCycle, PreservesMeanAndKillsSlope) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 50 + static_cast<Eigen::Index>(rng.index(300));
    Eigen::MatrixXd m(9, n);
    for (Eigen::Index r = 0; r < 9; ++r)
      for (Eigen::Index i = 0; i < n; ++i) m(r, i) = rng.normal() + 0.01 * static_cast<double>(i);
    const Eigen::MatrixXd d = detrend_cycle(m);
    Eigen::VectorXd centered(n);
    for (Eigen::Index i = 0; i < n; ++i) centered[i] = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
    for (Eigen::Index r = 0; r < 9; ++r) {
      EXPECT_NEAR(d.row(r).mean(), m.row(r).mean(), 1e-9);
      EXPECT_NEAR(d.row(r).dot(centered.transpose()), 0.0, 1e-6);
    }
  }
}

TEST(DetrendCycle, ConstantChannelUnchanged) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(9, 100, 3.5);
  EXPECT_LT((detrend_cycle(c) - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NormalizeLength, EndpointsAndLinearity) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(500));
    Eigen::MatrixXd m(9, n);
    for (Eigen::Index r = 0; r < 9; ++r)
      for (Eigen::Index i = 0; i < n; ++i) m(r, i) = 2.0 * static_cast<double>(i) + static_cast<double>(r);
    const Eigen::MatrixXd out = normalize_length(m);
    ASSERT_EQ(out.cols(), kCycleLength);
    for (Eigen::Index r = 0; r < 9; ++r) {
      EXPECT_EQ(out(r, 0), m(r, 0));
      EXPECT_NEAR(out(r, kCycleLength - 1), m(r, n - 1), 1e-9);
      for (Eigen::Index j = 0; j < kCycleLength; ++j) {
        const double pos = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(kCycleLength - 1);
        EXPECT_NEAR(out(r, j), 2.0 * pos + static_cast<double>(r), 1e-9);
      }
    }
  }
}

TEST(NormalizeLength, ConstantStaysConstant) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(9, 333, -1.25);
  EXPECT_LT((normalize_length(c).array() + 1.25).abs().maxCoeff(), 1e-12);
}

TEST(NormalizeLength, IdentityAtTargetLength) {
  Rng rng(7);
  Eigen::MatrixXd m(9, kCycleLength);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  EXPECT_LT((normalize_length(m) - m).cwiseAbs().maxCoeff(), 1e-12);
}

std::vector<GaitCycle> random_cycles(Rng& rng, int n) {
  std::vector<GaitCycle> out(static_cast<std::size_t>(n));
  for (auto& c : out) {
    c.data.resize(9, kCycleLength);
    for (Eigen::Index r = 0; r < 9; ++r)
      for (Eigen::Index i = 0; i < kCycleLength; ++i)
        c.data(r, i) = 3.0 * static_cast<double>(r) + (1.0 + static_cast<double>(r)) * rng.normal();
  }
  return out;
}

TEST(NormStats, PooledPopulationMoments) {
  Rng rng(8);
  const auto cycles = random_cycles(rng, 5);
  const auto stats = fit_norm_stats(cycles);
  for (Eigen::Index r = 0; r < 9; ++r) {
    double sum = 0.0;
    double sq = 0.0;
    double count = 0.0;
    for (const auto& c : cycles) {
      for (Eigen::Index i = 0; i < kCycleLength; ++i) {
        sum += c.data(r, i);
        sq += c.data(r, i) * c.data(r, i);
        count += 1.0;
      }
    }
    const double mean = sum / count;
    EXPECT_NEAR(stats.mean[r], mean, 1e-9);
    EXPECT_NEAR(stats.std[r], std::sqrt(sq / count - mean * mean), 1e-9);
  }
}

TEST(NormStats, NormalizedDataHasUnitMoments) {
  Rng rng(9);
  const auto cycles = random_cycles(rng, 8);
  const auto stats = fit_norm_stats(cycles);
  std::vector<GaitCycle> normed;
  for (const auto& c : cycles) normed.push_back(apply_norm(c, stats));
  const auto again = fit_norm_stats(normed);
  EXPECT_LT(again.mean.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((again.std.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(NormStats, InvertRoundTrips) {
  Rng rng(10);
  const auto cycles = random_cycles(rng, 3);
  const auto stats = fit_norm_stats(cycles);
  for (const auto& c : cycles) {
    EXPECT_LT((invert_norm(apply_norm(c, stats), stats).data - c.data).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NormStats, ConstantChannelIsDegenerate) {
  Rng rng(11);
  auto cycles = random_cycles(rng, 1);
  cycles[0].data.row(4).setConstant(2.0);
  EXPECT_GAITAD_ERROR(fit_norm_stats(cycles), ErrorCode::kDegenerateChannel);
}

TEST(GaitCycle, ValidateShape) {
  GaitCycle c;
  c.data = Eigen::MatrixXd::Zero(9, 199);
  EXPECT_GAITAD_ERROR(c.validate(), ErrorCode::kShapeError);
  c.data = Eigen::MatrixXd::Zero(9, 200);
  c.validate();
  c.data(0, 0) = std::nan("");
  EXPECT_GAITAD_ERROR(c.validate(), ErrorCode::kShapeError);
}

}  // namespace
}  // namespace gaitad
