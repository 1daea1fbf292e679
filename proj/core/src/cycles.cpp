#include "gaitad/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitad/error.hpp"

namespace gaitad {

namespace {

// Mirror an out-of-range index back into [0, n) without repeating the edge sample.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Eigen::VectorXd convolve_reflect(const Eigen::VectorXd& x, const Eigen::VectorXd& kernel) {
  const Eigen::Index n = x.size();
  const Eigen::Index half = kernel.size() / 2;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i - half >= 0 && i + half < n) {
      acc = kernel.dot(x.segment(i - half, kernel.size()));
    } else {
      for (Eigen::Index k = 0; k < kernel.size(); ++k) {
        acc += kernel[k] * x[reflect_index(i + k - half, n)];
      }
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace

Eigen::VectorXd gaussian_smooth(const Eigen::VectorXd& x, double sigma) {
  if (!(sigma > 0.0)) return x;
  const auto half = static_cast<Eigen::Index>(std::ceil(4.0 * sigma));
  Eigen::VectorXd kernel(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) / sigma;
    kernel[k + half] = std::exp(-0.5 * u * u);
  }
  kernel /= kernel.sum();
  return convolve_reflect(x, kernel);
}

Eigen::VectorXd ricker_cwt(const Eigen::VectorXd& x, double sigma) {
  const auto half = static_cast<Eigen::Index>(std::ceil(5.0 * sigma));
  Eigen::VectorXd kernel(2 * half + 1);
  for (Eigen::Index k = -half; k <= half; ++k) {
    const double u = static_cast<double>(k) / sigma;
    kernel[k + half] = (1.0 - u * u) * std::exp(-0.5 * u * u);
  }
  // Truncation leaves a small DC component; remove it.
  kernel.array() -= kernel.mean();
  kernel /= std::sqrt(sigma);
  return convolve_reflect(x, kernel);
}

Eigen::VectorXd event_response(const Eigen::VectorXd& vertical_accel, double sample_rate,
                               const EventConfig& config) {
  const Eigen::VectorXd band = gaussian_smooth(vertical_accel, config.dog_sigma_short * sample_rate) -
                               gaussian_smooth(vertical_accel, config.dog_sigma_long * sample_rate);
  return ricker_cwt(band, config.cwt_support / 5.0 * sample_rate);
}

namespace {

template <class Better>
std::vector<Eigen::Index> extrema(const Eigen::VectorXd& x, Better better) {
  std::vector<Eigen::Index> out;
  const Eigen::Index n = x.size();
  Eigen::Index i = 1;
  while (i < n - 1) {
    if (!better(x[i], x[i - 1])) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n && better(x[i], x[j + 1])) out.push_back((i + j) / 2);
    i = j + 1;
  }
  return out;
}

}  // namespace

std::vector<Eigen::Index> local_minima(const Eigen::VectorXd& x) {
  return extrema(x, [](double a, double b) { return a < b; });
}

std::vector<Eigen::Index> local_maxima(const Eigen::VectorXd& x) {
  return extrema(x, [](double a, double b) { return a > b; });
}

GaitEvents detect_events(const UniformSeries& series, const EventConfig& config,
                         Eigen::Index channel) {
  const double fs = series.sample_rate;
  if (series.size() < 3 || series.duration() < config.min_duration) {
    fail(ErrorCode::kNoGaitDetected, "walk shorter than " + std::to_string(config.min_duration) + " s");
  }
  const Eigen::VectorXd x = series.values.col(channel);
  const Eigen::VectorXd response = event_response(x, fs, config);

  const double deepest = -response.minCoeff();
  const double scale = 1.0 + x.cwiseAbs().maxCoeff();
  if (!(deepest > 1e-9 * scale)) fail(ErrorCode::kNoGaitDetected, "flat event response");

  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i : local_minima(response)) {
    if (response[i] <= -config.min_depth_fraction * deepest) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return response[a] < response[b]; });

  // Deepest-first suppression enforces the minimum IC-to-IC interval.
  const auto min_gap = static_cast<Eigen::Index>(std::ceil(config.min_ic_interval * fs));
  const auto max_gap = static_cast<Eigen::Index>(std::floor(config.max_ic_interval * fs));
  std::vector<Eigen::Index> accepted;
  for (Eigen::Index c : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](Eigen::Index a) {
      return std::abs(a - c) < min_gap;
    });
    if (clear) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end());
  if (accepted.empty()) fail(ErrorCode::kNoGaitDetected, "no initial contact survived gating");

  // Keep the longest run whose consecutive intervals respect the upper gate.
  std::size_t best_begin = 0;
  std::size_t best_len = 1;
  std::size_t run_begin = 0;
  for (std::size_t i = 1; i <= accepted.size(); ++i) {
    if (i == accepted.size() || accepted[i] - accepted[i - 1] > max_gap) {
      if (i - run_begin > best_len) {
        best_begin = run_begin;
        best_len = i - run_begin;
      }
      run_begin = i;
    }
  }

  GaitEvents events;
  events.ic.assign(accepted.begin() + static_cast<std::ptrdiff_t>(best_begin),
                   accepted.begin() + static_cast<std::ptrdiff_t>(best_begin + best_len));

  Eigen::VectorXd second = Eigen::VectorXd::Zero(response.size());
  for (Eigen::Index i = 1; i + 1 < response.size(); ++i) {
    second[i] = response[i + 1] - 2.0 * response[i] + response[i - 1];
  }
  const std::vector<Eigen::Index> peaks = local_maxima(second);

  for (std::size_t k = 0; k < events.ic.size(); ++k) {
    Eigen::Index interval = 0;
    if (k + 1 < events.ic.size()) {
      interval = events.ic[k + 1] - events.ic[k];
    } else if (k > 0) {
      interval = events.ic[k] - events.ic[k - 1];
    } else {
      break;
    }
    const Eigen::Index lo = events.ic[k];
    const Eigen::Index hi = std::min<Eigen::Index>(
        response.size(),
        lo + static_cast<Eigen::Index>(std::ceil(config.fc_window_fraction * static_cast<double>(interval))));
    Eigen::Index best = -1;
    for (Eigen::Index p : peaks) {
      if (p > lo && p < hi && (best < 0 || second[p] > second[best])) best = p;
    }
    if (best < 0 && hi - lo > 1) {
      second.segment(lo + 1, hi - lo - 1).maxCoeff(&best);
      best += lo + 1;
    }
    if (best > 0) events.fc.push_back(best);
  }
  return events;
}

std::vector<RawCycle> slice_cycles(const MultiModalTrace& trace, const GaitEvents& events) {
  if (events.ic.size() < 3) {
    fail(ErrorCode::kNoGaitDetected, "at least 3 initial contacts are needed for a cycle");
  }
  const Eigen::Index n = trace.accel.size();
  if (trace.gyro.size() != n || trace.angles.size() != n) {
    fail(ErrorCode::kShapeError, "trace streams have different lengths");
  }
  std::vector<RawCycle> cycles;
  for (std::size_t i = 0; i + 2 < events.ic.size(); ++i) {
    const Eigen::Index begin = events.ic[i];
    const Eigen::Index end = events.ic[i + 2];
    if (begin < 0 || end > n || end - begin < 2) {
      fail(ErrorCode::kShapeError, "initial contact outside the trace");
    }
    RawCycle c;
    c.label = trace.label;
    c.start_index = begin;
    c.data.resize(kCycleChannels, end - begin);
    c.data.topRows(3) = trace.accel.values.middleRows(begin, end - begin).transpose();
    c.data.middleRows(3, 3) = trace.gyro.values.middleRows(begin, end - begin).transpose();
    c.data.bottomRows(3) = trace.angles.values.middleRows(begin, end - begin).transpose();
    cycles.push_back(std::move(c));
  }
  return cycles;
}

Eigen::MatrixXd detrend_cycle(const Eigen::MatrixXd& cycle) {
  const Eigen::Index len = cycle.cols();
  if (len < 2) fail(ErrorCode::kShapeError, "detrending needs at least 2 samples");
  const double mid = static_cast<double>(len - 1) / 2.0;
  const Eigen::RowVectorXd centered =
      Eigen::RowVectorXd::LinSpaced(len, 0.0, static_cast<double>(len - 1)).array() - mid;
  const double sxx = centered.squaredNorm();
  Eigen::MatrixXd out = cycle;
  for (Eigen::Index r = 0; r < cycle.rows(); ++r) {
    const double mean = cycle.row(r).mean();
    const double slope = (centered.array() * (cycle.row(r).array() - mean)).sum() / sxx;
    out.row(r) -= slope * centered;
  }
  return out;
}

Eigen::MatrixXd normalize_length(const Eigen::MatrixXd& cycle, Eigen::Index target) {
  const Eigen::Index len = cycle.cols();
  if (len < 2 || target < 2) fail(ErrorCode::kShapeError, "length normalization needs >= 2 samples");
  Eigen::MatrixXd out(cycle.rows(), target);
  const double step = static_cast<double>(len - 1) / static_cast<double>(target - 1);
  for (Eigen::Index k = 0; k < target; ++k) {
    if (k == target - 1) {
      out.col(k) = cycle.col(len - 1);
      continue;
    }
    const double u = static_cast<double>(k) * step;
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), len - 2);
    const double w = u - static_cast<double>(i);
    out.col(k) = cycle.col(i) + w * (cycle.col(i + 1) - cycle.col(i));
  }
  return out;
}

void GaitCycle::validate() const {
  if (data.rows() != kCycleChannels || data.cols() != kCycleLength) {
    fail(ErrorCode::kShapeError, "gait cycle must be 9 x 200, got " + std::to_string(data.rows()) +
                                     " x " + std::to_string(data.cols()));
  }
  if (!data.allFinite()) fail(ErrorCode::kShapeError, "gait cycle contains non-finite values");
}

NormStats fit_norm_stats(const std::vector<GaitCycle>& cycles) {
  if (cycles.empty()) fail(ErrorCode::kInvalidArgument, "normalization needs at least one cycle");
  const Eigen::Index channels = cycles.front().data.rows();
  NormStats stats;
  stats.mean = Eigen::VectorXd::Zero(channels);
  stats.std = Eigen::VectorXd::Zero(channels);
  double count = 0.0;
  for (const auto& c : cycles) {
    if (c.data.rows() != channels) fail(ErrorCode::kShapeError, "inconsistent channel count");
    stats.mean += c.data.rowwise().sum();
    count += static_cast<double>(c.data.cols());
  }
  stats.mean /= count;
  for (const auto& c : cycles) {
    stats.std += (c.data.colwise() - stats.mean).array().square().rowwise().sum().matrix();
  }
  stats.std = (stats.std / count).cwiseSqrt();
  for (Eigen::Index r = 0; r < channels; ++r) {
    if (stats.std[r] < 1e-12) {
      fail(ErrorCode::kDegenerateChannel, "channel " + std::to_string(r) + " has zero variance");
    }
  }
  return stats;
}

GaitCycle apply_norm(const GaitCycle& cycle, const NormStats& stats) {
  GaitCycle out = cycle;
  out.data = ((cycle.data.colwise() - stats.mean).array().colwise() / stats.std.array()).matrix();
  return out;
}

GaitCycle invert_norm(const GaitCycle& cycle, const NormStats& stats) {
  GaitCycle out = cycle;
  out.data = ((cycle.data.array().colwise() * stats.std.array()).matrix().colwise() + stats.mean);
  return out;
}

}  // namespace gaitad
