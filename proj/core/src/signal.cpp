#include "gaitad/signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "gaitad/error.hpp"

namespace gaitad {

void TimedSeries::validate() const {
  if (static_cast<Eigen::Index>(timestamps.size()) != values.rows()) {
    fail(ErrorCode::kInvalidArgument, "timestamp count does not match value rows");
  }
  if (values.cols() < 1) {
    fail(ErrorCode::kInvalidArgument, "series needs at least one channel");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      fail(ErrorCode::kInvalidTimestamps,
           "timestamps not strictly increasing at index " + std::to_string(i));
    }
  }
}

UniformSeries resample(const TimedSeries& input, double target_rate) {
  if (!(target_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "target rate must be positive");
  }
  if (input.size() < 2) {
    fail(ErrorCode::kInsufficientData, "resampling needs at least 2 samples");
  }
  input.validate();

  const auto& t = input.timestamps;
  const double first = t.front();
  const double span = t.back() - first;
  const auto count = static_cast<Eigen::Index>(std::floor(span * target_rate + 1e-9)) + 1;

  UniformSeries out;
  out.sample_rate = target_rate;
  out.start_time = first;
  out.values.resize(count, input.channels());

  std::size_t k = 0;
  for (Eigen::Index n = 0; n < count; ++n) {
    const double tn = std::min(first + static_cast<double>(n) / target_rate, t.back());
    while (k + 2 < t.size() && t[k + 1] <= tn) ++k;
    const double w = (tn - t[k]) / (t[k + 1] - t[k]);
    const auto row0 = input.values.row(static_cast<Eigen::Index>(k));
    const auto row1 = input.values.row(static_cast<Eigen::Index>(k + 1));
    out.values.row(n) = row0 + w * (row1 - row0);
  }
  return out;
}

namespace {

using Complex = std::complex<double>;

std::vector<double> expand_real_poly(const std::vector<Complex>& roots) {
  std::vector<Complex> coeffs{1.0};
  for (const auto& r : roots) {
    std::vector<Complex> next(coeffs.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * r;
    }
    coeffs = std::move(next);
  }
  std::vector<double> real(coeffs.size());
  std::transform(coeffs.begin(), coeffs.end(), real.begin(),
                 [](const Complex& c) { return c.real(); });
  return real;
}

Eigen::VectorXd lfilter(const IirFilter& f, const Eigen::VectorXd& x,
                        Eigen::VectorXd state) {
  const auto order = static_cast<Eigen::Index>(f.a.size()) - 1;
  Eigen::VectorXd y(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double xn = x[n];
    const double yn = f.b[0] * xn + (order > 0 ? state[0] : 0.0);
    for (Eigen::Index i = 0; i + 1 < order; ++i) {
      state[i] = f.b[i + 1] * xn + state[i + 1] - f.a[i + 1] * yn;
    }
    if (order > 0) state[order - 1] = f.b[order] * xn - f.a[order] * yn;
    y[n] = yn;
  }
  return y;
}

// Steady-state of the transposed direct form II for a unit step input.
Eigen::VectorXd steady_state(const IirFilter& f) {
  const auto order = static_cast<Eigen::Index>(f.a.size()) - 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(order, order);
  for (Eigen::Index i = 0; i < order; ++i) {
    m(i, 0) += f.a[i + 1];
    if (i + 1 < order) m(i, i + 1) -= 1.0;
  }
  Eigen::VectorXd rhs(order);
  for (Eigen::Index i = 0; i < order; ++i) rhs[i] = f.b[i + 1] - f.a[i + 1] * f.b[0];
  return m.partialPivLu().solve(rhs);
}

}  // namespace

IirFilter design_butterworth_lowpass(int order, double cutoff, double sample_rate) {
  if (order < 1) fail(ErrorCode::kInvalidArgument, "filter order must be >= 1");
  if (!(cutoff > 0.0) || cutoff >= sample_rate / 2.0) {
    fail(ErrorCode::kInvalidCutoff, "cutoff " + std::to_string(cutoff) +
                                        " Hz outside (0, Nyquist) for fs " +
                                        std::to_string(sample_rate));
  }
  const double fs2 = 2.0 * sample_rate;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff / sample_rate);

  std::vector<Complex> poles;
  std::vector<Complex> zeros(static_cast<std::size_t>(order), Complex(-1.0, 0.0));
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order);
    const Complex s = warped * std::polar(1.0, theta);
    poles.push_back((fs2 + s) / (fs2 - s));
  }

  IirFilter f{expand_real_poly(zeros), expand_real_poly(poles)};
  double sum_b = 0.0;
  double sum_a = 0.0;
  for (double v : f.b) sum_b += v;
  for (double v : f.a) sum_a += v;
  const double gain = sum_a / sum_b;
  for (double& v : f.b) v *= gain;
  return f;
}

double magnitude_response(const IirFilter& filter, double frequency, double sample_rate) {
  const double w = 2.0 * std::numbers::pi * frequency / sample_rate;
  Complex num = 0.0;
  Complex den = 0.0;
  for (std::size_t k = 0; k < filter.b.size(); ++k) {
    num += filter.b[k] * std::polar(1.0, -w * static_cast<double>(k));
  }
  for (std::size_t k = 0; k < filter.a.size(); ++k) {
    den += filter.a[k] * std::polar(1.0, -w * static_cast<double>(k));
  }
  return std::abs(num / den);
}

Eigen::VectorXd filtfilt(const IirFilter& filter, const Eigen::VectorXd& x,
                         std::size_t pad_length) {
  const auto n = x.size();
  if (n == 0) return x;
  if (pad_length == 0) pad_length = 3 * filter.a.size();
  const auto pad = std::min<Eigen::Index>(static_cast<Eigen::Index>(pad_length), n - 1);

  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) {
    ext[i] = x[pad - i];
    ext[pad + n + i] = x[n - 2 - i];
  }
  ext.segment(pad, n) = x;

  const Eigen::VectorXd zi = steady_state(filter);
  Eigen::VectorXd y = lfilter(filter, ext, zi * ext[0]);
  y.reverseInPlace();
  y = lfilter(filter, y, zi * y[0]);
  y.reverseInPlace();
  return y.segment(pad, n);
}

UniformSeries lowpass(const UniformSeries& input, double cutoff, int order) {
  const IirFilter f = design_butterworth_lowpass(order, cutoff, input.sample_rate);
  UniformSeries out = input;
  for (Eigen::Index c = 0; c < input.channels(); ++c) {
    out.values.col(c) = filtfilt(f, input.values.col(c));
  }
  return out;
}

int estimate_delay(const UniformSeries& a, const UniformSeries& b, int max_lag,
                   Eigen::Index channel_a, Eigen::Index channel_b) {
  if (max_lag < 0) fail(ErrorCode::kInvalidArgument, "max_lag must be non-negative");
  if (std::abs(a.sample_rate - b.sample_rate) > 1e-9 * a.sample_rate) {
    fail(ErrorCode::kAlignmentFailure, "series sample rates differ");
  }
  if (a.size() <= max_lag || b.size() <= max_lag) {
    fail(ErrorCode::kInsufficientData, "series shorter than max_lag");
  }
  if (channel_a >= a.channels() || channel_b >= b.channels()) {
    fail(ErrorCode::kInvalidArgument, "reference channel out of range");
  }
  const Eigen::VectorXd xa = a.values.col(channel_a);
  const Eigen::VectorXd xb = b.values.col(channel_b);

  auto correlation = [&](int lag, double& out) {
    // pairs (xa[n - lag], xb[n])
    const Eigen::Index begin = std::max<Eigen::Index>(0, lag);
    const Eigen::Index end = std::min<Eigen::Index>(xb.size(), xa.size() + lag);
    const Eigen::Index len = end - begin;
    if (len < 2) return false;
    const auto sa = xa.segment(begin - lag, len);
    const auto sb = xb.segment(begin, len);
    const double ma = sa.mean();
    const double mb = sb.mean();
    const Eigen::ArrayXd da = sa.array() - ma;
    const Eigen::ArrayXd db = sb.array() - mb;
    const double denom = std::sqrt((da * da).sum() * (db * db).sum());
    if (!(denom > 0.0)) return false;
    out = (da * db).sum() / denom;
    return true;
  };

  bool found = false;
  int best_lag = 0;
  double best = 0.0;
  for (int mag = 0; mag <= max_lag; ++mag) {
    for (int lag : {mag, -mag}) {
      if (mag == 0 && lag != 0) continue;
      double r = 0.0;
      if (!correlation(lag, r)) continue;
      if (!found || r > best) {
        found = true;
        best = r;
        best_lag = lag;
      }
    }
  }
  if (!found) fail(ErrorCode::kAlignmentFailure, "no lag with a valid overlap");
  return best_lag;
}

MultiModalTrace align(const UniformSeries& accel, const UniformSeries& gyro,
                      const UniformSeries& angles, const AlignConfig& config) {
  const double fs = accel.sample_rate;
  for (const UniformSeries* s : {&gyro, &angles}) {
    if (std::abs(s->sample_rate - fs) > 1e-9 * fs) {
      fail(ErrorCode::kAlignmentFailure, "streams must share a sample rate");
    }
  }

  // Coarse registration on the shared clock.
  const double common_start = std::max({accel.start_time, gyro.start_time, angles.start_time});
  auto skip_for = [&](const UniformSeries& s) {
    return static_cast<Eigen::Index>(std::llround((common_start - s.start_time) * fs));
  };
  Eigen::Index skip_accel = skip_for(accel);
  Eigen::Index skip_gyro = skip_for(gyro);
  Eigen::Index skip_angles = skip_for(angles);

  auto tail = [fs](const UniformSeries& s, Eigen::Index skip) {
    UniformSeries out;
    out.sample_rate = fs;
    out.start_time = s.time_at(skip);
    const Eigen::Index rows = std::max<Eigen::Index>(0, s.size() - skip);
    out.values = s.values.bottomRows(rows);
    return out;
  };

  const UniformSeries a0 = tail(accel, skip_accel);
  const UniformSeries v0 = tail(angles, skip_angles);
  if (a0.size() <= config.max_lag || v0.size() <= config.max_lag) {
    fail(ErrorCode::kAlignmentFailure, "common support shorter than max_lag");
  }
  const int lag = estimate_delay(a0, v0, config.max_lag, config.vertical_accel_channel,
                                 config.pitch_channel);
  if (lag > 0) {
    skip_angles += lag;
  } else {
    skip_accel -= lag;
    skip_gyro -= lag;
  }

  const Eigen::Index length = std::min({accel.size() - skip_accel, gyro.size() - skip_gyro,
                                        angles.size() - skip_angles});
  if (length <= 0) fail(ErrorCode::kAlignmentFailure, "empty common support");

  auto crop = [&](const UniformSeries& s, Eigen::Index skip, double start) {
    UniformSeries out;
    out.sample_rate = fs;
    out.start_time = start;
    out.values = s.values.middleRows(skip, length);
    return out;
  };
  const double start = accel.time_at(skip_accel);
  MultiModalTrace trace;
  trace.accel = crop(accel, skip_accel, start);
  trace.gyro = crop(gyro, skip_gyro, start);
  trace.angles = crop(angles, skip_angles, start);
  return trace;
}

}  // namespace gaitad
