#include "gaitad/egomotion.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gaitad/error.hpp"
#include "gaitad/rng.hpp"

namespace gaitad {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

double sampson_distance(const Mat3& essential, const Correspondence& c) {
  const double r = c.p_curr.dot(essential * c.p_prev);
  const Vec3 ep = essential * c.p_prev;
  const Vec3 etp = essential.transpose() * c.p_curr;
  const double den = ep.x() * ep.x() + ep.y() * ep.y() + etp.x() * etp.x() + etp.y() * etp.y();
  if (den <= 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return r * r / den;
}

Mat3 project_to_essential(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d(1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2, 0.0);
  Mat3 e = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  // Fix the overall sign: the largest-magnitude entry is positive.
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  e.cwiseAbs().maxCoeff(&r, &c);
  if (e(r, c) < 0.0) e = -e;
  return e;
}

namespace {

// Similarity that moves the centroid to the origin and sets the mean
// distance to sqrt(2).
Mat3 normalizing_transform(const std::vector<Correspondence>& matches, bool current) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& m : matches) mean += (current ? m.p_curr : m.p_prev).head<2>();
  mean /= static_cast<double>(matches.size());
  double dist = 0.0;
  for (const auto& m : matches) dist += ((current ? m.p_curr : m.p_prev).head<2>() - mean).norm();
  dist /= static_cast<double>(matches.size());
  const double s = dist > 0.0 ? std::numbers::sqrt2 / dist : 1.0;
  Mat3 t;
  t << s, 0.0, -s * mean.x(),
       0.0, s, -s * mean.y(),
       0.0, 0.0, 1.0;
  return t;
}

}  // namespace

Mat3 eight_point(const std::vector<Correspondence>& matches) {
  if (matches.size() < 8) {
    fail(ErrorCode::kDegenerateInput, "eight-point fit needs at least 8 matches");
  }
  const Mat3 t_prev = normalizing_transform(matches, false);
  const Mat3 t_curr = normalizing_transform(matches, true);

  Eigen::MatrixXd a(static_cast<Eigen::Index>(matches.size()), 9);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vec3 p1 = t_prev * matches[i].p_prev;
    const Vec3 p2 = t_curr * matches[i].p_curr;
    const auto row = static_cast<Eigen::Index>(i);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(row, 3 * r + c) = p2[r] * p1[c];
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd e = svd.matrixV().col(8);
  Mat3 en;
  en << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
  return project_to_essential(t_curr.transpose() * en * t_prev);
}

EssentialEstimate estimate_essential(const FrameMatches& frame, const RansacConfig& config) {
  const auto& matches = frame.matches;
  const std::size_t n = matches.size();
  if (n < 8) {
    fail(ErrorCode::kDegenerateInput, "frame " + std::to_string(frame.frame_index) +
                                          " has fewer than 8 matches");
  }
  if (config.iterations < 1) fail(ErrorCode::kInvalidArgument, "RANSAC needs >= 1 iteration");

  const double threshold_sq = config.threshold * config.threshold;
  auto score = [&](const Mat3& e, std::vector<bool>& mask) {
    std::size_t count = 0;
    mask.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (sampson_distance(e, matches[i]) < threshold_sq) {
        mask[i] = true;
        ++count;
      }
    }
    return count;
  };

  Rng rng(config.seed);
  std::vector<std::size_t> pool(n);
  std::vector<Correspondence> sample(8);
  std::vector<bool> mask;

  EssentialEstimate best;
  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t k = 0; k < 8; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.index(n - k));
      std::swap(pool[k], pool[j]);
      sample[k] = matches[pool[k]];
    }
    const Mat3 e = eight_point(sample);
    const std::size_t count = score(e, mask);
    if (count > best.inlier_count) {
      best.essential = e;
      best.inliers = mask;
      best.inlier_count = count;
    }
  }

  if (best.inlier_count >= 8) {
    std::vector<Correspondence> inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (best.inliers[i]) inliers.push_back(matches[i]);
    }
    const Mat3 refit = eight_point(inliers);
    const std::size_t count = score(refit, mask);
    if (count >= best.inlier_count) {
      best.essential = refit;
      best.inliers = mask;
      best.inlier_count = count;
    }
  }

  const double required = std::max(8.0, config.min_inlier_ratio * static_cast<double>(n));
  if (static_cast<double>(best.inlier_count) < required) {
    fail(ErrorCode::kEstimationFailure,
         "frame " + std::to_string(frame.frame_index) + ": best hypothesis has " +
             std::to_string(best.inlier_count) + " of " + std::to_string(n) + " inliers");
  }
  return best;
}

RelativePose decompose_essential(const Mat3& essential,
                                 const std::vector<Correspondence>& inliers) {
  if (inliers.empty()) fail(ErrorCode::kDegenerateInput, "decomposition needs inliers");

  Eigen::JacobiSVD<Mat3> svd(essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Mat3 w;
  w << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const Mat3 ra = u * w * v.transpose();
  const Mat3 rb = u * w.transpose() * v.transpose();
  const Vec3 t = u.col(2).normalized();
  const std::array<RelativePose, 4> candidates{{{ra, t}, {ra, -t}, {rb, t}, {rb, -t}}};

  auto in_front = [](const RelativePose& pose, const Correspondence& c) {
    Eigen::Matrix<double, 3, 2> a;
    a.col(0) = pose.rotation * c.p_prev;
    a.col(1) = -c.p_curr;
    const Eigen::Vector2d depth = a.colPivHouseholderQr().solve(-pose.translation);
    const Vec3 x_curr = pose.rotation * (depth[0] * c.p_prev) + pose.translation;
    return depth[0] > 0.0 && x_curr.z() > 0.0;
  };

  std::array<std::size_t, 4> counts{};
  for (std::size_t k = 0; k < 4; ++k) {
    for (const auto& c : inliers) counts[k] += in_front(candidates[k], c) ? 1 : 0;
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  const auto ties = std::count(counts.begin(), counts.end(), counts[best]);
  if (counts[best] == 0 || ties > 1) {
    fail(ErrorCode::kAmbiguousDecomposition, "cheirality test does not single out a candidate");
  }
  return candidates[best];
}

Mat3 rot_x(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  m << 1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c;
  return m;
}

Mat3 rot_y(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  m << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return m;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

EulerAngles euler_angles(const Mat3& r) {
  EulerAngles out;
  out.roll = std::atan2(r(1, 0), r(0, 0));
  out.yaw = std::atan2(r(2, 1), r(2, 2));
  out.pitch = std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2)));
  out.gimbal_warning = std::abs(out.pitch) > std::numbers::pi / 2.0 - 1e-6;
  return out;
}

Mat3 compose_euler(double roll, double pitch, double yaw) {
  return rot_z(roll) * rot_y(pitch) * rot_x(yaw);
}

Mat3 orthonormalize(const Mat3& m) {
  const Vec3 c0 = m.col(0).normalized();
  const Vec3 c1 = (m.col(1) - c0.dot(m.col(1)) * c0).normalized();
  Mat3 out;
  out.col(0) = c0;
  out.col(1) = c1;
  out.col(2) = c0.cross(c1);
  return out;
}

PoseChain integrate_poses(const std::vector<RelativePose>& relatives) {
  if (relatives.empty()) fail(ErrorCode::kInvalidArgument, "pose chain needs at least one step");
  PoseChain chain;
  chain.rotations.reserve(relatives.size() + 1);
  chain.translations.reserve(relatives.size() + 1);
  chain.angles.reserve(relatives.size() + 1);
  chain.rotations.push_back(Mat3::Identity());
  chain.translations.push_back(Vec3::Zero());
  chain.angles.push_back(EulerAngles{});
  for (const auto& rel : relatives) {
    chain.rotations.push_back(orthonormalize(rel.rotation * chain.rotations.back()));
    chain.translations.push_back(rel.rotation * chain.translations.back() + rel.translation);
    chain.angles.push_back(euler_angles(rel.rotation));
  }
  return chain;
}

TimedSeries angles_to_series(const PoseChain& chain, double frame_rate, double tau0) {
  if (!(frame_rate > 0.0)) fail(ErrorCode::kInvalidArgument, "frame rate must be positive");
  TimedSeries out;
  const auto n = static_cast<Eigen::Index>(chain.angles.size());
  out.values.resize(n, 3);
  out.timestamps.resize(chain.angles.size());
  out.channel_names = {"roll", "pitch", "yaw"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = chain.angles[static_cast<std::size_t>(i)];
    out.timestamps[static_cast<std::size_t>(i)] = tau0 + static_cast<double>(i) / frame_rate;
    out.values(i, 0) = a.roll;
    out.values(i, 1) = a.pitch;
    out.values(i, 2) = a.yaw;
  }
  return out;
}

PoseChain poses_from_matches(const std::vector<FrameMatches>& frames,
                             const RansacConfig& config) {
  std::vector<RelativePose> relatives;
  relatives.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0 && frames[i].frame_index != frames[i - 1].frame_index + 1) {
      fail(ErrorCode::kFormatError, "frame indices must increase by one");
    }
    const EssentialEstimate est = estimate_essential(frames[i], config);
    std::vector<Correspondence> inliers;
    inliers.reserve(est.inlier_count);
    for (std::size_t k = 0; k < frames[i].matches.size(); ++k) {
      if (est.inliers[k]) inliers.push_back(frames[i].matches[k]);
    }
    relatives.push_back(decompose_essential(est.essential, inliers));
  }
  return integrate_poses(relatives);
}

}  // namespace gaitad
