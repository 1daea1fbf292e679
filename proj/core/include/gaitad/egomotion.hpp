#pragma once

// Relative camera motion from calibrated point correspondences: RANSAC
// essential-matrix estimation, SVD decomposition with cheirality selection,
// pose chaining and roll/pitch/yaw extraction.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "gaitad/signal.hpp"

namespace gaitad {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Homogeneous normalized image points (x, y, 1) in the previous and current frame.
struct Correspondence {
  Vec3 p_prev{0.0, 0.0, 1.0};
  Vec3 p_curr{0.0, 0.0, 1.0};

  static Correspondence from_xy(double x_prev, double y_prev, double x_curr, double y_curr) {
    return {Vec3(x_prev, y_prev, 1.0), Vec3(x_curr, y_curr, 1.0)};
  }
};

struct FrameMatches {
  int frame_index = 1;
  std::vector<Correspondence> matches;
};

struct RansacConfig {
  int iterations = 500;
  /// Bound on the square root of the Sampson distance.
  double threshold = 1e-3;
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 7;
};

struct EssentialEstimate {
  Mat3 essential;  // unit Frobenius norm, singular values (s, s, 0)
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
};

/// Relative motion x_curr = rotation * x_prev + translation.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

struct EulerAngles {
  double roll = 0.0;   // alpha, about z
  double pitch = 0.0;  // beta, about y
  double yaw = 0.0;    // gamma, about x
  bool gimbal_warning = false;
};

struct PoseChain {
  std::vector<Mat3> rotations;     // R_0 = I
  std::vector<Vec3> translations;  // t_0 = 0
  std::vector<EulerAngles> angles; // angles[0] = 0, angles[n] from the n-th relative rotation
};

/// Cross-product matrix [v]_x.
Mat3 skew(const Vec3& v);

/// Sampson approximation of the squared geometric epipolar error.
double sampson_distance(const Mat3& essential, const Correspondence& c);

/// Normalized (Hartley) linear eight-point fit on all given matches followed
/// by projection onto the essential manifold. Needs >= 8 matches.
Mat3 eight_point(const std::vector<Correspondence>& matches);

/// Nearest matrix with singular values (s, s, 0), normalized to unit Frobenius norm.
Mat3 project_to_essential(const Mat3& m);

EssentialEstimate estimate_essential(const FrameMatches& frame, const RansacConfig& config);

/// Four-candidate SVD factorization; picks the candidate that places the most
/// triangulated inliers in front of both cameras. Translation has unit norm.
RelativePose decompose_essential(const Mat3& essential,
                                 const std::vector<Correspondence>& inliers);

EulerAngles euler_angles(const Mat3& rotation);

/// Inverse of euler_angles: Rz(roll) * Ry(pitch) * Rx(yaw).
Mat3 compose_euler(double roll, double pitch, double yaw);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// Gram-Schmidt re-orthonormalization onto SO(3).
Mat3 orthonormalize(const Mat3& m);

PoseChain integrate_poses(const std::vector<RelativePose>& relatives);

/// Angle channels (roll, pitch, yaw) stamped tau0 + n / frame_rate.
TimedSeries angles_to_series(const PoseChain& chain, double frame_rate, double tau0 = 0.0);

/// Full per-walk path: estimate and decompose every frame, then chain.
PoseChain poses_from_matches(const std::vector<FrameMatches>& frames,
                             const RansacConfig& config);

}  // namespace gaitad
