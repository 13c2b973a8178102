#pragma once

// Two-view geometry used to verify a candidate pair from a few dozen
// correspondences. Convention: a point X_a in camera-a coordinates maps to
// X_b = R * X_a + t, so E = [t]x R, camera a sits at the origin and camera b
// at -R^T t.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sara {

class CounterRng;

struct Correspondence {
  uint32_t idx_a = 0;
  uint32_t idx_b = 0;
  Eigen::Vector2d x_a = Eigen::Vector2d::Zero();  // pixels
  Eigen::Vector2d x_b = Eigen::Vector2d::Zero();
  double similarity = 0.0;
};

struct Calibration {
  Eigen::Matrix3d K_a = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d K_b = Eigen::Matrix3d::Identity();

  // Mean of the four focal lengths; converts pixel thresholds to the
  // normalized image plane.
  double mean_focal() const;
};

enum class ModelKind { Essential, Fundamental };
enum class Frame { Pixel, Normalized };

struct RelativePose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::UnitX();
};

struct TwoViewModel {
  ModelKind kind = ModelKind::Fundamental;
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
  std::vector<uint32_t> inliers;  // indices into the input correspondences
  std::optional<RelativePose> pose;
  std::vector<double> triangulation_angles;  // radians, one per inlier
};

struct RansacOptions {
  int iterations = 32;
  // Inlier iff Sampson error < threshold^2 (pixels). In the normalized frame
  // the squared threshold is divided by the squared mean focal length.
  double inlier_threshold_px = 2.0;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Normalized 8-point algorithm on raw point coordinates. Result is rank 2
// with unit Frobenius norm.
Eigen::Matrix3d estimate_fundamental_8pt(std::span<const Eigen::Vector2d> points_a,
                                         std::span<const Eigen::Vector2d> points_b);
Eigen::Matrix3d estimate_fundamental_8pt(std::span<const Correspondence> corrs);

// 8-point on calibrated coordinates followed by projection onto the essential
// manifold; singular values of the result are (1, 1, 0).
Eigen::Matrix3d estimate_essential(std::span<const Correspondence> corrs, const Calibration& calib);

// Projects any 3x3 matrix to the closest matrix with singular values (1,1,0).
Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& M);

// Pixel -> normalized image plane.
Eigen::Vector2d normalize_point(const Eigen::Matrix3d& K, const Eigen::Vector2d& x);

// Sampson error (x_b^T M x_a)^2 / (|M x_a|_{1,2}^2 + |M^T x_b|_{1,2}^2).
// Returns +infinity when the denominator vanishes.
double sampson_error(const Eigen::Matrix3d& model, const Eigen::Vector2d& x_a,
                     const Eigen::Vector2d& x_b);
// `Normalized` interprets `model` as an essential matrix and maps the pixel
// positions through the calibration first.
double sampson_error(const Eigen::Matrix3d& model, const Correspondence& corr, Frame frame,
                     const Calibration* calib = nullptr);

// Short RANSAC over uniformly sampled 8-subsets with one refit on the best
// inlier set. With calibration the model is an essential matrix and the pose
// and per-inlier triangulation angles are filled in.
TwoViewModel short_ransac(std::span<const Correspondence> corrs,
                          const std::optional<Calibration>& calib, const RansacOptions& options,
                          CounterRng& rng);

// Picks the decomposition of E with the most points in front of both cameras.
RelativePose recover_pose(const Eigen::Matrix3d& E, std::span<const Correspondence> inliers,
                          const Calibration& calib);

// Midpoint triangulation from two bearing rays; nullopt for parallel rays.
std::optional<Eigen::Vector3d> triangulate_midpoint(const RelativePose& pose,
                                                    const Eigen::Vector3d& ray_a,
                                                    const Eigen::Vector3d& ray_b);

// Angle at each triangulated point between the rays to both camera centers,
// in [0, pi]. Failed triangulations yield 0.
std::vector<double> triangulate_angles(const RelativePose& pose,
                                       std::span<const Correspondence> inliers,
                                       const Calibration& calib);

// Geodesic distance between rotations, radians.
double rotation_error(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2);
// Angle between two directions, radians.
double direction_error(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// Order statistic at floor((n - 1) / 2); 0 for an empty list.
double lower_median(std::vector<double> values);

}  // namespace sara
