#include "sara/epipolar.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "sara/error.h"
#include "sara/rng.h"

namespace sara {

namespace {

constexpr int kMinimalSample = 8;

// Translates the centroid to the origin and scales the mean distance to
// sqrt(2).
Eigen::Matrix3d hartley_transform(std::span<const Eigen::Vector2d> points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  if (!(mean_dist > 1e-12 * std::max(1.0, centroid.norm()))) {
    throw Error(ErrorCode::DegenerateConfiguration, "points collapse to a single location");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d T;
  T << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return T;
}

Eigen::Vector3d homogeneous(const Eigen::Vector2d& x) { return {x.x(), x.y(), 1.0}; }

struct PointSets {
  std::vector<Eigen::Vector2d> a;
  std::vector<Eigen::Vector2d> b;
};

PointSets gather(std::span<const Correspondence> corrs, const Calibration* calib) {
  PointSets sets;
  sets.a.reserve(corrs.size());
  sets.b.reserve(corrs.size());
  for (const Correspondence& c : corrs) {
    if (calib) {
      sets.a.push_back(normalize_point(calib->K_a, c.x_a));
      sets.b.push_back(normalize_point(calib->K_b, c.x_b));
    } else {
      sets.a.push_back(c.x_a);
      sets.b.push_back(c.x_b);
    }
  }
  return sets;
}

struct Evaluation {
  std::vector<uint32_t> inliers;
  double total_error = 0.0;
};

Evaluation evaluate(const Eigen::Matrix3d& model, const PointSets& pts, double threshold) {
  Evaluation ev;
  for (size_t i = 0; i < pts.a.size(); ++i) {
    const double err = sampson_error(model, pts.a[i], pts.b[i]);
    if (err < threshold) {
      ev.inliers.push_back(static_cast<uint32_t>(i));
      ev.total_error += err;
    }
  }
  return ev;
}

Eigen::Matrix3d fit(std::span<const Eigen::Vector2d> a, std::span<const Eigen::Vector2d> b,
                    bool essential) {
  const Eigen::Matrix3d F = estimate_fundamental_8pt(a, b);
  return essential ? project_to_essential(F) : F;
}

}  // namespace

double Calibration::mean_focal() const {
  return 0.25 * (K_a(0, 0) + K_a(1, 1) + K_b(0, 0) + K_b(1, 1));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return S;
}

Eigen::Vector2d normalize_point(const Eigen::Matrix3d& K, const Eigen::Vector2d& x) {
  const Eigen::Vector3d ray = K.inverse() * homogeneous(x);
  return ray.hnormalized();
}

Eigen::Matrix3d estimate_fundamental_8pt(std::span<const Eigen::Vector2d> points_a,
                                         std::span<const Eigen::Vector2d> points_b) {
  if (points_a.size() != points_b.size() || points_a.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientCorrespondences, "8-point needs >= 8 correspondences");
  }
  const Eigen::Matrix3d Ta = hartley_transform(points_a);
  const Eigen::Matrix3d Tb = hartley_transform(points_b);

  const auto n = static_cast<Eigen::Index>(points_a.size());
  Eigen::MatrixXd A(std::max<Eigen::Index>(n, 9), 9);
  A.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d xa = Ta * homogeneous(points_a[static_cast<size_t>(i)]);
    const Eigen::Vector3d xb = Tb * homogeneous(points_b[static_cast<size_t>(i)]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) A(i, 3 * r + c) = xb[r] * xa[c];
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv[7] > 1e-10 * sv[0])) {
    throw Error(ErrorCode::DegenerateConfiguration, "8-point design matrix has rank < 8");
  }
  const Eigen::VectorXd f = svd.matrixV().col(8);
  Eigen::Matrix3d F_hat;
  F_hat << f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8];

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd_f(F_hat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd_f.singularValues();
  s[2] = 0.0;
  F_hat = svd_f.matrixU() * s.asDiagonal() * svd_f.matrixV().transpose();

  Eigen::Matrix3d F = Tb.transpose() * F_hat * Ta;
  const double norm = F.norm();
  if (!(norm > 0) || !F.allFinite()) {
    throw Error(ErrorCode::DegenerateConfiguration, "8-point produced a null matrix");
  }
  return F / norm;
}

Eigen::Matrix3d estimate_fundamental_8pt(std::span<const Correspondence> corrs) {
  const PointSets pts = gather(corrs, nullptr);
  return estimate_fundamental_8pt(pts.a, pts.b);
}

Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& M) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Replacing (s1, s2, 0) by their mean (m, m, 0) and rescaling to unit
  // singular values leaves diag(1, 1, 0).
  return svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() * svd.matrixV().transpose();
}

Eigen::Matrix3d estimate_essential(std::span<const Correspondence> corrs, const Calibration& calib) {
  if (corrs.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientCorrespondences, "essential needs >= 8 correspondences");
  }
  const PointSets pts = gather(corrs, &calib);
  return fit(pts.a, pts.b, /*essential=*/true);
}

double sampson_error(const Eigen::Matrix3d& model, const Eigen::Vector2d& x_a,
                     const Eigen::Vector2d& x_b) {
  const Eigen::Vector3d xa = homogeneous(x_a);
  const Eigen::Vector3d xb = homogeneous(x_b);
  const Eigen::Vector3d Mxa = model * xa;
  const Eigen::Vector3d Mtxb = model.transpose() * xb;
  const double numerator = xb.dot(Mxa);
  const double denominator = Mxa.x() * Mxa.x() + Mxa.y() * Mxa.y() + Mtxb.x() * Mtxb.x() +
                             Mtxb.y() * Mtxb.y();
  if (!(denominator > 0.0)) return std::numeric_limits<double>::infinity();
  return numerator * numerator / denominator;
}

double sampson_error(const Eigen::Matrix3d& model, const Correspondence& corr, Frame frame,
                     const Calibration* calib) {
  if (frame == Frame::Pixel) return sampson_error(model, corr.x_a, corr.x_b);
  if (!calib) {
    throw Error(ErrorCode::InvalidArgument, "normalized-frame Sampson error needs calibration");
  }
  return sampson_error(model, normalize_point(calib->K_a, corr.x_a),
                       normalize_point(calib->K_b, corr.x_b));
}

TwoViewModel short_ransac(std::span<const Correspondence> corrs,
                          const std::optional<Calibration>& calib, const RansacOptions& options,
                          CounterRng& rng) {
  if (corrs.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientCorrespondences,
                std::to_string(corrs.size()) + " correspondences, need >= 8");
  }
  if (options.iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "RANSAC needs at least one iteration");
  }
  const bool essential = calib.has_value();
  const PointSets pts = gather(corrs, essential ? &*calib : nullptr);
  double threshold = options.inlier_threshold_px * options.inlier_threshold_px;
  if (essential) {
    const double f = calib->mean_focal();
    threshold /= f * f;
  }

  std::vector<uint32_t> order(corrs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::array<Eigen::Vector2d, kMinimalSample> sample_a;
  std::array<Eigen::Vector2d, kMinimalSample> sample_b;

  bool found = false;
  Eigen::Matrix3d best_model;
  Evaluation best;
  for (int it = 0; it < options.iterations; ++it) {
    partial_shuffle(std::span<uint32_t>(order), kMinimalSample, rng);
    for (int s = 0; s < kMinimalSample; ++s) {
      sample_a[s] = pts.a[order[s]];
      sample_b[s] = pts.b[order[s]];
    }
    Eigen::Matrix3d model;
    try {
      model = fit(sample_a, sample_b, essential);
    } catch (const Error&) {
      continue;
    }
    Evaluation ev = evaluate(model, pts, threshold);
    const bool better = !found || ev.inliers.size() > best.inliers.size() ||
                        (ev.inliers.size() == best.inliers.size() &&
                         ev.total_error < best.total_error);
    if (better) {
      found = true;
      best_model = model;
      best = std::move(ev);
    }
  }
  if (!found || best.inliers.size() < kMinimalSample) {
    throw Error(ErrorCode::NoModelFound, "no hypothesis reached 8 inliers");
  }

  // One refit on the consensus set. The refit replaces the sample model
  // unless it is degenerate or its own consensus drops below 8.
  {
    std::vector<Eigen::Vector2d> in_a, in_b;
    for (uint32_t idx : best.inliers) {
      in_a.push_back(pts.a[idx]);
      in_b.push_back(pts.b[idx]);
    }
    try {
      const Eigen::Matrix3d refit = fit(in_a, in_b, essential);
      Evaluation ev = evaluate(refit, pts, threshold);
      if (ev.inliers.size() >= kMinimalSample) {
        best_model = refit;
        best = std::move(ev);
      }
    } catch (const Error&) {
    }
  }

  TwoViewModel out;
  out.kind = essential ? ModelKind::Essential : ModelKind::Fundamental;
  out.matrix = best_model;
  out.inliers = std::move(best.inliers);
  if (essential) {
    std::vector<Correspondence> inlier_corrs;
    inlier_corrs.reserve(out.inliers.size());
    for (uint32_t idx : out.inliers) inlier_corrs.push_back(corrs[idx]);
    const RelativePose pose = recover_pose(out.matrix, inlier_corrs, *calib);
    out.triangulation_angles = triangulate_angles(pose, inlier_corrs, *calib);
    out.pose = pose;
  }
  return out;
}

std::optional<Eigen::Vector3d> triangulate_midpoint(const RelativePose& pose,
                                                    const Eigen::Vector3d& ray_a,
                                                    const Eigen::Vector3d& ray_b) {
  const Eigen::Vector3d center_b = -pose.R.transpose() * pose.t;
  const Eigen::Vector3d da = ray_a;
  const Eigen::Vector3d db = pose.R.transpose() * ray_b;
  const double a = da.dot(da);
  const double b = da.dot(db);
  const double c = db.dot(db);
  const double p = da.dot(center_b);
  const double q = db.dot(center_b);
  const double det = b * b - a * c;
  if (!(std::abs(det) > 1e-14 * a * c)) return std::nullopt;
  const double s = (b * q - c * p) / det;
  const double u = (a * q - b * p) / det;
  return 0.5 * (s * da + center_b + u * db);
}

RelativePose recover_pose(const Eigen::Matrix3d& E, std::span<const Correspondence> inliers,
                          const Calibration& calib) {
  if (inliers.empty()) {
    throw Error(ErrorCode::InsufficientCorrespondences, "pose recovery needs >= 1 inlier");
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0) U = -U;
  if (V.determinant() < 0) V = -V;
  Eigen::Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d R1 = U * W * V.transpose();
  const Eigen::Matrix3d R2 = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();
  const std::array<RelativePose, 4> candidates = {
      RelativePose{R1, t}, RelativePose{R1, -t}, RelativePose{R2, t}, RelativePose{R2, -t}};

  std::vector<Eigen::Vector3d> rays_a, rays_b;
  rays_a.reserve(inliers.size());
  rays_b.reserve(inliers.size());
  const Eigen::Matrix3d Ka_inv = calib.K_a.inverse();
  const Eigen::Matrix3d Kb_inv = calib.K_b.inverse();
  for (const Correspondence& c : inliers) {
    rays_a.push_back(Ka_inv * homogeneous(c.x_a));
    rays_b.push_back(Kb_inv * homogeneous(c.x_b));
  }

  size_t best_count = 0;
  size_t best_index = 0;
  for (size_t k = 0; k < candidates.size(); ++k) {
    const RelativePose& pose = candidates[k];
    size_t count = 0;
    for (size_t i = 0; i < rays_a.size(); ++i) {
      const auto X = triangulate_midpoint(pose, rays_a[i], rays_b[i]);
      if (X && X->z() > 0 && (pose.R * *X + pose.t).z() > 0) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_index = k;
    }
  }
  if (2 * best_count <= inliers.size()) {
    throw Error(ErrorCode::CheiralityAmbiguity,
                "no decomposition puts more than half of the points in front of both cameras");
  }
  return candidates[best_index];
}

std::vector<double> triangulate_angles(const RelativePose& pose,
                                       std::span<const Correspondence> inliers,
                                       const Calibration& calib) {
  const Eigen::Matrix3d Ka_inv = calib.K_a.inverse();
  const Eigen::Matrix3d Kb_inv = calib.K_b.inverse();
  const Eigen::Vector3d center_b = -pose.R.transpose() * pose.t;
  std::vector<double> angles;
  angles.reserve(inliers.size());
  for (const Correspondence& c : inliers) {
    const auto X =
        triangulate_midpoint(pose, Ka_inv * homogeneous(c.x_a), Kb_inv * homogeneous(c.x_b));
    angles.push_back(X ? direction_error(*X, *X - center_b) : 0.0);
  }
  return angles;
}

double rotation_error(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2) {
  return Eigen::AngleAxisd(Eigen::Quaterniond(R1.transpose() * R2).normalized()).angle();
}

double direction_error(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double lower_median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace sara
