#pragma once

// Synthetic multi-view scenes with exact ground truth, plus the brute-force
// oracles that the scorer and view-graph accuracy checks are measured against.

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sara/epipolar.h"
#include "sara/feature_io.h"
#include "sara/types.h"

namespace sara {

struct SyntheticCamera {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  uint32_t width = 640;
  uint32_t height = 480;
  uint32_t clutter = 0;  // extra keypoints with no 3D point behind them

  // Pixel projection; nullopt behind the camera.
  std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& X) const;
};

struct SyntheticScene {
  std::vector<SyntheticCamera> cameras;
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // outward surface normal per point
  Descriptors point_descriptors;         // one unit row per point
  std::vector<std::vector<bool>> visibility;  // [camera][point]
  double noise_px = 0.0;
  double max_view_angle = 1.3089969389957472;  // 75 degrees
  uint64_t seed = 0;

  size_t num_visible(size_t camera) const;
};

struct OrbitOptions {
  uint32_t n_cameras = 20;
  uint32_t n_points = 400;
  double radius = 5.0;
  double noise_px = 0.0;
  uint64_t seed = 0;
  uint32_t descriptor_dim = 32;
  uint32_t width = 640;
  uint32_t height = 480;
  double focal = 1000.0;
  double min_point_radius = 0.85;  // points lie on a shell in [min, 1]
  double max_view_angle = 1.3089969389957472;
};

inline constexpr size_t kMinVisiblePoints = 20;

// Cameras evenly spaced on a horizontal circle, all looking at the origin.
// Regenerates the point cloud until every camera sees >= 20 points.
SyntheticScene generate_orbit_scene(const OrbitOptions& options);
SyntheticScene generate_orbit_scene(uint32_t n_cameras, uint32_t n_points, double radius,
                                    double noise_px, uint64_t seed);

struct PlantedViewOptions {
  double azimuth = 0.0;              // radians, around the vertical axis
  double elevation = 0.17453292519943295;  // 10 degrees
  double zoom = 2.0;                       // focal multiplier, narrows the view
  uint32_t clutter = 1000;
};

// Appends one poorly connected camera (narrow view of a small patch plus
// unmatched clutter keypoints) and recomputes visibility. Its index is the
// last camera.
void plant_weak_view(SyntheticScene& scene, const PlantedViewOptions& options);

// Camera at `center` looking at `target`.
SyntheticCamera look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                        const Eigen::Matrix3d& K, uint32_t width, uint32_t height);

void compute_visibility(SyntheticScene& scene);

struct RenderOptions {
  double descriptor_noise = 0.0;  // per-component Gaussian sigma
  bool with_intrinsics = true;
};

struct RenderedImage {
  ImageFeatures features;
  std::vector<int32_t> point_ids;  // per keypoint; -1 for clutter
};

std::string synthetic_image_id(size_t camera);

std::vector<RenderedImage> render_features(const SyntheticScene& scene,
                                           const RenderOptions& options = {});
std::vector<ImageFeatures> features_of(const std::vector<RenderedImage>& rendered);

struct PairTruth {
  double overlap_fraction = 0.0;  // |covisible| / sqrt(|vis_i| |vis_j|)
  double median_parallax = 0.0;   // lower median over covisible points, radians
  RelativePose pose;              // camera i -> camera j, unit t
  uint32_t covisible = 0;
};

PairTruth oracle_pair_truth(const SyntheticScene& scene, size_t i, size_t j);

inline constexpr uint32_t kOracleMstMaxNodes = 7;

// Maximum total weight over all spanning forests (spanning trees when the
// graph is connected) by exhaustive enumeration of acyclic edge subsets.
double oracle_mst(const std::map<ImagePair, double>& weights, uint32_t n);

// Writes one feature file per camera, manifest.json and truth.json.
void dump_scene(const SyntheticScene& scene, const std::vector<RenderedImage>& rendered,
                const std::filesystem::path& out_dir);

}  // namespace sara
