#include "sara/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sara/error.h"
#include "sara/rng.h"

namespace sara {
namespace fs = std::filesystem;

namespace {

constexpr int kMaxGenerationAttempts = 20;
// Stream ids; per-camera streams are offset by the camera index.
constexpr uint64_t kPointStream = 1;
constexpr uint64_t kKeypointNoiseStream = 1ULL << 32;
constexpr uint64_t kDescriptorNoiseStream = 2ULL << 32;
constexpr uint64_t kClutterStream = 3ULL << 32;

Eigen::Vector3d random_unit(CounterRng& rng) {
  Eigen::Vector3d v;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Eigen::VectorXd random_unit(CounterRng& rng, uint32_t dim) {
  Eigen::VectorXd v(dim);
  do {
    for (uint32_t k = 0; k < dim; ++k) v[k] = rng.normal();
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Eigen::Matrix3d intrinsics(double focal, uint32_t width, uint32_t height) {
  Eigen::Matrix3d K;
  K << focal, 0, 0.5 * width, 0, focal, 0.5 * height, 0, 0, 1;
  return K;
}

void generate_points(SyntheticScene& scene, const OrbitOptions& options, uint64_t attempt) {
  CounterRng rng(options.seed, kPointStream + 16 * attempt);
  scene.points.resize(options.n_points);
  scene.normals.resize(options.n_points);
  scene.point_descriptors.resize(options.n_points, options.descriptor_dim);
  for (uint32_t p = 0; p < options.n_points; ++p) {
    const Eigen::Vector3d dir = random_unit(rng);
    const double r = options.min_point_radius + (1.0 - options.min_point_radius) * rng.uniform();
    scene.points[p] = r * dir;
    scene.normals[p] = dir;
    scene.point_descriptors.row(p) = random_unit(rng, options.descriptor_dim).cast<float>().transpose();
  }
}

bool every_camera_sees_enough(const SyntheticScene& scene) {
  for (size_t c = 0; c < scene.cameras.size(); ++c) {
    if (scene.num_visible(c) < kMinVisiblePoints) return false;
  }
  return true;
}

nlohmann::json to_json(const Eigen::Matrix3d& M) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(M(r, c));
  }
  return out;
}

}  // namespace

std::optional<Eigen::Vector2d> SyntheticCamera::project(const Eigen::Vector3d& X) const {
  const Eigen::Vector3d local = R * (X - center);
  if (!(local.z() > 0)) return std::nullopt;
  return (K * local).hnormalized();
}

size_t SyntheticScene::num_visible(size_t camera) const {
  return static_cast<size_t>(std::count(visibility[camera].begin(), visibility[camera].end(), true));
}

SyntheticCamera look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                        const Eigen::Matrix3d& K, uint32_t width, uint32_t height) {
  const Eigen::Vector3d forward = (target - center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (forward.cross(up).norm() < 1e-6) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  SyntheticCamera cam;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.center = center;
  cam.K = K;
  cam.width = width;
  cam.height = height;
  return cam;
}

void compute_visibility(SyntheticScene& scene) {
  const double cos_max = std::cos(scene.max_view_angle);
  scene.visibility.assign(scene.cameras.size(), std::vector<bool>(scene.points.size(), false));
  for (size_t c = 0; c < scene.cameras.size(); ++c) {
    const SyntheticCamera& cam = scene.cameras[c];
    for (size_t p = 0; p < scene.points.size(); ++p) {
      const auto x = cam.project(scene.points[p]);
      if (!x || !(x->x() >= 0.0 && x->x() < cam.width && x->y() >= 0.0 && x->y() < cam.height)) {
        continue;
      }
      const Eigen::Vector3d to_camera = (cam.center - scene.points[p]).normalized();
      scene.visibility[c][p] = scene.normals[p].dot(to_camera) >= cos_max;
    }
  }
}

SyntheticScene generate_orbit_scene(const OrbitOptions& options) {
  if (options.n_cameras < 2) {
    throw Error(ErrorCode::InvalidArgument, "an orbit scene needs at least 2 cameras");
  }
  if (options.n_points < 50) {
    throw Error(ErrorCode::InvalidArgument, "an orbit scene needs at least 50 points");
  }
  if (!(options.radius > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "orbit radius must exceed the point cloud radius");
  }
  SyntheticScene scene;
  scene.noise_px = options.noise_px;
  scene.seed = options.seed;
  scene.max_view_angle = options.max_view_angle;
  const Eigen::Matrix3d K = intrinsics(options.focal, options.width, options.height);
  for (uint32_t c = 0; c < options.n_cameras; ++c) {
    const double phi = 2.0 * std::numbers::pi * c / options.n_cameras;
    const Eigen::Vector3d center(options.radius * std::cos(phi), options.radius * std::sin(phi), 0.0);
    scene.cameras.push_back(look_at(center, Eigen::Vector3d::Zero(), K, options.width, options.height));
  }
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    generate_points(scene, options, static_cast<uint64_t>(attempt));
    compute_visibility(scene);
    if (every_camera_sees_enough(scene)) return scene;
  }
  throw Error(ErrorCode::GenerationFailure, "some camera sees fewer than 20 points after " +
                                                std::to_string(kMaxGenerationAttempts) + " attempts");
}

SyntheticScene generate_orbit_scene(uint32_t n_cameras, uint32_t n_points, double radius,
                                    double noise_px, uint64_t seed) {
  OrbitOptions options;
  options.n_cameras = n_cameras;
  options.n_points = n_points;
  options.radius = radius;
  options.noise_px = noise_px;
  options.seed = seed;
  return generate_orbit_scene(options);
}

void plant_weak_view(SyntheticScene& scene, const PlantedViewOptions& options) {
  if (scene.cameras.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no cameras");
  const SyntheticCamera& ref = scene.cameras.front();
  const double radius = ref.center.norm();
  const Eigen::Vector3d center(radius * std::cos(options.elevation) * std::cos(options.azimuth),
                               radius * std::cos(options.elevation) * std::sin(options.azimuth),
                               radius * std::sin(options.elevation));
  Eigen::Matrix3d K = ref.K;
  K(0, 0) *= options.zoom;
  K(1, 1) *= options.zoom;
  SyntheticCamera cam = look_at(center, Eigen::Vector3d::Zero(), K, ref.width, ref.height);
  cam.clutter = options.clutter;
  scene.cameras.push_back(cam);
  compute_visibility(scene);
  if (scene.num_visible(scene.cameras.size() - 1) < kMinVisiblePoints) {
    throw Error(ErrorCode::GenerationFailure, "planted view sees fewer than 20 points");
  }
}

std::string synthetic_image_id(size_t camera) {
  char name[32];
  std::snprintf(name, sizeof(name), "view_%04zu.png", camera);
  return name;
}

std::vector<RenderedImage> render_features(const SyntheticScene& scene, const RenderOptions& options) {
  const auto dim = static_cast<uint32_t>(scene.point_descriptors.cols());
  std::vector<RenderedImage> out(scene.cameras.size());
  for (size_t c = 0; c < scene.cameras.size(); ++c) {
    const SyntheticCamera& cam = scene.cameras[c];
    CounterRng noise_rng(scene.seed, kKeypointNoiseStream + c);
    CounterRng desc_rng(scene.seed, kDescriptorNoiseStream + c);
    CounterRng clutter_rng(scene.seed, kClutterStream + c);

    std::vector<int32_t> ids;
    for (size_t p = 0; p < scene.points.size(); ++p) {
      if (scene.visibility[c][p]) ids.push_back(static_cast<int32_t>(p));
    }
    const size_t n_real = ids.size();
    ids.resize(n_real + cam.clutter, -1);

    RenderedImage& img = out[c];
    ImageFeatures& f = img.features;
    f.image_id = synthetic_image_id(c);
    f.width = cam.width;
    f.height = cam.height;
    if (options.with_intrinsics) f.intrinsics = cam.K;
    f.keypoints.resize(static_cast<Eigen::Index>(ids.size()), 2);
    f.descriptors.resize(static_cast<Eigen::Index>(ids.size()), dim);
    const float max_x = std::nextafter(static_cast<float>(cam.width), 0.0f);
    const float max_y = std::nextafter(static_cast<float>(cam.height), 0.0f);

    Eigen::VectorXd global = Eigen::VectorXd::Zero(dim);
    for (size_t k = 0; k < ids.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      Eigen::Vector2d x;
      Eigen::VectorXd desc;
      if (ids[k] >= 0) {
        const auto p = static_cast<size_t>(ids[k]);
        x = *cam.project(scene.points[p]);
        if (scene.noise_px > 0) {
          x += scene.noise_px * Eigen::Vector2d(noise_rng.normal(), noise_rng.normal());
        }
        desc = scene.point_descriptors.row(static_cast<Eigen::Index>(p)).cast<double>().transpose();
        global += desc;
        if (options.descriptor_noise > 0) {
          for (uint32_t d = 0; d < dim; ++d) desc[d] += options.descriptor_noise * desc_rng.normal();
          desc.normalize();
        }
      } else {
        x = {clutter_rng.uniform() * cam.width, clutter_rng.uniform() * cam.height};
        desc = random_unit(clutter_rng, dim);
      }
      f.keypoints(row, 0) = std::clamp(static_cast<float>(x.x()), 0.0f, max_x);
      f.keypoints(row, 1) = std::clamp(static_cast<float>(x.y()), 0.0f, max_y);
      f.descriptors.row(row) = desc.cast<float>().transpose();
    }
    if (global.norm() > 0) global.normalize();
    f.global_desc = global.cast<float>();
    img.point_ids = std::move(ids);
  }
  return out;
}

std::vector<ImageFeatures> features_of(const std::vector<RenderedImage>& rendered) {
  std::vector<ImageFeatures> out;
  out.reserve(rendered.size());
  for (const RenderedImage& r : rendered) out.push_back(r.features);
  return out;
}

PairTruth oracle_pair_truth(const SyntheticScene& scene, size_t i, size_t j) {
  if (i >= scene.cameras.size() || j >= scene.cameras.size()) {
    throw Error(ErrorCode::InvalidArgument, "camera index out of range");
  }
  const SyntheticCamera& ci = scene.cameras[i];
  const SyntheticCamera& cj = scene.cameras[j];
  PairTruth truth;
  std::vector<double> angles;
  for (size_t p = 0; p < scene.points.size(); ++p) {
    if (!scene.visibility[i][p] || !scene.visibility[j][p]) continue;
    ++truth.covisible;
    angles.push_back(direction_error(ci.center - scene.points[p], cj.center - scene.points[p]));
  }
  const double denom = std::sqrt(static_cast<double>(scene.num_visible(i)) *
                                 static_cast<double>(scene.num_visible(j)));
  truth.overlap_fraction = denom > 0 ? truth.covisible / denom : 0.0;
  truth.median_parallax = lower_median(std::move(angles));
  truth.pose.R = cj.R * ci.R.transpose();
  const Eigen::Vector3d t = cj.R * (ci.center - cj.center);
  truth.pose.t = t.norm() > 0 ? Eigen::Vector3d(t.normalized()) : Eigen::Vector3d::Zero();
  return truth;
}

double oracle_mst(const std::map<ImagePair, double>& weights, uint32_t n) {
  if (n > kOracleMstMaxNodes) {
    throw Error(ErrorCode::TooLarge, "exhaustive spanning-tree enumeration is limited to " +
                                         std::to_string(kOracleMstMaxNodes) + " nodes");
  }
  std::vector<std::pair<ImagePair, double>> edges(weights.begin(), weights.end());
  for (const auto& [pair, w] : edges) {
    if (pair.j >= n) throw Error(ErrorCode::InvalidArgument, "edge outside the graph");
  }

  auto find = [](std::vector<uint32_t>& parent, uint32_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  std::vector<uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  uint32_t components = n;
  for (const auto& [pair, w] : edges) {
    const uint32_t a = find(parent, pair.i);
    const uint32_t b = find(parent, pair.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  const size_t size = n - components;
  if (size == 0) return 0.0;

  // Enumerate every subset of `size` edges in lexicographic index order.
  double best = -std::numeric_limits<double>::infinity();
  std::vector<size_t> pick(size);
  std::iota(pick.begin(), pick.end(), size_t{0});
  const size_t m = edges.size();
  while (true) {
    std::iota(parent.begin(), parent.end(), 0u);
    bool acyclic = true;
    double total = 0.0;
    for (size_t idx : pick) {
      const uint32_t a = find(parent, edges[idx].first.i);
      const uint32_t b = find(parent, edges[idx].first.j);
      if (a == b) {
        acyclic = false;
        break;
      }
      parent[a] = b;
      total += edges[idx].second;
    }
    if (acyclic) best = std::max(best, total);

    size_t k = size;
    while (k > 0 && pick[k - 1] == m - size + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (size_t r = k; r < size; ++r) pick[r] = pick[r - 1] + 1;
  }
  return best;
}

void dump_scene(const SyntheticScene& scene, const std::vector<RenderedImage>& rendered,
                const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  if (!rendered.empty()) {
    manifest.descriptor_dim = rendered.front().features.descriptor_dim();
    manifest.global_dim = rendered.front().features.global_dim();
  }
  nlohmann::json cameras = nlohmann::json::array();
  for (size_t c = 0; c < rendered.size(); ++c) {
    const ImageFeatures& f = rendered[c].features;
    const fs::path file = out_dir / (fs::path(f.image_id).stem().string() + ".sarf");
    write_feature_file(f, file);
    manifest.entries.push_back({f.image_id, file, std::nullopt});

    const SyntheticCamera& cam = scene.cameras[c];
    cameras.push_back({{"image_id", f.image_id},
                       {"R", to_json(cam.R)},
                       {"center", {cam.center.x(), cam.center.y(), cam.center.z()}},
                       {"K", to_json(cam.K)},
                       {"width", cam.width},
                       {"height", cam.height},
                       {"clutter", cam.clutter},
                       {"keypoint_point_ids", rendered[c].point_ids}});
  }
  write_manifest(manifest, out_dir / "manifest.json");

  nlohmann::json points = nlohmann::json::array();
  for (const Eigen::Vector3d& X : scene.points) points.push_back({X.x(), X.y(), X.z()});
  const nlohmann::json truth = {{"seed", scene.seed},
                                {"noise_px", scene.noise_px},
                                {"max_view_angle_deg", scene.max_view_angle * 180.0 / std::numbers::pi},
                                {"cameras", cameras},
                                {"points", points}};
  write_text_file(out_dir / "truth.json", truth.dump(1) + "\n");
}

}  // namespace sara
