#pragma once

// Per-image feature files, dataset manifests and pair lists.
//
// Feature file layout (little-endian):
//   char[4] magic "SARF" | u32 version (1) | u32 N | u32 d | u32 d_g
//   u32 width | u32 height | u8 has_intrinsics | u8 has_scores
//   [f64 x 9  K, row-major]            if has_intrinsics
//   f32 x 2N  keypoints (x, y)
//   [f32 x N  scores]                  if has_scores
//   f32 x N*d local descriptors, row-major
//   f32 x d_g global descriptor

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sara {

using Keypoints = Eigen::Matrix<float, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Descriptors = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ImageFeatures {
  std::string image_id;
  Keypoints keypoints;
  Descriptors descriptors;  // one unit-norm row per keypoint
  std::optional<Eigen::VectorXf> scores;
  Eigen::VectorXf global_desc;
  std::optional<Eigen::Matrix3d> intrinsics;
  uint32_t width = 0;
  uint32_t height = 0;

  size_t num_keypoints() const { return static_cast<size_t>(keypoints.rows()); }
  uint32_t descriptor_dim() const { return static_cast<uint32_t>(descriptors.cols()); }
  uint32_t global_dim() const { return static_cast<uint32_t>(global_desc.size()); }
};

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path feature_file;  // absolute after load_manifest
  std::optional<Eigen::Matrix3d> intrinsics;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;  // order defines node indices
  uint32_t descriptor_dim = 0;
  uint32_t global_dim = 0;

  size_t size() const { return entries.size(); }
  std::optional<size_t> index_of(std::string_view image_id) const;
};

struct FeatureFileHeader {
  uint32_t version = 1;
  uint32_t num_keypoints = 0;
  uint32_t descriptor_dim = 0;
  uint32_t global_dim = 0;
  uint32_t width = 0;
  uint32_t height = 0;
  bool has_intrinsics = false;
  bool has_scores = false;
};

inline constexpr uint32_t kFeatureFileVersion = 1;
// Descriptors whose norm deviates from 1 by more than this are rejected.
inline constexpr double kNormRejectTolerance = 1e-3;
// Deviations above this (and within the reject tolerance) are re-normalized.
inline constexpr double kNormTolerance = 1e-4;

// Parses and validates the manifest, reading every feature-file header to
// check that it exists and matches the declared dimensions.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

ImageFeatures load_features(const DatasetManifest& manifest, std::string_view image_id);
// Loads every manifest entry in manifest order, in parallel when threads > 1.
std::vector<ImageFeatures> load_all_features(const DatasetManifest& manifest, int threads = 1);

FeatureFileHeader read_feature_header(const std::filesystem::path& path);
// Raw parse without invariant checks (see validate_features).
ImageFeatures read_feature_file(const std::filesystem::path& path, std::string image_id = {});
void write_feature_file(const ImageFeatures& features, const std::filesystem::path& path);

// Enforces the ImageFeatures invariants, re-normalizing near-unit descriptors
// in place.
void validate_features(ImageFeatures& features);

// Writes "a b" per line with a < b lexicographically, lines sorted and
// de-duplicated, each line newline-terminated.
std::string format_pair_list(std::span<const std::pair<std::string, std::string>> edges);
void write_pair_list(std::span<const std::pair<std::string, std::string>> edges,
                     const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace sara
