#include "sara/feature_io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "parallel.h"
#include "sara/error.h"

namespace sara {
namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'A', 'R', 'F'};
constexpr size_t kHeaderBytes = 4 + 6 * 4 + 2;

class ByteWriter {
 public:
  void u8(uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<char>((v >> s) & 0xffu));
  }
  void u64(uint64_t v) {
    for (int s = 0; s < 64; s += 8) bytes_.push_back(static_cast<char>((v >> s) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void raw(const char* data, size_t n) { bytes_.append(data, n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint32_t u32() {
    const char* p = take(4);
    uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<uint8_t>(p[b]);
    return v;
  }
  uint64_t u64() {
    const char* p = take(8);
    uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | static_cast<uint8_t>(p[b]);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  const char* take(size_t n) {
    if (bytes_.size() - offset_ < n) {
      throw Error(ErrorCode::CorruptFile, path_.string() + ": truncated feature file");
    }
    const char* p = bytes_.data() + offset_;
    offset_ += n;
    return p;
  }
  size_t remaining() const { return bytes_.size() - offset_; }

 private:
  const std::string& bytes_;
  const fs::path& path_;
  size_t offset_ = 0;
};

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

FeatureFileHeader parse_header(ByteReader& reader, const fs::path& path) {
  const char* magic = reader.take(4);
  if (std::memcmp(magic, kMagic.data(), 4) != 0) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad magic, expected SARF");
  }
  FeatureFileHeader header;
  header.version = reader.u32();
  if (header.version != kFeatureFileVersion) {
    throw Error(ErrorCode::CorruptFile,
                path.string() + ": unsupported version " + std::to_string(header.version));
  }
  header.num_keypoints = reader.u32();
  header.descriptor_dim = reader.u32();
  header.global_dim = reader.u32();
  header.width = reader.u32();
  header.height = reader.u32();
  const uint8_t has_k = reader.u8();
  const uint8_t has_scores = reader.u8();
  if (has_k > 1 || has_scores > 1) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": invalid flag byte");
  }
  header.has_intrinsics = has_k == 1;
  header.has_scores = has_scores == 1;
  return header;
}

std::optional<Eigen::Matrix3d> intrinsics_from_json(const nlohmann::json& value,
                                                    const std::string& context) {
  if (value.is_null()) return std::nullopt;
  std::vector<double> flat;
  if (value.is_array() && value.size() == 3 && value[0].is_array()) {
    for (const auto& row : value) {
      for (const auto& x : row) flat.push_back(x.get<double>());
    }
  } else if (value.is_array()) {
    for (const auto& x : value) flat.push_back(x.get<double>());
  }
  if (flat.size() != 9) {
    throw Error(ErrorCode::CorruptFile, context + ": intrinsics must have 9 entries");
  }
  Eigen::Matrix3d K;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) K(r, c) = flat[3 * r + c];
  }
  return K;
}

void check_intrinsics(const Eigen::Matrix3d& K, const std::string& context) {
  if (!K.allFinite() || !(K(0, 0) > 0) || !(K(1, 1) > 0)) {
    throw Error(ErrorCode::CorruptFile, context + ": intrinsics need finite positive focal lengths");
  }
}

// Returns false when the row cannot be brought to unit norm.
template <typename Row>
bool normalize_near_unit(Row&& row) {
  const double norm = std::sqrt(row.template cast<double>().squaredNorm());
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormRejectTolerance) return false;
  if (std::abs(norm - 1.0) > kNormTolerance) {
    row = (row.template cast<double>() / norm).template cast<float>();
  }
  return true;
}

}  // namespace

std::optional<size_t> DatasetManifest::index_of(std::string_view image_id) const {
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].image_id == image_id) return i;
  }
  return std::nullopt;
}

FeatureFileHeader read_feature_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open feature file " + path.string());
  std::string bytes(kHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<size_t>(in.gcount()));
  ByteReader reader(bytes, path);
  return parse_header(reader, path);
}

ImageFeatures read_feature_file(const fs::path& path, std::string image_id) {
  const std::string bytes = read_file_bytes(path);
  ByteReader reader(bytes, path);
  const FeatureFileHeader header = parse_header(reader, path);

  const uint64_t n = header.num_keypoints;
  const uint64_t expected = (header.has_intrinsics ? 72 : 0) + n * 8 + (header.has_scores ? n * 4 : 0) +
                            n * header.descriptor_dim * 4 + uint64_t{header.global_dim} * 4;
  if (reader.remaining() != expected) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": payload size " +
                                            std::to_string(reader.remaining()) + " != expected " +
                                            std::to_string(expected));
  }

  ImageFeatures f;
  f.image_id = image_id.empty() ? path.filename().string() : std::move(image_id);
  f.width = header.width;
  f.height = header.height;
  if (header.has_intrinsics) {
    Eigen::Matrix3d K;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) K(r, c) = reader.f64();
    }
    f.intrinsics = K;
  }
  f.keypoints.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < f.keypoints.rows(); ++i) {
    f.keypoints(i, 0) = reader.f32();
    f.keypoints(i, 1) = reader.f32();
  }
  if (header.has_scores) {
    Eigen::VectorXf scores(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = reader.f32();
    f.scores = std::move(scores);
  }
  f.descriptors.resize(static_cast<Eigen::Index>(n), header.descriptor_dim);
  for (Eigen::Index i = 0; i < f.descriptors.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.descriptors.cols(); ++j) f.descriptors(i, j) = reader.f32();
  }
  f.global_desc.resize(header.global_dim);
  for (Eigen::Index i = 0; i < f.global_desc.size(); ++i) f.global_desc[i] = reader.f32();
  return f;
}

void write_feature_file(const ImageFeatures& f, const fs::path& path) {
  const auto n = static_cast<Eigen::Index>(f.num_keypoints());
  if (f.descriptors.rows() != n || (f.scores && f.scores->size() != n)) {
    throw Error(ErrorCode::DimensionMismatch,
                f.image_id + ": keypoint, descriptor and score counts differ");
  }
  ByteWriter w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kFeatureFileVersion);
  w.u32(static_cast<uint32_t>(n));
  w.u32(f.descriptor_dim());
  w.u32(f.global_dim());
  w.u32(f.width);
  w.u32(f.height);
  w.u8(f.intrinsics ? 1 : 0);
  w.u8(f.scores ? 1 : 0);
  if (f.intrinsics) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) w.f64((*f.intrinsics)(r, c));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    w.f32(f.keypoints(i, 0));
    w.f32(f.keypoints(i, 1));
  }
  if (f.scores) {
    for (Eigen::Index i = 0; i < n; ++i) w.f32((*f.scores)[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < f.descriptors.cols(); ++j) w.f32(f.descriptors(i, j));
  }
  for (Eigen::Index i = 0; i < f.global_desc.size(); ++i) w.f32(f.global_desc[i]);
  write_text_file(path, w.bytes());
}

void validate_features(ImageFeatures& f) {
  const std::string& id = f.image_id;
  const auto n = static_cast<Eigen::Index>(f.num_keypoints());
  if (f.descriptors.rows() != n || (f.scores && f.scores->size() != n)) {
    throw Error(ErrorCode::CorruptFile, id + ": keypoint, descriptor and score counts differ");
  }
  if (f.width == 0 || f.height == 0) {
    throw Error(ErrorCode::CorruptFile, id + ": image size must be positive");
  }
  if (f.intrinsics) check_intrinsics(*f.intrinsics, id);
  for (Eigen::Index i = 0; i < n; ++i) {
    const float x = f.keypoints(i, 0);
    const float y = f.keypoints(i, 1);
    if (!(x >= 0.0f && x < static_cast<float>(f.width) && y >= 0.0f &&
          y < static_cast<float>(f.height))) {
      throw Error(ErrorCode::OutOfBoundsKeypoint, id + ": keypoint " + std::to_string(i) + " at (" +
                                                      std::to_string(x) + ", " + std::to_string(y) +
                                                      ") lies outside the image");
    }
  }
  if (f.scores) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const float s = (*f.scores)[i];
      if (!(s >= 0.0f && s <= 1.0f)) {
        throw Error(ErrorCode::CorruptFile, id + ": detection score outside [0, 1]");
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!normalize_near_unit(f.descriptors.row(i))) {
      throw Error(ErrorCode::NormalizationFailure,
                  id + ": descriptor " + std::to_string(i) + " is not unit norm");
    }
  }
  if (!normalize_near_unit(f.global_desc.transpose())) {
    throw Error(ErrorCode::NormalizationFailure, id + ": global descriptor is not unit norm");
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }

  DatasetManifest manifest;
  const fs::path base = fs::absolute(path).parent_path();
  try {
    manifest.descriptor_dim = json.at("descriptor_dim").get<uint32_t>();
    manifest.global_dim = json.at("global_dim").get<uint32_t>();
    std::unordered_set<std::string> seen;
    for (const auto& item : json.at("images")) {
      ManifestEntry entry;
      entry.image_id = item.at("image_id").get<std::string>();
      if (!seen.insert(entry.image_id).second) {
        throw Error(ErrorCode::DuplicateImageId, path.string() + ": duplicate image_id '" +
                                                     entry.image_id + "'");
      }
      fs::path file = item.at("features").get<std::string>();
      entry.feature_file = file.is_absolute() ? file : base / file;
      if (item.contains("intrinsics")) {
        entry.intrinsics = intrinsics_from_json(item["intrinsics"], entry.image_id);
        if (entry.intrinsics) check_intrinsics(*entry.intrinsics, entry.image_id);
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }

  for (const ManifestEntry& entry : manifest.entries) {
    if (!fs::exists(entry.feature_file)) {
      throw Error(ErrorCode::MissingFile, "feature file for '" + entry.image_id +
                                              "' not found: " + entry.feature_file.string());
    }
    const FeatureFileHeader header = read_feature_header(entry.feature_file);
    if (header.descriptor_dim != manifest.descriptor_dim ||
        header.global_dim != manifest.global_dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  entry.feature_file.string() + ": dims (" + std::to_string(header.descriptor_dim) +
                      ", " + std::to_string(header.global_dim) + ") but manifest declares (" +
                      std::to_string(manifest.descriptor_dim) + ", " +
                      std::to_string(manifest.global_dim) + ")");
    }
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  nlohmann::json images = nlohmann::json::array();
  const fs::path base = fs::absolute(path).parent_path();
  for (const ManifestEntry& entry : manifest.entries) {
    nlohmann::json item = {{"image_id", entry.image_id},
                           {"features", fs::absolute(entry.feature_file).lexically_proximate(base).generic_string()}};
    if (entry.intrinsics) {
      nlohmann::json k = nlohmann::json::array();
      for (int r = 0; r < 3; ++r) {
        k.push_back({(*entry.intrinsics)(r, 0), (*entry.intrinsics)(r, 1), (*entry.intrinsics)(r, 2)});
      }
      item["intrinsics"] = k;
    }
    images.push_back(std::move(item));
  }
  const nlohmann::json json = {{"descriptor_dim", manifest.descriptor_dim},
                               {"global_dim", manifest.global_dim},
                               {"images", images}};
  write_text_file(path, json.dump(2) + "\n");
}

ImageFeatures load_features(const DatasetManifest& manifest, std::string_view image_id) {
  const auto index = manifest.index_of(image_id);
  if (!index) {
    throw Error(ErrorCode::UnknownImage, "image '" + std::string(image_id) + "' not in manifest");
  }
  const ManifestEntry& entry = manifest.entries[*index];
  ImageFeatures f = read_feature_file(entry.feature_file, entry.image_id);
  if (f.descriptor_dim() != manifest.descriptor_dim || f.global_dim() != manifest.global_dim) {
    throw Error(ErrorCode::DimensionMismatch, entry.feature_file.string() +
                                                  ": dimensions differ from the manifest");
  }
  if (entry.intrinsics) f.intrinsics = entry.intrinsics;
  validate_features(f);
  return f;
}

std::vector<ImageFeatures> load_all_features(const DatasetManifest& manifest, int threads) {
  std::vector<ImageFeatures> all(manifest.size());
  internal::parallel_for(manifest.size(), threads, [&](size_t i) {
    all[i] = load_features(manifest, manifest.entries[i].image_id);
  });
  return all;
}

std::string format_pair_list(std::span<const std::pair<std::string, std::string>> edges) {
  std::set<std::pair<std::string, std::string>> lines;
  for (const auto& [a, b] : edges) {
    if (a < b) {
      lines.emplace(a, b);
    } else {
      lines.emplace(b, a);
    }
  }
  std::string out;
  for (const auto& [a, b] : lines) {
    out += a;
    out += ' ';
    out += b;
    out += '\n';
  }
  return out;
}

void write_pair_list(std::span<const std::pair<std::string, std::string>> edges,
                     const fs::path& path) {
  write_text_file(path, format_pair_list(edges));
}

void write_text_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace sara
