#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "sara/feature_io.h"
#include "sara/rng.h"

namespace fixture {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sara_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

// Random valid features: unit descriptors, keypoints inside the image.
inline sara::ImageFeatures random_features(uint64_t seed, const std::string& id, size_t n,
                                           uint32_t d, uint32_t dg, bool intrinsics = true,
                                           bool scores = false) {
  sara::CounterRng rng(seed, 77);
  sara::ImageFeatures f;
  f.image_id = id;
  f.width = 640;
  f.height = 480;
  f.keypoints.resize(static_cast<Eigen::Index>(n), 2);
  f.descriptors.resize(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index r = 0; r < f.keypoints.rows(); ++r) {
    f.keypoints(r, 0) = static_cast<float>(rng.uniform() * 639.0);
    f.keypoints(r, 1) = static_cast<float>(rng.uniform() * 479.0);
    for (uint32_t c = 0; c < d; ++c) f.descriptors(r, c) = static_cast<float>(rng.normal());
    f.descriptors.row(r).normalize();
  }
  f.global_desc.resize(dg);
  for (uint32_t c = 0; c < dg; ++c) f.global_desc[c] = static_cast<float>(rng.normal());
  f.global_desc.normalize();
  if (intrinsics) {
    Eigen::Matrix3d K;
    K << 700, 0, 320, 0, 710, 240, 0, 0, 1;
    f.intrinsics = K;
  }
  if (scores) {
    f.scores = Eigen::VectorXf(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < f.scores->size(); ++r) (*f.scores)[r] = static_cast<float>(rng.uniform());
  }
  return f;
}

}  // namespace fixture
