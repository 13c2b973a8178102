#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "sara/config.h"
#include "sara/epipolar.h"
#include "sara/error.h"
#include "sara/feature_io.h"
#include "sara/pipeline.h"
#include "sara/viewgraph.h"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

sara::SaraConfig config_from(const std::string& json_text) {
  sara::SaraConfig config;
  if (!json_text.empty()) sara::apply_config_json(nlohmann::json::parse(json_text), config);
  config.validate();
  return config;
}

py::dict features_to_dict(const sara::ImageFeatures& f) {
  py::dict d;
  d["image_id"] = f.image_id;
  d["keypoints"] = f.keypoints;
  d["descriptors"] = f.descriptors;
  d["global_desc"] = f.global_desc;
  d["scores"] = f.scores;
  d["intrinsics"] = f.intrinsics;
  d["width"] = f.width;
  d["height"] = f.height;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pair selection for structure from motion";

  // Kept alive for the lifetime of the interpreter.
  static PyObject* sara_error = PyErr_NewException("sara._core.SaraError", PyExc_RuntimeError, nullptr);
  m.attr("SaraError") = py::handle(sara_error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sara::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(sara_error)(e.what());
      exc.attr("code") = sara::to_string(e.code());
      PyErr_SetObject(sara_error, exc.ptr());
    }
  });

  m.def("default_config_json", [] { return sara::config_to_json(sara::SaraConfig{}).dump(); });

  m.def(
      "select",
      [](const fs::path& manifest, const fs::path& out_pairs, const fs::path& out_report,
         const std::string& config_json, int threads) {
        sara::SelectRequest req;
        req.manifest = manifest;
        req.out_pairs = out_pairs;
        req.out_report = out_report;
        req.config = config_from(config_json);
        req.threads = threads;
        sara::RunReport report;
        {
          py::gil_scoped_release release;
          report = sara::run_select(req);
        }
        return report.to_json(true).dump();
      },
      py::arg("manifest"), py::arg("out_pairs"), py::arg("out_report"), py::arg("config_json") = "",
      py::arg("threads") = 0);

  m.def(
      "ablate",
      [](const fs::path& manifest, const fs::path& out_dir, const std::string& config_json, int threads) {
        const sara::SaraConfig config = config_from(config_json);
        std::vector<sara::RunReport> reports;
        {
          py::gil_scoped_release release;
          reports = sara::run_ablation(manifest, config, out_dir, threads);
        }
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : reports) out.push_back(r.to_json(false));
        return out.dump();
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("config_json") = "", py::arg("threads") = 0);

  m.def(
      "synth",
      [](const fs::path& out_dir, uint32_t n_cameras, uint32_t n_points, double radius, double noise_px,
         uint64_t seed, bool plant_weak_view, bool with_intrinsics) {
        sara::SynthRequest req;
        req.orbit.n_cameras = n_cameras;
        req.orbit.n_points = n_points;
        req.orbit.radius = radius;
        req.orbit.noise_px = noise_px;
        req.orbit.seed = seed;
        if (plant_weak_view) req.planted = sara::PlantedViewOptions{};
        req.render.with_intrinsics = with_intrinsics;
        sara::run_synth(req, out_dir);
      },
      py::arg("out_dir"), py::arg("n_cameras") = 20, py::arg("n_points") = 400, py::arg("radius") = 5.0,
      py::arg("noise_px") = 0.0, py::arg("seed") = 0, py::arg("plant_weak_view") = false,
      py::arg("with_intrinsics") = true);

  m.def(
      "read_features", [](const fs::path& path) { return features_to_dict(sara::read_feature_file(path)); },
      py::arg("path"));

  m.def(
      "max_spanning_tree",
      [](const std::vector<std::tuple<uint32_t, uint32_t, double>>& edges, uint32_t n) {
        std::map<sara::ImagePair, double> weights;
        for (const auto& [a, b, w] : edges) weights[sara::ImagePair(a, b)] = w;
        std::vector<std::pair<uint32_t, uint32_t>> out;
        for (const sara::ImagePair& p : sara::max_spanning_tree(weights, n)) out.emplace_back(p.i, p.j);
        return out;
      },
      py::arg("edges"), py::arg("n"));

  m.def(
      "relative_pose",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 2>& x_a, const Eigen::Matrix<double, Eigen::Dynamic, 2>& x_b,
         const Eigen::Matrix3d& K_a, const Eigen::Matrix3d& K_b) {
        if (x_a.rows() != x_b.rows()) {
          throw sara::Error(sara::ErrorCode::DimensionMismatch, "point arrays differ in length");
        }
        std::vector<sara::Correspondence> corrs(static_cast<size_t>(x_a.rows()));
        for (Eigen::Index r = 0; r < x_a.rows(); ++r) {
          corrs[static_cast<size_t>(r)].x_a = x_a.row(r).transpose();
          corrs[static_cast<size_t>(r)].x_b = x_b.row(r).transpose();
        }
        const sara::Calibration calib{K_a, K_b};
        const sara::RelativePose pose = sara::recover_pose(sara::estimate_essential(corrs, calib), corrs, calib);
        return std::make_pair(pose.R, pose.t);
      },
      py::arg("x_a"), py::arg("x_b"), py::arg("K_a"), py::arg("K_b"),
      "Rotation and unit translation with x_b = R x_a + t, from all correspondences.");

  m.def(
      "format_pair_list",
      [](const std::vector<std::pair<std::string, std::string>>& edges) { return sara::format_pair_list(edges); },
      py::arg("edges"));
}
