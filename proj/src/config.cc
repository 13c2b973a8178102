#include "sara/config.h"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "sara/error.h"

namespace sara {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::InvalidConfig, message);
}

int ceil_fraction(double fraction, uint32_t n) {
  return static_cast<int>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

template <typename T>
T get_as(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "' has the wrong type");
  }
}

std::optional<int> get_optional_int(const nlohmann::json& value, const std::string& key) {
  if (value.is_null()) return std::nullopt;
  return get_as<int>(value, key);
}

}  // namespace

void SaraConfig::validate() const {
  require(k >= 1, "k must be >= 1");
  require(b >= 8, "b must be >= 8 (minimal sample of the 8-point solver)");
  require(ransac_iterations >= 1, "ransac_iterations must be >= 1");
  require(std::isfinite(inlier_threshold_px) && inlier_threshold_px > 0,
          "inlier_threshold_px must be > 0");
  require(std::isfinite(alpha) && alpha > 0, "alpha must be > 0");
  require(std::isfinite(beta) && beta > 0, "beta must be > 0");
  require(std::isfinite(tau_o) && tau_o >= 0, "tau_o must be >= 0");
  require(std::isfinite(tau_p) && tau_p >= 0, "tau_p must be >= 0");
  require(std::isfinite(parallax_cap) && parallax_cap > 0, "parallax_cap must be > 0");
  require(!budget_loop || *budget_loop >= 0, "budget_loop must be >= 0");
  require(!budget_anchor || *budget_anchor >= 0, "budget_anchor must be >= 0");
  require(budget_weak >= 0, "budget_weak must be >= 0");
  require(!budget_weak_total || *budget_weak_total >= 0, "budget_weak_total must be >= 0");
  require(weak_degree_threshold >= 0, "weak_degree_threshold must be >= 0");
  require(weak_kappa_percentile >= 0 && weak_kappa_percentile <= 100,
          "weak_kappa_percentile must be in [0, 100]");
  require(!loop_bins.empty(), "loop_bins must not be empty");
  for (size_t i = 0; i < loop_bins.size(); ++i) {
    const LoopBin& bin = loop_bins[i];
    require(bin.min >= 2, "loop bins start at path length >= 2");
    require(!bin.max || *bin.max >= bin.min, "loop bin max must be >= min");
    if (i + 1 < loop_bins.size()) {
      require(bin.max.has_value() && *bin.max < loop_bins[i + 1].min,
              "loop bins must be disjoint and ascending");
    }
  }
}

ResolvedBudgets resolve_budgets(const SaraConfig& config, uint32_t n_images) {
  ResolvedBudgets budgets;
  budgets.loop = config.disable_msl ? 0 : config.budget_loop.value_or(ceil_fraction(0.2, n_images));
  budgets.anchor =
      config.disable_lba ? 0 : config.budget_anchor.value_or(ceil_fraction(0.05, n_images));
  budgets.weak_per_view = config.disable_wvr ? 0 : config.budget_weak;
  budgets.weak_total =
      config.disable_wvr ? 0 : config.budget_weak_total.value_or(ceil_fraction(0.1, n_images));
  return budgets;
}

void apply_config_json(const nlohmann::json& json, SaraConfig& config) {
  if (!json.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : json.items()) {
    if (key == "k") {
      config.k = get_as<int>(value, key);
    } else if (key == "b") {
      config.b = get_as<int>(value, key);
    } else if (key == "ransac_iterations") {
      config.ransac_iterations = get_as<int>(value, key);
    } else if (key == "inlier_threshold_px") {
      config.inlier_threshold_px = get_as<double>(value, key);
    } else if (key == "alpha") {
      config.alpha = get_as<double>(value, key);
    } else if (key == "beta") {
      config.beta = get_as<double>(value, key);
    } else if (key == "tau_o") {
      config.tau_o = get_as<double>(value, key);
    } else if (key == "tau_p") {
      config.tau_p = deg_to_rad(get_as<double>(value, key));
    } else if (key == "parallax_cap") {
      config.parallax_cap = deg_to_rad(get_as<double>(value, key));
    } else if (key == "budget_loop") {
      config.budget_loop = get_optional_int(value, key);
    } else if (key == "budget_anchor") {
      config.budget_anchor = get_optional_int(value, key);
    } else if (key == "budget_weak") {
      config.budget_weak = get_as<int>(value, key);
    } else if (key == "budget_weak_total") {
      config.budget_weak_total = get_optional_int(value, key);
    } else if (key == "weak_degree_threshold") {
      config.weak_degree_threshold = get_as<int>(value, key);
    } else if (key == "weak_kappa_percentile") {
      config.weak_kappa_percentile = get_as<double>(value, key);
    } else if (key == "loop_bins") {
      if (!value.is_array()) throw Error(ErrorCode::InvalidConfig, "loop_bins must be an array");
      std::vector<LoopBin> bins;
      for (const auto& entry : value) {
        if (!entry.is_array() || entry.size() != 2) {
          throw Error(ErrorCode::InvalidConfig, "each loop bin is a [min, max|null] pair");
        }
        bins.push_back({get_as<int>(entry[0], key), get_optional_int(entry[1], key)});
      }
      config.loop_bins = std::move(bins);
    } else if (key == "disable_msl") {
      config.disable_msl = get_as<bool>(value, key);
    } else if (key == "disable_lba") {
      config.disable_lba = get_as<bool>(value, key);
    } else if (key == "disable_wvr") {
      config.disable_wvr = get_as<bool>(value, key);
    } else if (key == "seed") {
      config.seed = get_as<uint64_t>(value, key);
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
}

SaraConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  SaraConfig config;
  apply_config_json(json, config);
  config.validate();
  return config;
}

nlohmann::json config_to_json(const SaraConfig& config) {
  auto optional_int = [](const std::optional<int>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json bins = nlohmann::json::array();
  for (const LoopBin& bin : config.loop_bins) bins.push_back({bin.min, optional_int(bin.max)});
  return {
      {"k", config.k},
      {"b", config.b},
      {"ransac_iterations", config.ransac_iterations},
      {"inlier_threshold_px", config.inlier_threshold_px},
      {"alpha", config.alpha},
      {"beta", config.beta},
      {"tau_o", config.tau_o},
      {"tau_p", rad_to_deg(config.tau_p)},
      {"parallax_cap", rad_to_deg(config.parallax_cap)},
      {"budget_loop", optional_int(config.budget_loop)},
      {"budget_anchor", optional_int(config.budget_anchor)},
      {"budget_weak", config.budget_weak},
      {"budget_weak_total", optional_int(config.budget_weak_total)},
      {"weak_degree_threshold", config.weak_degree_threshold},
      {"weak_kappa_percentile", config.weak_kappa_percentile},
      {"loop_bins", bins},
      {"disable_msl", config.disable_msl},
      {"disable_lba", config.disable_lba},
      {"disable_wvr", config.disable_wvr},
      {"seed", config.seed},
  };
}

}  // namespace sara
