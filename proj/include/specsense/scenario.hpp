#pragma once

// Scenario configuration and its JSON form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "specsense/clustering_fusion.hpp"
#include "specsense/compressive_acquisition.hpp"
#include "specsense/errors.hpp"
#include "specsense/rng.hpp"
#include "specsense/signal_model.hpp"

namespace specsense {

enum class HeadForwards { DECISIONS, MEASUREMENTS };

/// Ground truth per trial index: ALTERNATE runs H1 on even and H0 on odd
/// indices, giving equal H1 and H0 counts per sweep point.
enum class HypothesisSchedule { ALTERNATE, H1_ONLY, H0_ONLY };

inline std::string_view to_string(HeadForwards h) {
  return h == HeadForwards::MEASUREMENTS ? "measurements" : "decisions";
}

inline std::string_view to_string(HypothesisSchedule h) {
  switch (h) {
    case HypothesisSchedule::ALTERNATE: return "alternate";
    case HypothesisSchedule::H1_ONLY: return "h1";
    case HypothesisSchedule::H0_ONLY: return "h0";
  }
  return "alternate";
}

struct Scenario {
  std::size_t n_samples = 1000;
  std::optional<std::size_t> sparsity;  // default: 5% of n_samples
  double snr_db = 0.0;
  FadingKind fading = FadingKind::RAYLEIGH;

  std::size_t l_total = 10;
  std::optional<std::size_t> n_clusters;        // equal split into J clusters
  std::size_t cluster_size = 2;                 // otherwise J = ceil(L / cluster_size)
  std::optional<ExplicitAssignment> clusters;   // explicit membership wins over both

  MatrixKind matrix_kind = MatrixKind::AIC_PSEUDORANDOM_PM1;
  std::optional<double> compression_ratio;  // default 0.5; exclusive with bypass
  bool bypass_compression = false;
  bool per_su_matrices = false;
  double compression_noise_variance = 0.0;
  std::optional<std::size_t> max_sparsity;  // default: signal sparsity, capped at M

  double discard_delta = 0.0;  // in multiples of the noise variance
  FusionRule fusion_rule = FusionRule::MAJORITY;
  HeadForwards head_forwards = HeadForwards::DECISIONS;

  double target_pfa = 0.1;
  std::optional<double> threshold;  // manual, in noise-variance units
  std::size_t calibration_trials = 2000;

  std::size_t trials = 1000;
  HypothesisSchedule hypotheses = HypothesisSchedule::ALTERNATE;
  Seed base_seed = 1;
  bool measure_timing = false;
  double reference_power = 1.0;  // noise reference when the PU signal is empty

  std::size_t effective_sparsity() const {
    return sparsity.value_or(static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n_samples))));
  }

  double effective_ratio() const { return bypass_compression ? 1.0 : compression_ratio.value_or(0.5); }

  std::size_t measurement_count() const {
    return bypass_compression ? n_samples : measurements_for_ratio(effective_ratio(), n_samples);
  }

  std::size_t effective_max_sparsity() const {
    return std::min(max_sparsity.value_or(effective_sparsity()), measurement_count());
  }

  ClusterSpec cluster_spec() const {
    if (clusters) return *clusters;
    if (n_clusters) return EqualSplit{*n_clusters};
    return EqualSplit{(l_total + cluster_size - 1) / std::max<std::size_t>(cluster_size, 1)};
  }

  ClusterTopology topology() const { return assign_clusters(l_total, cluster_spec()); }

  /// Checks every downstream precondition up front.
  void validate() const {
    detail::require(n_samples >= 1, "scenario: n_samples must be >= 1");
    detail::require(effective_sparsity() <= n_samples, "scenario: sparsity exceeds n_samples");
    detail::require(std::isfinite(snr_db), "scenario: snr_db must be finite");
    detail::require(l_total >= 1, "scenario: l_total must be >= 1");
    detail::require(cluster_size >= 1, "scenario: cluster_size must be >= 1");
    detail::require(!(bypass_compression && compression_ratio),
                    "scenario: bypass_compression and compression_ratio are mutually exclusive");
    if (compression_ratio)
      detail::require(*compression_ratio > 0.0 && *compression_ratio <= 1.0,
                      "scenario: compression_ratio must lie in (0, 1]");
    detail::require(std::isfinite(compression_noise_variance) && compression_noise_variance >= 0.0,
                    "scenario: compression_noise_variance must be >= 0");
    detail::require(std::isfinite(discard_delta) && discard_delta >= 0.0, "scenario: discard_delta must be >= 0");
    detail::require(target_pfa > 0.0 && target_pfa < 1.0, "scenario: target_pfa must lie in (0, 1)");
    if (threshold) detail::require(std::isfinite(*threshold) && *threshold >= 0.0, "scenario: threshold must be >= 0");
    if (!threshold) detail::require(calibration_trials >= 100, "scenario: calibration_trials must be >= 100");
    detail::require(trials >= 1, "scenario: trials must be >= 1");
    detail::require(std::isfinite(reference_power) && reference_power > 0.0, "scenario: reference_power must be > 0");
    if (max_sparsity) detail::require(*max_sparsity >= 1, "scenario: max_sparsity must be >= 1");
    (void)topology();
  }
};

inline nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["n_samples"] = s.n_samples;
  j["sparsity"] = s.effective_sparsity();
  j["snr_db"] = s.snr_db;
  j["fading"] = std::string(to_string(s.fading));
  j["l_total"] = s.l_total;
  if (s.clusters) j["clusters"] = *s.clusters;
  else if (s.n_clusters) j["n_clusters"] = *s.n_clusters;
  else j["cluster_size"] = s.cluster_size;
  j["matrix_kind"] = std::string(to_string(s.matrix_kind));
  if (s.bypass_compression) j["bypass_compression"] = true;
  else j["compression_ratio"] = s.effective_ratio();
  j["per_su_matrices"] = s.per_su_matrices;
  j["compression_noise_variance"] = s.compression_noise_variance;
  j["max_sparsity"] = s.effective_max_sparsity();
  j["discard_delta"] = s.discard_delta;
  j["fusion_rule"] = std::string(to_string(s.fusion_rule));
  j["head_forwards"] = std::string(to_string(s.head_forwards));
  j["target_pfa"] = s.target_pfa;
  if (s.threshold) j["threshold"] = *s.threshold;
  j["calibration_trials"] = s.calibration_trials;
  j["trials"] = s.trials;
  j["hypotheses"] = std::string(to_string(s.hypotheses));
  j["base_seed"] = s.base_seed;
  j["measure_timing"] = s.measure_timing;
  j["reference_power"] = s.reference_power;
  return j;
}

namespace detail {

template <typename T>
T json_get(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("scenario key '") + key + "': " + e.what());
  }
}

inline HypothesisSchedule parse_schedule(std::string_view s) {
  if (s == "alternate") return HypothesisSchedule::ALTERNATE;
  if (s == "h1") return HypothesisSchedule::H1_ONLY;
  if (s == "h0") return HypothesisSchedule::H0_ONLY;
  throw InvalidArgument("unknown hypotheses schedule: " + std::string(s));
}

inline HeadForwards parse_head_forwards(std::string_view s) {
  if (s == "decisions") return HeadForwards::DECISIONS;
  if (s == "measurements") return HeadForwards::MEASUREMENTS;
  throw InvalidArgument("unknown head_forwards mode: " + std::string(s));
}

}  // namespace detail

/// Reads scenario fields from a JSON object. Unknown keys are rejected; the
/// optional "sweep" object is left to the caller.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  detail::require(j.is_object(), "scenario: configuration must be a JSON object");
  static const std::set<std::string> known = {
      "n_samples", "sparsity", "snr_db", "fading", "l_total", "n_clusters", "cluster_size", "clusters",
      "matrix_kind", "compression_ratio", "bypass_compression", "per_su_matrices", "compression_noise_variance",
      "max_sparsity", "discard_delta", "fusion_rule", "head_forwards", "target_pfa", "threshold",
      "calibration_trials", "trials", "hypotheses", "base_seed", "measure_timing", "reference_power", "sweep"};
  for (const auto& [key, value] : j.items())
    detail::require(known.count(key) == 1, "scenario: unknown key '" + key + "'");

  using detail::json_get;
  Scenario s;
  if (j.contains("n_samples")) s.n_samples = json_get<std::size_t>(j, "n_samples");
  if (j.contains("sparsity")) s.sparsity = json_get<std::size_t>(j, "sparsity");
  if (j.contains("snr_db")) s.snr_db = json_get<double>(j, "snr_db");
  if (j.contains("fading")) s.fading = parse_fading_kind(json_get<std::string>(j, "fading"));
  if (j.contains("l_total")) s.l_total = json_get<std::size_t>(j, "l_total");
  if (j.contains("n_clusters")) s.n_clusters = json_get<std::size_t>(j, "n_clusters");
  if (j.contains("cluster_size")) s.cluster_size = json_get<std::size_t>(j, "cluster_size");
  if (j.contains("clusters")) s.clusters = json_get<ExplicitAssignment>(j, "clusters");
  if (j.contains("matrix_kind")) s.matrix_kind = parse_matrix_kind(json_get<std::string>(j, "matrix_kind"));
  if (j.contains("compression_ratio")) s.compression_ratio = json_get<double>(j, "compression_ratio");
  if (j.contains("bypass_compression")) s.bypass_compression = json_get<bool>(j, "bypass_compression");
  if (j.contains("per_su_matrices")) s.per_su_matrices = json_get<bool>(j, "per_su_matrices");
  if (j.contains("compression_noise_variance"))
    s.compression_noise_variance = json_get<double>(j, "compression_noise_variance");
  if (j.contains("max_sparsity")) s.max_sparsity = json_get<std::size_t>(j, "max_sparsity");
  if (j.contains("discard_delta")) s.discard_delta = json_get<double>(j, "discard_delta");
  if (j.contains("fusion_rule")) s.fusion_rule = parse_fusion_rule(json_get<std::string>(j, "fusion_rule"));
  if (j.contains("head_forwards"))
    s.head_forwards = detail::parse_head_forwards(json_get<std::string>(j, "head_forwards"));
  if (j.contains("target_pfa")) s.target_pfa = json_get<double>(j, "target_pfa");
  if (j.contains("threshold")) s.threshold = json_get<double>(j, "threshold");
  if (j.contains("calibration_trials")) s.calibration_trials = json_get<std::size_t>(j, "calibration_trials");
  if (j.contains("trials")) s.trials = json_get<std::size_t>(j, "trials");
  if (j.contains("hypotheses")) s.hypotheses = detail::parse_schedule(json_get<std::string>(j, "hypotheses"));
  if (j.contains("base_seed")) s.base_seed = json_get<Seed>(j, "base_seed");
  if (j.contains("measure_timing")) s.measure_timing = json_get<bool>(j, "measure_timing");
  if (j.contains("reference_power")) s.reference_power = json_get<double>(j, "reference_power");
  s.validate();
  return s;
}

/// Applies a flat `key=value` override. The value is parsed as JSON when it
/// is valid JSON and taken as a plain string otherwise.
inline void apply_override(nlohmann::json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  detail::require(eq != std::string_view::npos && eq > 0,
                  "override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // Ratio and bypass are exclusive; setting one clears the other.
  if (key == "compression_ratio") config.erase("bypass_compression");
  if (key == "bypass_compression" && value == true) config.erase("compression_ratio");
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  } else {
    config[key] = value;
  }
}

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open configuration file");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw IoError(path, "configuration is not valid JSON");
  return j;
}

}  // namespace specsense
