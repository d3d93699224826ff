#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "topoloop/clustering.hpp"
#include "topoloop/evaluation.hpp"
#include "topoloop/loopdetect.hpp"
#include "topoloop/posegraph.hpp"
#include "topoloop/simulator.hpp"
#include "topoloop/topology.hpp"

namespace topoloop {

inline constexpr int kConfigVersion = 1;

struct RouteStep {
  std::size_t place = 0;
  std::optional<double> heading_deg;
  friend bool operator==(const RouteStep&, const RouteStep&) = default;
};

struct ScenarioConfig {
  std::vector<std::pair<double, double>> places;
  std::vector<RouteStep> route;
  std::size_t steps_per_leg = 5;
  std::size_t dimension = 64;
  double alpha = 1.0;
  double beta = 0.0;
  double sigma_d = 0.0;
  std::size_t n_view = 8;
  double sigma_t = 0.0;
  double sigma_r = 0.0;
  double sigma_loop = 0.01;
  double ground_truth_radius = 5.0;

  DescriptorModel descriptor_model() const { return {alpha, beta, sigma_d, n_view}; }
  OdometryNoise odometry_noise() const { return {sigma_t, sigma_r}; }
  std::vector<PlaceSpec> place_specs() const;
  std::vector<Waypoint> waypoints() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// Pre-computed inputs instead of a simulated scenario. Paths are relative to
// the config file unless absolute.
struct DatasetConfig {
  std::string descriptors;
  std::string poses;     // optional, empty when absent
  std::string odometry;  // optional
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct ClusteringConfig {
  std::size_t k = 0;      // > 0 skips the elbow search
  std::size_t k_min = 0;  // 0: default range
  std::size_t k_max = 0;
  double tau_elbow = 0.1;
  std::size_t restarts = 10;
  std::size_t max_iters = 100;
  double tol = 1e-4;
  friend bool operator==(const ClusteringConfig&, const ClusteringConfig&) = default;
};

struct TopologyConfig {
  std::string aggregator = "mean";
  std::size_t concat_length = 5;
  std::size_t vlad_words = 8;
  std::size_t min_len = 2;
  double t_s = 0.8;
  std::size_t w_seq = 10;
  friend bool operator==(const TopologyConfig&, const TopologyConfig&) = default;
};

struct DetectionConfig {
  double t_g = 0.9;
  std::size_t w_frame = 30;
  friend bool operator==(const DetectionConfig&, const DetectionConfig&) = default;
};

struct BackendConfig {
  double info_loop = 100.0;
  // Floors for the odometry information when the noise model is zero.
  double min_sigma_t = 1e-3;
  double min_sigma_r = 1e-3;
  bool drop_invalid_loops = false;
  std::size_t max_iters = 100;
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  double tol_dx = 1e-9;
  double huber_delta = 1.0;  // <= 0 disables the loop kernel
  bool robust_odometry = false;
  friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

struct EvaluationConfig {
  double threshold_lo = -1.0;
  double threshold_hi = 1.0;
  double threshold_step = 0.01;
  std::string match = "exact";  // exact | tolerance
  std::size_t w_tol = 2;
  std::size_t histogram_bins = 18;
  double precision_target = 0.9;
  bool align_first = true;
  friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::optional<ScenarioConfig> scenario;
  std::optional<DatasetConfig> dataset;
  ClusteringConfig clustering;
  TopologyConfig topology;
  DetectionConfig detection;
  BackendConfig backend;
  EvaluationConfig evaluation;
  // Directory the config was loaded from; not serialized.
  std::filesystem::path base_dir;

  void validate() const;
  DetectorConfig detector() const;
  SolverConfig solver() const;
  MatchOptions match_options() const;
  std::vector<double> thresholds() const;
  std::filesystem::path resolve(const std::string& p) const;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.version == b.version && a.name == b.name && a.seed == b.seed && a.output_dir == b.output_dir &&
           a.scenario == b.scenario && a.dataset == b.dataset && a.clustering == b.clustering &&
           a.topology == b.topology && a.detection == b.detection && a.backend == b.backend &&
           a.evaluation == b.evaluation;
  }
};

// Strict JSON: unknown keys and a wrong `version` raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace topoloop
