#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topoloop/config.hpp"
#include "topoloop/evaluation.hpp"
#include "topoloop/posegraph.hpp"

namespace topoloop {

// Each stage reads its inputs from the output directory and writes its own
// artifacts there, so any stage can be rerun on its own.
enum class Stage {
  simulate,
  cluster,
  segment,
  aggregate,
  graph,
  detect,
  baseline,
  truth,
  optimize,
  eval_pr,
  eval_ape,
  eval_hist,
};

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

inline constexpr std::string_view kHierarchical = "hierarchical";
inline constexpr std::string_view kBaseline = "baseline";

// Failures are rethrown as the same error type with "<stage>: " prepended.
void run_stage(Stage stage, const ExperimentConfig& config, const std::filesystem::path& out);

struct DetectorSummary {
  std::string label;
  std::size_t candidates = 0;     // pairs written by the detector
  std::size_t accepted = 0;       // pairs with score >= t_g, fed to the backend
  std::size_t invalid_loops = 0;  // accepted pairs outside the ground-truth radius
  PRPoint at_t_g;
  PRPoint operating;              // point nearest the precision target
  double max_recall = 0.0;
  std::vector<std::size_t> histogram;  // at the operating point
  std::size_t opposite_mass = 0;       // histogram mass in [150, 180] degrees
  APEReport ape;
  std::size_t iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::string stop_reason;
};

struct ExperimentSummary {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  std::size_t clusters = 0;
  std::size_t sequences = 0;
  std::size_t graph_edges = 0;
  std::size_t truth_pairs = 0;
  std::string match;
  APEReport noisy;
  std::vector<DetectorSummary> detectors;  // hierarchical, then baseline

  const DetectorSummary& detector(std::string_view label) const;
};

struct ExperimentReport {
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> artifacts;  // sorted
  ExperimentSummary summary;
};

// Where the artifacts of `config` go: output_dir as given (relative to the
// working directory).
std::filesystem::path output_directory(const ExperimentConfig& config);

// Summary metrics recomputed from the artifacts in `out`.
ExperimentSummary summarize(const ExperimentConfig& config, const std::filesystem::path& out);
std::string format_summary(const ExperimentSummary& summary);

// Every stage in order, then summary.json.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct ComparisonReport {
  ExperimentSummary summary;
  std::vector<LabeledPR> pr;
  std::vector<LabeledHistogram> histograms;
  std::vector<LabeledAPE> ape;
};

// Full run, then the side-by-side PR, histogram and APE tables of both
// detectors on the same inputs.
ComparisonReport compare_detectors(const ExperimentConfig& config);
std::string format_comparison(const ComparisonReport& report);

}  // namespace topoloop
