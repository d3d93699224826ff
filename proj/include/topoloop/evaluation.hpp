#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "topoloop/dataset.hpp"
#include "topoloop/geometry.hpp"

namespace topoloop {

enum class MatchMode {
  exact,      // prediction is correct iff (i, j) is a truth pair
  tolerance,  // correct iff some truth pair lies within +-w_tol on both indices
};

struct MatchOptions {
  MatchMode mode = MatchMode::exact;
  std::size_t w_tol = 2;
};

std::string describe(const MatchOptions& m);

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// One point per threshold, using predictions with score >= threshold. In
// tolerance mode fn counts truth pairs no prediction covers, so tp + fn equals
// |truth| only in exact mode.
std::vector<PRPoint> pr_curve(const std::vector<LoopPair>& predictions, const std::vector<LoopPair>& truth,
                              const std::vector<double>& thresholds, const MatchOptions& match = {});

// Thresholds lo, lo+step, ..., hi (inclusive up to rounding).
std::vector<double> threshold_sweep(double lo, double hi, double step);

// Point whose precision is closest to `target`; ties go to the higher recall.
const PRPoint& nearest_precision(const std::vector<PRPoint>& curve, double target);

// Largest recall reached anywhere on the curve.
double max_recall(const std::vector<PRPoint>& curve);

struct APEReport {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double rmse = 0.0;
  bool aligned = false;
};

// Translational error per frame. With align_first the estimate is first
// moved by the rigid transform taking estimate[0] onto truth[0].
APEReport ape(const std::vector<Pose2>& estimate, const std::vector<Pose2>& truth, bool align_first);

// Absolute wrapped heading difference of each pair, in degrees, binned
// uniformly over [0, 180]. 180 falls in the last bin.
std::vector<std::size_t> rotation_histogram(const std::vector<LoopPair>& pairs, const std::vector<Pose2>& truth_poses,
                                            std::size_t bins);

// Sum of the bins that lie entirely within [lo_deg, 180].
std::size_t histogram_mass_from(const std::vector<std::size_t>& counts, double lo_deg);

// pr.csv, ape.csv and hist.csv rows. The headers carry a leading comment
// line naming the match mode where relevant.
struct LabeledPR {
  std::string label;
  std::vector<PRPoint> points;
};
struct LabeledAPE {
  std::string label;
  APEReport report;
};
struct LabeledHistogram {
  std::string label;
  std::vector<std::size_t> counts;
};

std::string format_pr(const std::vector<LabeledPR>& curves, const MatchOptions& match);
std::string format_ape(const std::vector<LabeledAPE>& rows);
std::string format_histogram(const std::vector<LabeledHistogram>& hists);

}  // namespace topoloop
