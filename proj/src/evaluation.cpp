#include "topoloop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <unordered_set>

#include "topoloop/errors.hpp"

namespace topoloop {
namespace {

std::uint64_t key(std::size_t i, std::size_t j) { return (static_cast<std::uint64_t>(i) << 32) | j; }

void check_canonical(const std::vector<LoopPair>& pairs, const char* what) {
  for (const auto& p : pairs) {
    if (p.i >= p.j) {
      throw ArgumentError(std::string(what) + " pair (" + std::to_string(p.i) + "," + std::to_string(p.j) +
                          ") is not canonical");
    }
  }
}

}  // namespace

std::string describe(const MatchOptions& m) {
  return m.mode == MatchMode::exact ? "exact" : "tolerance(w_tol=" + std::to_string(m.w_tol) + ")";
}

std::vector<PRPoint> pr_curve(const std::vector<LoopPair>& predictions, const std::vector<LoopPair>& truth,
                              const std::vector<double>& thresholds, const MatchOptions& match) {
  check_canonical(predictions, "prediction");
  check_canonical(truth, "truth");

  std::unordered_set<std::uint64_t> truth_set;
  for (const auto& t : truth) truth_set.insert(key(t.i, t.j));

  // Which truth pairs each prediction would cover (tolerance mode only).
  std::set<std::pair<std::size_t, std::size_t>> truth_sorted;
  for (const auto& t : truth) truth_sorted.insert({t.i, t.j});
  const std::size_t n_truth = truth_set.size();

  std::vector<PRPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    PRPoint pt;
    pt.threshold = t;
    std::unordered_set<std::uint64_t> covered;
    std::unordered_set<std::uint64_t> seen;
    for (const auto& p : predictions) {
      if (p.score < t || !seen.insert(key(p.i, p.j)).second) continue;
      bool hit = false;
      if (match.mode == MatchMode::exact) {
        hit = truth_set.contains(key(p.i, p.j));
        if (hit) covered.insert(key(p.i, p.j));
      } else {
        const std::size_t w = match.w_tol;
        const std::size_t i_lo = p.i > w ? p.i - w : 0;
        for (auto it = truth_sorted.lower_bound({i_lo, 0}); it != truth_sorted.end() && it->first <= p.i + w; ++it) {
          const std::size_t dj = it->second > p.j ? it->second - p.j : p.j - it->second;
          if (dj <= w) {
            hit = true;
            covered.insert(key(it->first, it->second));
          }
        }
      }
      (hit ? pt.tp : pt.fp) += 1;
    }
    pt.fn = n_truth - covered.size();
    pt.precision = (pt.tp + pt.fp) == 0 ? 1.0 : static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fp);
    pt.recall = n_truth == 0 ? 1.0 : static_cast<double>(covered.size()) / static_cast<double>(n_truth);
    out.push_back(pt);
  }
  return out;
}

std::vector<double> threshold_sweep(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ArgumentError("threshold sweep: need step > 0 and hi >= lo");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

const PRPoint& nearest_precision(const std::vector<PRPoint>& curve, double target) {
  if (curve.empty()) throw ArgumentError("empty PR curve");
  const PRPoint* best = &curve.front();
  for (const auto& p : curve) {
    const double d = std::abs(p.precision - target);
    const double db = std::abs(best->precision - target);
    if (d < db - 1e-15 || (std::abs(d - db) <= 1e-15 && p.recall > best->recall)) best = &p;
  }
  return *best;
}

double max_recall(const std::vector<PRPoint>& curve) {
  double r = 0.0;
  for (const auto& p : curve) r = std::max(r, p.recall);
  return r;
}

APEReport ape(const std::vector<Pose2>& estimate, const std::vector<Pose2>& truth, bool align_first) {
  if (estimate.size() != truth.size()) {
    throw ArgumentError("ape: " + std::to_string(estimate.size()) + " estimated vs " + std::to_string(truth.size()) +
                        " true poses");
  }
  if (estimate.empty()) throw ArgumentError("ape: empty trajectory");
  APEReport rep;
  rep.aligned = align_first;
  const Pose2 align = align_first ? compose(truth.front(), inverse(estimate.front())) : Pose2{};
  rep.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    const Pose2 e = align_first ? compose(align, estimate[k]) : estimate[k];
    const double err = translation_distance(e, truth[k]);
    rep.min = std::min(rep.min, err);
    rep.max = std::max(rep.max, err);
    sum += err;
    sq += err * err;
  }
  const auto n = static_cast<double>(estimate.size());
  rep.mean = sum / n;
  rep.rmse = std::sqrt(sq / n);
  // Keep min <= mean <= max exact despite summation rounding.
  rep.mean = std::clamp(rep.mean, rep.min, rep.max);
  return rep;
}

std::vector<std::size_t> rotation_histogram(const std::vector<LoopPair>& pairs, const std::vector<Pose2>& truth_poses,
                                            std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (const auto& p : pairs) {
    if (p.i >= truth_poses.size() || p.j >= truth_poses.size()) {
      throw ArgumentError("histogram: no pose for pair (" + std::to_string(p.i) + "," + std::to_string(p.j) + ")");
    }
    const double deg = std::abs(wrap_angle(truth_poses[p.i].theta - truth_poses[p.j].theta)) * 180.0 / std::numbers::pi;
    auto bin = static_cast<std::size_t>(std::floor(deg / (180.0 / static_cast<double>(bins)) + 1e-9));
    counts[std::min(bin, bins - 1)] += 1;
  }
  return counts;
}

std::size_t histogram_mass_from(const std::vector<std::size_t>& counts, double lo_deg) {
  const double width = 180.0 / static_cast<double>(counts.size());
  std::size_t mass = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (static_cast<double>(b) * width >= lo_deg - 1e-9) mass += counts[b];
  }
  return mass;
}

std::string format_pr(const std::vector<LabeledPR>& curves, const MatchOptions& match) {
  std::string out = "# match=" + describe(match) + "\n";
  const bool labeled = curves.size() > 1 || (curves.size() == 1 && !curves.front().label.empty());
  out += labeled ? "label,threshold,precision,recall,tp,fp,fn\n" : "threshold,precision,recall,tp,fp,fn\n";
  char buf[160];
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%zu,%zu,%zu\n", p.threshold, p.precision, p.recall, p.tp, p.fp, p.fn);
      out += labeled ? c.label + "," + buf : std::string(buf);
    }
  }
  return out;
}

std::string format_ape(const std::vector<LabeledAPE>& rows) {
  std::string out = "label,min,mean,max,rmse\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f\n", r.report.min, r.report.mean, r.report.max, r.report.rmse);
    out += r.label + buf;
  }
  return out;
}

std::string format_histogram(const std::vector<LabeledHistogram>& hists) {
  const bool labeled = hists.size() > 1 || (hists.size() == 1 && !hists.front().label.empty());
  std::string out = labeled ? "label,bin_low_deg,bin_high_deg,count\n" : "bin_low_deg,bin_high_deg,count\n";
  char buf[128];
  for (const auto& h : hists) {
    const double width = 180.0 / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f,%zu\n", static_cast<double>(b) * width,
                    static_cast<double>(b + 1) * width, h.counts[b]);
      out += labeled ? h.label + "," + buf : std::string(buf);
    }
  }
  return out;
}

}  // namespace topoloop
