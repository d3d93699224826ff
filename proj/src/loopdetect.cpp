#include "topoloop/loopdetect.hpp"

#include <algorithm>
#include <cmath>

#include "topoloop/errors.hpp"
#include "topoloop/simd/kernels.hpp"

namespace topoloop {
namespace {

// Unit-normalized copy of the traversal descriptors, so a dot product is a cosine.
DescriptorMatrix unit_descriptors(const Traversal& traversal) {
  DescriptorMatrix unit = traversal.descriptors();
  normalize_rows(unit);
  for (std::size_t r = 0; r < unit.rows(); ++r) {
    const auto row = unit.row(r);
    if (simd::dot(row, row) == 0.0) throw DataError("frame " + std::to_string(r) + " has a zero descriptor");
  }
  return unit;
}

double clamp_cos(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

void DetectorConfig::validate() const {
  if (!(t_s >= -1.0 && t_s <= 1.0)) throw ArgumentError("t_s must lie in [-1, 1]");
  if (!(t_g >= -1.0 && t_g <= 1.0)) throw ArgumentError("t_g must lie in [-1, 1]");
}

std::vector<LoopPair> detect_hierarchical(const Traversal& traversal, const SequenceGraph& graph,
                                          const DetectorConfig& config) {
  config.validate();
  const std::size_t n = traversal.size();
  for (const auto& s : graph.nodes) {
    if (s.start > s.end || s.end >= n) {
      throw ConsistencyError("sequence " + std::to_string(s.id) + " spans frames outside the traversal");
    }
  }
  const DescriptorMatrix unit = unit_descriptors(traversal);
  const std::size_t d = unit.cols();

  std::vector<LoopPair> pairs;
  std::vector<double> scores;
  for (const auto& e : graph.edges) {
    if (e.p >= graph.nodes.size() || e.q >= graph.nodes.size()) {
      throw ConsistencyError("sequence graph edge references a missing node");
    }
    const Sequence& a = graph.nodes[e.p];
    const Sequence& b = graph.nodes[e.q];
    scores.resize(b.length());
    for (std::size_t i = a.start; i <= a.end; ++i) {
      simd::active_kernels().dot_rows(unit.row(i).data(), unit.row(b.start).data(), b.length(), d, scores.data());
      for (std::size_t k = 0; k < b.length(); ++k) {
        const std::size_t j = b.start + k;
        const double s = clamp_cos(scores[k]);
        if (i != j && s >= config.t_g) pairs.push_back(make_loop_pair(i, j, s));
      }
    }
  }
  sort_and_dedupe(pairs);
  return pairs;
}

std::vector<LoopPair> detect_flat_baseline(const Traversal& traversal, const DetectorConfig& config) {
  config.validate();
  const std::size_t n = traversal.size();
  if (n < 2) throw ArgumentError("baseline detector needs at least two frames");
  const DescriptorMatrix unit = unit_descriptors(traversal);
  const std::size_t d = unit.cols();

  std::vector<LoopPair> pairs;
  std::vector<double> scores;
  for (std::size_t j = 0; j < n; ++j) {
    if (j <= config.w_frame) continue;
    const std::size_t count = j - config.w_frame;  // references i in [0, j - w_frame)
    scores.resize(count);
    simd::active_kernels().dot_rows(unit.row(j).data(), unit.row(0).data(), count, d, scores.data());
    for (std::size_t i = 0; i < count; ++i) {
      const double s = clamp_cos(scores[i]);
      if (s >= config.t_g) pairs.push_back({i, j, s});
    }
  }
  sort_and_dedupe(pairs);
  return pairs;
}

std::vector<LoopPair> ground_truth_pairs(const Traversal& traversal, double radius, std::size_t w_frame) {
  if (!traversal.has_poses()) throw ArgumentError("ground truth requires poses");
  if (!(radius >= 0.0)) throw ArgumentError("radius must be non-negative");
  const auto& poses = traversal.poses();
  std::vector<LoopPair> out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + w_frame + 1; j < poses.size(); ++j) {
      const double dist = translation_distance(poses[i], poses[j]);
      if (dist <= radius) out.push_back({i, j, dist});
    }
  }
  return out;
}

std::vector<LoopPair> apply_exclusion_window(std::vector<LoopPair> pairs, std::size_t w_frame) {
  std::erase_if(pairs, [w_frame](const LoopPair& p) { return p.j - p.i <= w_frame; });
  return pairs;
}

}  // namespace topoloop
