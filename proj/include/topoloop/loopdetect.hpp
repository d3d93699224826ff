#pragma once

#include <cstddef>
#include <vector>

#include "topoloop/dataset.hpp"
#include "topoloop/topology.hpp"

namespace topoloop {

struct DetectorConfig {
  double t_s = 0.8;          // sequence similarity threshold
  double t_g = 0.9;          // image similarity threshold
  std::size_t w_frame = 30;  // temporal exclusion window, frames
  std::size_t w_seq = 10;    // minimum gap between linked sequences, frames

  void validate() const;
};

// For every graph edge, matches each frame of one sequence against each frame
// of the other and keeps pairs with cosine >= t_g. Output is canonical,
// deduplicated and sorted by (i, j).
std::vector<LoopPair> detect_hierarchical(const Traversal& traversal, const SequenceGraph& graph,
                                          const DetectorConfig& config);

// Every frame queries all earlier frames outside the exclusion window.
std::vector<LoopPair> detect_flat_baseline(const Traversal& traversal, const DetectorConfig& config);

// Pairs (i, j) with j > i + w_frame whose ground-truth positions lie within
// `radius` meters. Scores are the distances.
std::vector<LoopPair> ground_truth_pairs(const Traversal& traversal, double radius, std::size_t w_frame);

// Drops pairs with j - i <= w_frame.
std::vector<LoopPair> apply_exclusion_window(std::vector<LoopPair> pairs, std::size_t w_frame);

}  // namespace topoloop
