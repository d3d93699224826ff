#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoloop/dataset.hpp"

namespace topoloop {

// Maximal run of consecutive frames that share one cluster label.
struct Sequence {
  std::size_t id = 0;
  std::size_t cluster = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::vector<double> descriptor;  // empty until aggregated

  std::size_t length() const noexcept { return end - start + 1; }
  bool contains(std::size_t frame) const noexcept { return frame >= start && frame <= end; }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

// Runs shorter than min_len are dropped; ids are assigned after dropping.
std::vector<Sequence> segment_sequences(std::span<const std::size_t> labels, std::size_t min_len);

enum class Aggregator { mean, concat_cap, vlad };

Aggregator parse_aggregator(std::string_view name);
std::string_view to_string(Aggregator a);

// Visual words for VLAD, learned once per traversal.
struct Codebook {
  DescriptorMatrix words;  // V x d_g
};

Codebook learn_codebook(const DescriptorMatrix& descriptors, std::size_t words, std::uint64_t seed);

struct AggregatorParams {
  std::size_t concat_length = 5;
  const Codebook* codebook = nullptr;  // required for vlad
};

// Output dimension of an aggregator for d_g-dimensional frames.
std::size_t aggregated_dimension(Aggregator method, std::size_t d_g, const AggregatorParams& params);

// Collapses the rows of one sequence into a unit vector.
//   mean:       normalized mean of normalized rows, d_s = d_g
//   concat_cap: first L rows (last row repeated when shorter), d_s = L*d_g
//   vlad:       per-word residual sums, intra- then globally normalized,
//               d_s = V*d_g. When every residual vanishes the mean result is
//               placed in the block of its nearest word.
std::vector<double> aggregate_sequence(const DescriptorMatrix& frames, Aggregator method,
                                       const AggregatorParams& params);

// Fills `descriptor` of every sequence from the traversal's rows.
void aggregate_sequences(const DescriptorMatrix& descriptors, std::vector<Sequence>& sequences,
                         Aggregator method, const AggregatorParams& params);

// u.v / (|u||v|) clamped to [-1, 1].
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct SequenceEdge {
  std::size_t p = 0;
  std::size_t q = 0;
  double similarity = 0.0;

  friend bool operator==(const SequenceEdge&, const SequenceEdge&) = default;
};

struct SequenceGraph {
  std::vector<Sequence> nodes;
  std::vector<SequenceEdge> edges;  // p < q, sorted
};

// Number of frames strictly between two sequences.
std::size_t frame_gap(const Sequence& a, const Sequence& b);

// Edge (p, q) for every pair with cosine >= t_s, skipping pairs separated by
// fewer than w_seq frames.
SequenceGraph build_sequence_graph(std::vector<Sequence> sequences, double t_s, std::size_t w_seq);

// sequences.csv, seqgraph.csv, and P x d_s sequence descriptors in .tdsc.
void write_sequences(const std::vector<Sequence>& sequences, const std::filesystem::path& path);
std::vector<Sequence> read_sequences(const std::filesystem::path& path);
void write_sequence_graph(const SequenceGraph& graph, const std::filesystem::path& path);
std::vector<SequenceEdge> read_sequence_edges(const std::filesystem::path& path);
void write_sequence_descriptors(const std::vector<Sequence>& sequences, const std::filesystem::path& path);
void attach_sequence_descriptors(std::vector<Sequence>& sequences, const DescriptorMatrix& descriptors);

}  // namespace topoloop
