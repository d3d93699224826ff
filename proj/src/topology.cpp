#include "topoloop/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "topoloop/clustering.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/simd/kernels.hpp"

namespace topoloop {
namespace {

constexpr double kZeroResidual = 1e-12;

double norm(std::span<const double> v) { return std::sqrt(simd::dot(v, v)); }

void scale_to_unit(std::span<double> v) {
  const double n = norm(v);
  if (n <= 0.0) return;
  for (double& x : v) x /= n;
}

std::vector<double> unit_row(std::span<const double> row) {
  std::vector<double> out(row.begin(), row.end());
  scale_to_unit(out);
  return out;
}

std::vector<double> aggregate_mean(const DescriptorMatrix& frames) {
  std::vector<double> acc(frames.cols(), 0.0);
  for (std::size_t r = 0; r < frames.rows(); ++r) simd::axpy(1.0, unit_row(frames.row(r)), acc);
  for (double& x : acc) x /= static_cast<double>(frames.rows());
  if (norm(acc) < kZeroResidual) throw DataError("mean aggregation: rows cancel to zero");
  scale_to_unit(acc);
  return acc;
}

std::vector<double> aggregate_concat(const DescriptorMatrix& frames, std::size_t length) {
  if (length == 0) throw ArgumentError("concat_cap: length must be >= 1");
  const std::size_t d = frames.cols();
  std::vector<double> out;
  out.reserve(length * d);
  for (std::size_t k = 0; k < length; ++k) {
    const auto row = unit_row(frames.row(std::min(k, frames.rows() - 1)));
    out.insert(out.end(), row.begin(), row.end());
  }
  scale_to_unit(out);
  return out;
}

std::size_t nearest_word(std::span<const double> x, const DescriptorMatrix& words) {
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < words.rows(); ++w) {
    const double d = simd::squared_distance(x, words.row(w));
    if (d < best) {
      best = d;
      arg = w;
    }
  }
  return arg;
}

std::vector<double> aggregate_vlad(const DescriptorMatrix& frames, const Codebook* codebook) {
  if (codebook == nullptr || codebook->words.empty()) throw ArgumentError("vlad: codebook required");
  const DescriptorMatrix& words = codebook->words;
  const std::size_t d = frames.cols();
  if (words.cols() != d) throw ArgumentError("vlad: codebook dimension does not match descriptors");

  std::vector<double> out(words.rows() * d, 0.0);
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    const auto x = unit_row(frames.row(r));
    const std::size_t w = nearest_word(x, words);
    std::span<double> block(out.data() + w * d, d);
    simd::axpy(1.0, x, block);
    simd::axpy(-1.0, words.row(w), block);
  }
  if (norm(out) < kZeroResidual) {
    std::fill(out.begin(), out.end(), 0.0);
    const auto mean = aggregate_mean(frames);
    const std::size_t w = nearest_word(mean, words);
    std::copy(mean.begin(), mean.end(), out.begin() + static_cast<std::ptrdiff_t>(w * d));
    return out;
  }
  for (std::size_t w = 0; w < words.rows(); ++w) scale_to_unit(std::span<double>(out.data() + w * d, d));
  scale_to_unit(out);
  return out;
}

}  // namespace

std::vector<Sequence> segment_sequences(std::span<const std::size_t> labels, std::size_t min_len) {
  if (labels.empty()) throw ArgumentError("segment_sequences: no labels");
  if (min_len == 0) throw ArgumentError("segment_sequences: min_len must be >= 1");
  std::vector<Sequence> out;
  std::size_t start = 0;
  for (std::size_t f = 1; f <= labels.size(); ++f) {
    if (f < labels.size() && labels[f] == labels[start]) continue;
    if (f - start >= min_len) {
      Sequence s;
      s.id = out.size();
      s.cluster = labels[start];
      s.start = start;
      s.end = f - 1;
      out.push_back(std::move(s));
    }
    start = f;
  }
  return out;
}

Aggregator parse_aggregator(std::string_view name) {
  if (name == "mean") return Aggregator::mean;
  if (name == "concat_cap") return Aggregator::concat_cap;
  if (name == "vlad") return Aggregator::vlad;
  throw ArgumentError("unknown aggregator '" + std::string(name) + "'");
}

std::string_view to_string(Aggregator a) {
  switch (a) {
    case Aggregator::mean:
      return "mean";
    case Aggregator::concat_cap:
      return "concat_cap";
    case Aggregator::vlad:
      return "vlad";
  }
  return "?";
}

Codebook learn_codebook(const DescriptorMatrix& descriptors, std::size_t words, std::uint64_t seed) {
  if (words == 0) throw ArgumentError("codebook: need at least one word");
  DescriptorMatrix unit = descriptors;
  normalize_rows(unit);
  const std::size_t v = std::min(words, unit.rows());
  return Codebook{kmeans(unit, v, seed).centroids};
}

std::size_t aggregated_dimension(Aggregator method, std::size_t d_g, const AggregatorParams& params) {
  switch (method) {
    case Aggregator::mean:
      return d_g;
    case Aggregator::concat_cap:
      return params.concat_length * d_g;
    case Aggregator::vlad:
      return params.codebook ? params.codebook->words.rows() * d_g : 0;
  }
  return 0;
}

std::vector<double> aggregate_sequence(const DescriptorMatrix& frames, Aggregator method,
                                       const AggregatorParams& params) {
  if (frames.rows() == 0 || frames.cols() == 0) throw ArgumentError("aggregate_sequence: empty sequence");
  switch (method) {
    case Aggregator::mean:
      return aggregate_mean(frames);
    case Aggregator::concat_cap:
      return aggregate_concat(frames, params.concat_length);
    case Aggregator::vlad:
      return aggregate_vlad(frames, params.codebook);
  }
  throw ArgumentError("aggregate_sequence: unknown method");
}

void aggregate_sequences(const DescriptorMatrix& descriptors, std::vector<Sequence>& sequences,
                         Aggregator method, const AggregatorParams& params) {
  for (auto& s : sequences) {
    if (s.end >= descriptors.rows() || s.start > s.end) {
      throw ConsistencyError("sequence " + std::to_string(s.id) + " lies outside the traversal");
    }
    DescriptorMatrix rows(0, descriptors.cols());
    for (std::size_t f = s.start; f <= s.end; ++f) rows.append_row(descriptors.row(f));
    s.descriptor = aggregate_sequence(rows, method, params);
  }
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ArgumentError("cosine: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw ArgumentError("cosine: zero vector");
  return std::clamp(simd::dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::size_t frame_gap(const Sequence& a, const Sequence& b) {
  const Sequence& first = a.start <= b.start ? a : b;
  const Sequence& second = a.start <= b.start ? b : a;
  if (second.start <= first.end) return 0;
  return second.start - first.end - 1;
}

SequenceGraph build_sequence_graph(std::vector<Sequence> sequences, double t_s, std::size_t w_seq) {
  SequenceGraph graph;
  if (!sequences.empty()) {
    const std::size_t ds = sequences.front().descriptor.size();
    for (const auto& s : sequences) {
      if (s.descriptor.empty()) throw ArgumentError("sequence graph: sequence " + std::to_string(s.id) + " has no descriptor");
      if (s.descriptor.size() != ds) throw ArgumentError("sequence graph: mixed descriptor dimensions");
    }
  }
  for (std::size_t p = 0; p < sequences.size(); ++p) {
    for (std::size_t q = p + 1; q < sequences.size(); ++q) {
      if (frame_gap(sequences[p], sequences[q]) < w_seq) continue;
      const double s = cosine_similarity(sequences[p].descriptor, sequences[q].descriptor);
      if (s >= t_s) graph.edges.push_back({p, q, s});
    }
  }
  graph.nodes = std::move(sequences);
  return graph;
}

void write_sequences(const std::vector<Sequence>& sequences, const std::filesystem::path& path) {
  std::string out = "seq_id,cluster_id,start_frame,end_frame\n";
  for (const auto& s : sequences) {
    out += std::to_string(s.id) + "," + std::to_string(s.cluster) + "," + std::to_string(s.start) + "," +
           std::to_string(s.end) + "\n";
  }
  write_text_file(path, out);
}

std::vector<Sequence> read_sequences(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<Sequence> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("seq_id", 0) == 0)) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    const auto tok = split(line, ',');
    if (tok.size() != 4) throw ParseError(ctx + ": expected 'seq_id,cluster_id,start_frame,end_frame'");
    Sequence s;
    s.id = parse_index(tok[0], ctx);
    s.cluster = parse_index(tok[1], ctx);
    s.start = parse_index(tok[2], ctx);
    s.end = parse_index(tok[3], ctx);
    if (s.id != out.size()) throw OrderingError(ctx + ": sequence ids must be consecutive");
    if (s.start > s.end) throw ConsistencyError(ctx + ": start_frame after end_frame");
    out.push_back(std::move(s));
  }
  return out;
}

void write_sequence_graph(const SequenceGraph& graph, const std::filesystem::path& path) {
  std::string out = "p,q,similarity\n";
  char buf[96];
  for (const auto& e : graph.edges) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9f\n", e.p, e.q, e.similarity);
    out += buf;
  }
  write_text_file(path, out);
}

std::vector<SequenceEdge> read_sequence_edges(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<SequenceEdge> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line == "p,q,similarity")) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    const auto tok = split(line, ',');
    if (tok.size() != 3) throw ParseError(ctx + ": expected 'p,q,similarity'");
    SequenceEdge e{parse_index(tok[0], ctx), parse_index(tok[1], ctx), parse_double(tok[2], ctx)};
    if (e.p >= e.q) throw CanonicalizationError(ctx + ": edge requires p < q");
    out.push_back(e);
  }
  return out;
}

void write_sequence_descriptors(const std::vector<Sequence>& sequences, const std::filesystem::path& path) {
  if (sequences.empty()) throw EmptyDataError("no sequences to write");
  DescriptorMatrix m(0, sequences.front().descriptor.size());
  for (const auto& s : sequences) m.append_row(s.descriptor);
  write_descriptors(m, path);
}

void attach_sequence_descriptors(std::vector<Sequence>& sequences, const DescriptorMatrix& descriptors) {
  if (descriptors.rows() != sequences.size()) {
    throw ConsistencyError("sequence descriptor count does not match sequences");
  }
  for (std::size_t p = 0; p < sequences.size(); ++p) {
    const auto row = descriptors.row(p);
    sequences[p].descriptor.assign(row.begin(), row.end());
  }
}

}  // namespace topoloop
