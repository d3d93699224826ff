#include "topoloop/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "topoloop/errors.hpp"
#include "topoloop/rng.hpp"
#include "topoloop/simd/kernels.hpp"

namespace topoloop {
namespace {

DescriptorMatrix seed_plus_plus(const DescriptorMatrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  DescriptorMatrix centers(0, points.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  centers.append_row(points.row(first));
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t r = 0; r < n; ++r) d2[r] = simd::squared_distance(points.row(r), centers.row(0));

  while (centers.rows() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += d2[r];
        if (d2[r] > 0.0 && acc > target) {
          pick = r;
          break;
        }
      }
      if (pick == n) {
        // Rounding left target at the very end of the cumulative sum.
        for (std::size_t r = n; r-- > 0;) {
          if (d2[r] > 0.0) {
            pick = r;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a center: take an unused row.
      std::vector<std::size_t> unused;
      for (std::size_t r = 0; r < n; ++r) {
        if (!chosen[r]) unused.push_back(r);
      }
      pick = unused[rng.index(unused.size())];
    }
    chosen[pick] = true;
    centers.append_row(points.row(pick));
    const auto c = centers.row(centers.rows() - 1);
    for (std::size_t r = 0; r < n; ++r) d2[r] = std::min(d2[r], simd::squared_distance(points.row(r), c));
  }
  return centers;
}

std::size_t nearest(std::span<const double> x, const DescriptorMatrix& centers, double& best) {
  std::size_t arg = 0;
  best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = simd::squared_distance(x, centers.row(c));
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

DescriptorMatrix group_means(const DescriptorMatrix& points, std::span<const std::size_t> labels, std::size_t k,
                             std::vector<std::size_t>& counts) {
  DescriptorMatrix means(k, points.cols());
  counts.assign(k, 0);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    simd::axpy(1.0, points.row(r), means.row(labels[r]));
    ++counts[labels[r]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (double& v : means.row(c)) v *= inv;
  }
  return means;
}

double labelled_inertia(const DescriptorMatrix& points, std::span<const std::size_t> labels,
                        const DescriptorMatrix& centers) {
  double total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    total += simd::squared_distance(points.row(r), centers.row(labels[r]));
  }
  return total;
}

Clustering lloyd(const DescriptorMatrix& points, std::size_t k, Rng& rng, const KMeansOptions& options) {
  const std::size_t n = points.rows();
  Clustering out;
  DescriptorMatrix centers = seed_plus_plus(points, k, rng);
  std::vector<std::size_t> labels(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> counts;

  const std::size_t iters = std::max<std::size_t>(options.max_iters, 1);
  for (std::size_t it = 0; it < iters; ++it) {
    counts.assign(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      labels[r] = nearest(points.row(r), centers, dist[r]);
      ++counts[labels[r]];
    }
    // Empty-cluster repair: the worst-fitting point of a multi-member
    // cluster becomes the sole member of the empty one.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t worst = n;
      for (std::size_t r = 0; r < n; ++r) {
        if (counts[labels[r]] > 1 && (worst == n || dist[r] > dist[worst])) worst = r;
      }
      --counts[labels[worst]];
      labels[worst] = c;
      dist[worst] = 0.0;
      counts[c] = 1;
      const auto src = points.row(worst);
      std::copy(src.begin(), src.end(), centers.row(c).begin());
    }

    DescriptorMatrix updated = group_means(points, labels, k, counts);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(simd::squared_distance(updated.row(c), centers.row(c))));
    }
    centers = std::move(updated);
    out.inertia_history.push_back(labelled_inertia(points, labels, centers));
    out.iterations = it + 1;
    if (shift < options.tol) break;
  }

  out.labels = std::move(labels);
  out.centroids = std::move(centers);
  out.inertia = out.inertia_history.back();
  return out;
}

}  // namespace

Clustering kmeans(const DescriptorMatrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (points.empty()) throw ArgumentError("kmeans: no points");
  if (k == 0) throw ArgumentError("kmeans: k must be at least 1");
  if (k > points.rows()) {
    throw ArgumentError("kmeans: k = " + std::to_string(k) + " exceeds N = " + std::to_string(points.rows()));
  }
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  Clustering best;
  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans.restart", r));
    Clustering candidate = lloyd(points, k, rng, options);
    if (!have || candidate.inertia < best.inertia) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

double partition_inertia(const DescriptorMatrix& points, std::span<const std::size_t> labels, std::size_t k) {
  std::vector<std::size_t> counts;
  const DescriptorMatrix means = group_means(points, labels, k, counts);
  return labelled_inertia(points, labels, means);
}

std::size_t select_elbow(std::span<const double> inertia, std::size_t k_min, double tau, bool& saturated) {
  if (inertia.empty()) throw ArgumentError("elbow: empty inertia curve");
  saturated = false;
  for (std::size_t m = 0; m + 1 < inertia.size(); ++m) {
    const double j = inertia[m];
    const double drop = j > 0.0 ? (j - inertia[m + 1]) / j : 0.0;
    if (drop < tau) return k_min + m;
  }
  saturated = true;
  return k_min + inertia.size() - 1;
}

ElbowResult elbow_select_k(const DescriptorMatrix& points, std::size_t k_min, std::size_t k_max, double tau_elbow,
                           std::uint64_t seed, const KMeansOptions& options) {
  if (k_min < 1 || k_min >= k_max || k_max > points.rows()) {
    throw ArgumentError("elbow: need 1 <= k_min < k_max <= N (got " + std::to_string(k_min) + ", " +
                        std::to_string(k_max) + ", N=" + std::to_string(points.rows()) + ")");
  }
  ElbowResult result;
  std::vector<Clustering> runs;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    runs.push_back(kmeans(points, k, derive_seed(seed, "elbow.k", k), options));
    result.ks.push_back(k);
    result.inertia.push_back(runs.back().inertia);
  }
  result.k = select_elbow(result.inertia, k_min, tau_elbow, result.saturated);
  result.clustering = std::move(runs[result.k - k_min]);
  return result;
}

KRange default_k_range(std::size_t n) {
  if (n < 2) throw ArgumentError("elbow: need at least 2 frames");
  std::size_t k_max = std::min<std::size_t>(n / 10, 50);
  std::size_t k_min = 2;
  if (k_max > n) k_max = n;
  if (k_max <= k_min) {
    k_min = 1;
    k_max = std::max<std::size_t>(2, std::min<std::size_t>(n, 3));
  }
  return {k_min, k_max};
}

void write_clusters(std::span<const std::size_t> labels, const std::filesystem::path& path) {
  std::string out = "frame_id,cluster_id\n";
  for (std::size_t r = 0; r < labels.size(); ++r) out += std::to_string(r) + "," + std::to_string(labels[r]) + "\n";
  write_text_file(path, out);
}

std::vector<std::size_t> read_clusters(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::size_t> labels;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line == "frame_id,cluster_id")) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno);
    const auto tok = split(line, ',');
    if (tok.size() != 2) throw ParseError(ctx + ": expected 'frame_id,cluster_id'");
    if (parse_index(tok[0], ctx) != labels.size()) throw OrderingError(ctx + ": frame ids must be consecutive");
    labels.push_back(parse_index(tok[1], ctx));
  }
  if (labels.empty()) throw EmptyDataError(path.string() + ": no cluster labels");
  return labels;
}

void write_elbow(const ElbowResult& elbow, const std::filesystem::path& path) {
  std::string out = "k,inertia\n";
  char buf[64];
  for (std::size_t m = 0; m < elbow.ks.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", elbow.ks[m], elbow.inertia[m]);
    out += buf;
  }
  write_text_file(path, out);
}

}  // namespace topoloop
