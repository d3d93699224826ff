#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "topoloop/dataset.hpp"

namespace topoloop {

struct Clustering {
  std::vector<std::size_t> labels;  // per row, in [0, k)
  DescriptorMatrix centroids;       // k x d
  double inertia = 0.0;
  // Inertia after each Lloyd iteration of the winning restart.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;

  std::size_t k() const noexcept { return centroids.rows(); }
};

struct KMeansOptions {
  std::size_t max_iters = 100;
  double tol = 1e-4;        // stop once no centroid moves farther than this
  std::size_t restarts = 10;
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
// Squared Euclidean distance. Empty clusters take the point farthest from its
// centroid, so every label in [0, k) is used.
Clustering kmeans(const DescriptorMatrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options = {});

// Inertia of an arbitrary labelling against the means of its groups.
double partition_inertia(const DescriptorMatrix& points, std::span<const std::size_t> labels, std::size_t k);

struct ElbowResult {
  std::size_t k = 0;
  std::vector<std::size_t> ks;
  std::vector<double> inertia;  // J(k) for each entry of ks
  bool saturated = false;       // no k met the drop rule; k_max returned
  Clustering clustering;        // the clustering at the selected k
};

// Smallest k whose relative drop (J(k) - J(k+1)) / J(k) is below tau.
// `inertia[m]` is J(k_min + m). Returns k_min + inertia.size() - 1 and sets
// `saturated` when no k qualifies.
std::size_t select_elbow(std::span<const double> inertia, std::size_t k_min, double tau, bool& saturated);

ElbowResult elbow_select_k(const DescriptorMatrix& points, std::size_t k_min, std::size_t k_max,
                           double tau_elbow, std::uint64_t seed, const KMeansOptions& options = {});

struct KRange {
  std::size_t k_min;
  std::size_t k_max;
};

// [2, min(N/10, 50)], widened so that k_min < k_max <= N whenever N >= 2.
KRange default_k_range(std::size_t n);

// clusters.csv ("frame_id,cluster_id") and elbow.csv ("k,inertia").
void write_clusters(std::span<const std::size_t> labels, const std::filesystem::path& path);
std::vector<std::size_t> read_clusters(const std::filesystem::path& path);
void write_elbow(const ElbowResult& elbow, const std::filesystem::path& path);

}  // namespace topoloop
