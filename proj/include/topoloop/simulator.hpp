#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "topoloop/dataset.hpp"
#include "topoloop/geometry.hpp"

namespace topoloop {

struct Place {
  std::size_t id = 0;
  double x = 0.0;
  double y = 0.0;
  std::vector<double> embedding;  // unit vector in R^d_g
};

struct PlaceSpec {
  double x = 0.0;
  double y = 0.0;
};

// Synthetic environment: places with appearance embeddings plus one unit
// "view" vector per heading bin. View vectors are mutually orthonormal.
struct World {
  std::vector<Place> places;
  std::vector<std::vector<double>> view_basis;
  std::size_t dimension = 0;
  std::uint64_t seed = 0;

  // Closest place center to (x, y); ties go to the lower id.
  const Place& nearest_place(double x, double y) const;
};

World make_world(const std::vector<PlaceSpec>& places, std::size_t dimension, std::size_t n_view, std::uint64_t seed);

// descriptor = normalize(alpha * place + beta * view(heading bin) + noise)
struct DescriptorModel {
  double alpha = 1.0;
  double beta = 0.0;
  double sigma_d = 0.0;
  std::size_t n_view = 8;

  void validate() const;
};

// Bin index for a heading; bins are centered on multiples of 2*pi/n_view.
std::size_t heading_bin(double theta, std::size_t n_view);

struct OdometryNoise {
  double sigma_t = 0.0;  // meters per step
  double sigma_r = 0.0;  // radians per step
};

struct Waypoint {
  std::size_t place = 0;
  // Heading held along the leg that starts here. Unset: direction of travel.
  std::optional<double> heading;
};

// Walks the route leg by leg, `steps_per_leg` frames per leg, then one frame
// at the final waypoint.
std::vector<Pose2> route_poses(const World& world, const std::vector<Waypoint>& route, std::size_t steps_per_leg);

Traversal generate_traversal(const World& world, const std::vector<Waypoint>& route, std::size_t steps_per_leg,
                             const DescriptorModel& model, std::uint64_t seed);

// Exact relative motion between consecutive poses.
std::vector<Pose2> true_odometry(const std::vector<Pose2>& poses);

// Each true step right-composed with a perturbation drawn from
// N(0, diag(sigma_t^2, sigma_t^2, sigma_r^2)).
std::vector<Pose2> corrupt_odometry(const Traversal& traversal, const OdometryNoise& noise, std::uint64_t seed);

struct LoopMeasurement {
  Pose2 relative;
  bool valid = false;
};

// Stand-in for feature-based relative pose estimation. Within the radius:
// true relative pose with Gaussian noise of std sigma_loop on every
// component. Otherwise the identity, flagged invalid. The noise stream is
// keyed on (seed, i, j), so it does not depend on the order of calls.
LoopMeasurement synthesize_loop_measurement(const Traversal& traversal, const LoopPair& pair,
                                            double ground_truth_radius, double sigma_loop, std::uint64_t seed);

}  // namespace topoloop
