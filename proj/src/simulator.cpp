#include "topoloop/simulator.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "topoloop/errors.hpp"
#include "topoloop/rng.hpp"
#include "topoloop/simd/kernels.hpp"

namespace topoloop {
namespace {

std::vector<double> random_unit(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  double sq = 0.0;
  while (sq < 1e-20) {
    for (double& x : v) x = rng.normal();
    sq = simd::dot(v, v);
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

const Place& World::nearest_place(double x, double y) const {
  if (places.empty()) throw ArgumentError("world has no places");
  const Place* best = &places.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : places) {
    const double d = std::hypot(p.x - x, p.y - y);
    if (d < best_d) {
      best_d = d;
      best = &p;
    }
  }
  return *best;
}

World make_world(const std::vector<PlaceSpec>& places, std::size_t dimension, std::size_t n_view, std::uint64_t seed) {
  if (places.size() < 2) throw ArgumentError("world needs at least 2 places");
  if (dimension == 0) throw ArgumentError("descriptor dimension must be positive");
  if (n_view == 0) throw ArgumentError("n_view must be >= 1");
  if (n_view > dimension) throw ArgumentError("n_view cannot exceed the descriptor dimension");
  World w;
  w.dimension = dimension;
  w.seed = seed;
  Rng place_rng(derive_seed(seed, "world.places"));
  for (std::size_t k = 0; k < places.size(); ++k) {
    w.places.push_back({k, places[k].x, places[k].y, random_unit(dimension, place_rng)});
  }
  // Gram-Schmidt over random draws.
  Rng view_rng(derive_seed(seed, "world.views"));
  while (w.view_basis.size() < n_view) {
    std::vector<double> v = random_unit(dimension, view_rng);
    for (const auto& b : w.view_basis) simd::axpy(-simd::dot(v, b), b, v);
    const double n = std::sqrt(simd::dot(v, v));
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    w.view_basis.push_back(std::move(v));
  }
  return w;
}

void DescriptorModel::validate() const {
  if (!(alpha > 0.0)) throw ArgumentError("descriptor model: alpha must be > 0");
  if (!(beta >= 0.0)) throw ArgumentError("descriptor model: beta must be >= 0");
  if (!(sigma_d >= 0.0)) throw ArgumentError("descriptor model: sigma_d must be >= 0");
  if (n_view == 0) throw ArgumentError("descriptor model: n_view must be >= 1");
}

std::size_t heading_bin(double theta, std::size_t n_view) {
  const double width = 2.0 * std::numbers::pi / static_cast<double>(n_view);
  double a = std::fmod(theta + 0.5 * width, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return static_cast<std::size_t>(std::floor(a / width)) % n_view;
}

std::vector<Pose2> route_poses(const World& world, const std::vector<Waypoint>& route, std::size_t steps_per_leg) {
  if (steps_per_leg == 0) throw ArgumentError("steps_per_leg must be >= 1");
  if (route.empty()) throw ArgumentError("route is empty");
  for (const auto& wp : route) {
    if (wp.place >= world.places.size()) throw ArgumentError("route references unknown place " + std::to_string(wp.place));
  }
  std::vector<Pose2> poses;
  double heading = route.front().heading.value_or(0.0);
  for (std::size_t leg = 0; leg + 1 < route.size(); ++leg) {
    const Place& a = world.places[route[leg].place];
    const Place& b = world.places[route[leg + 1].place];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    if (route[leg].heading) {
      heading = *route[leg].heading;
    } else if (std::hypot(dx, dy) > 0.0) {
      heading = std::atan2(dy, dx);
    }
    for (std::size_t s = 0; s < steps_per_leg; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(steps_per_leg);
      poses.emplace_back(a.x + t * dx, a.y + t * dy, heading);
    }
  }
  const Place& last = world.places[route.back().place];
  if (route.back().heading) heading = *route.back().heading;
  poses.emplace_back(last.x, last.y, heading);
  return poses;
}

Traversal generate_traversal(const World& world, const std::vector<Waypoint>& route, std::size_t steps_per_leg,
                             const DescriptorModel& model, std::uint64_t seed) {
  model.validate();
  if (model.n_view != world.view_basis.size()) {
    throw ArgumentError("descriptor model n_view does not match the world's view basis");
  }
  std::vector<Pose2> poses = route_poses(world, route, steps_per_leg);
  const std::size_t d = world.dimension;
  DescriptorMatrix desc(poses.size(), d);
  Rng rng(derive_seed(seed, "simulator.descriptors"));
  for (std::size_t f = 0; f < poses.size(); ++f) {
    const Place& place = world.nearest_place(poses[f].x, poses[f].y);
    const auto& view = world.view_basis[heading_bin(poses[f].theta, model.n_view)];
    auto row = desc.row(f);
    for (std::size_t c = 0; c < d; ++c) {
      row[c] = model.alpha * place.embedding[c] + model.beta * view[c];
      if (model.sigma_d > 0.0) row[c] += model.sigma_d * rng.normal();
    }
  }
  normalize_rows(desc);
  return Traversal(std::move(desc), std::move(poses));
}

std::vector<Pose2> true_odometry(const std::vector<Pose2>& poses) {
  std::vector<Pose2> out;
  for (std::size_t k = 0; k + 1 < poses.size(); ++k) out.push_back(between(poses[k], poses[k + 1]));
  return out;
}

std::vector<Pose2> corrupt_odometry(const Traversal& traversal, const OdometryNoise& noise, std::uint64_t seed) {
  if (!traversal.has_poses()) throw ArgumentError("odometry needs ground-truth poses");
  if (traversal.size() < 2) throw ArgumentError("odometry needs at least two frames");
  if (!(noise.sigma_t >= 0.0) || !(noise.sigma_r >= 0.0)) throw ArgumentError("odometry noise must be >= 0");
  std::vector<Pose2> steps = true_odometry(traversal.poses());
  Rng rng(derive_seed(seed, "simulator.odometry"));
  for (auto& step : steps) {
    const double ex = rng.normal() * noise.sigma_t;
    const double ey = rng.normal() * noise.sigma_t;
    const double et = rng.normal() * noise.sigma_r;
    if (noise.sigma_t > 0.0 || noise.sigma_r > 0.0) step = compose(step, Pose2(ex, ey, et));
  }
  return steps;
}

LoopMeasurement synthesize_loop_measurement(const Traversal& traversal, const LoopPair& pair,
                                            double ground_truth_radius, double sigma_loop, std::uint64_t seed) {
  if (!traversal.has_poses()) throw ArgumentError("loop measurement needs ground-truth poses");
  if (pair.i >= traversal.size() || pair.j >= traversal.size()) {
    throw ArgumentError("loop pair references a frame outside the traversal");
  }
  const Pose2& pi = traversal.poses()[pair.i];
  const Pose2& pj = traversal.poses()[pair.j];
  if (translation_distance(pi, pj) > ground_truth_radius) return {Pose2{}, false};
  Pose2 rel = between(pi, pj);
  if (sigma_loop > 0.0) {
    Rng rng(derive_seed(seed, "simulator.loop", (static_cast<std::uint64_t>(pair.i) << 32) ^ pair.j));
    const double ex = rng.normal() * sigma_loop;
    const double ey = rng.normal() * sigma_loop;
    const double et = rng.normal() * sigma_loop;
    rel = compose(rel, Pose2(ex, ey, et));
  }
  return {rel, true};
}

}  // namespace topoloop
