#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "topoloop/dataset.hpp"
#include "topoloop/geometry.hpp"

namespace topoloop {

enum class EdgeKind { odometry, loop };

struct PoseEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  Pose2 measurement;  // pose of j expressed in the frame of i
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
  EdgeKind kind = EdgeKind::odometry;
};

struct PoseGraph {
  std::map<std::size_t, Pose2> vertices;
  std::vector<PoseEdge> edges;
  std::set<std::size_t> fixed;

  // Throws ConsistencyError / DataError when an invariant is broken.
  void validate() const;
  // Vertex poses in id order.
  std::vector<Pose2> trajectory() const;
};

struct LoopConstraint {
  LoopPair pair;
  Pose2 measurement;
};

// Dead-reckons the vertices from the origin, fixes vertex 0, adds one
// odometry edge per step and one loop edge per constraint (duplicates kept).
PoseGraph build_graph(const std::vector<Pose2>& odometry, const std::vector<LoopConstraint>& loops,
                      const Eigen::Matrix3d& info_odom, const Eigen::Matrix3d& info_loop);

// Composes odometry steps from the origin.
std::vector<Pose2> dead_reckon(const std::vector<Pose2>& odometry);

// Between-factor error: measurement^-1 * (xi^-1 * xj), angle wrapped.
Eigen::Vector3d residual(const PoseEdge& edge, const Pose2& xi, const Pose2& xj);

// Residual plus d(residual)/d(xi) and d(residual)/d(xj) for the (x, y, theta)
// parametrisation.
struct EdgeLinearization {
  Eigen::Vector3d error;
  Eigen::Matrix3d jacobian_i;
  Eigen::Matrix3d jacobian_j;
};
EdgeLinearization linearize(const PoseEdge& edge, const Pose2& xi, const Pose2& xj);

struct RobustKernel {
  enum class Type { none, huber } type = Type::none;
  double delta = 1.0;

  static RobustKernel huber(double delta) { return {Type::huber, delta}; }
  // rho(s) for a squared Mahalanobis error s, and its derivative.
  double rho(double s) const;
  double weight(double s) const;
};

struct SolverConfig {
  std::size_t max_iters = 100;
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e12;
  double tol_dx = 1e-9;
  RobustKernel loop_kernel = RobustKernel::huber(1.0);
  RobustKernel odometry_kernel{};
};

struct IterationRecord {
  std::size_t iteration = 0;
  double cost = 0.0;      // cost after this iteration (unchanged when rejected)
  double decrease = 0.0;  // cost reduction of the tried step, summed per edge
  double lambda = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

enum class StopReason { converged, max_iterations, damping_overflow };

struct OptimizeResult {
  PoseGraph graph;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<IterationRecord> log;
  StopReason reason = StopReason::converged;
};

double total_cost(const PoseGraph& graph, const SolverConfig& config);

// Change in total cost when the vertices move from `before` to `after`
// (same ids), summed edge by edge from residual increments. Unlike the
// difference of two totals it stays accurate when the change is far below
// the rounding error of the total.
double cost_change(const PoseGraph& before, const PoseGraph& after, const SolverConfig& config);

// Levenberg-Marquardt with Marquardt (diagonal) damping over the free
// vertices. A step is accepted when cost_change is negative. Normal equations
// are assembled in edge order and solved with a sparse Cholesky factorisation
// under an AMD ordering.
OptimizeResult optimize(const PoseGraph& graph, const SolverConfig& config);

// g2o-style text: VERTEX_SE2, EDGE_SE2 (upper-triangular information), FIX.
// Values are written with 9 decimals. Edge kinds are not stored: an edge
// between consecutive ids reads back as odometry, anything else as loop.
std::string format_pose_graph(const PoseGraph& graph);
PoseGraph parse_pose_graph(const std::string& text);
void write_pose_graph(const PoseGraph& graph, const std::filesystem::path& path);
PoseGraph read_pose_graph(const std::filesystem::path& path);

}  // namespace topoloop
