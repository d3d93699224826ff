#include "topoloop/posegraph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <numbers>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "topoloop/errors.hpp"

namespace topoloop {
namespace {

bool is_spd(const Eigen::Matrix3d& m) {
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::Matrix3d> llt(m);
  return llt.info() == Eigen::Success;
}

Eigen::Matrix2d rot(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

const RobustKernel& kernel_for(const PoseEdge& e, const SolverConfig& config) {
  return e.kind == EdgeKind::loop ? config.loop_kernel : config.odometry_kernel;
}

double edge_cost(const PoseEdge& e, const Pose2& xi, const Pose2& xj, const SolverConfig& config) {
  const Eigen::Vector3d r = residual(e, xi, xj);
  return kernel_for(e, config).rho(r.dot(e.information * r));
}

double cost_of(const std::vector<PoseEdge>& edges, const std::vector<Pose2>& x,
               const std::vector<std::size_t>& slot, const SolverConfig& config) {
  double total = 0.0;
  for (const auto& e : edges) total += edge_cost(e, x[slot[e.i]], x[slot[e.j]], config);
  return total;
}

// Residual increment of one edge when xi -> xi2 and xj -> xj2, written so
// that every term is proportional to the motion.
Eigen::Vector3d residual_increment(const PoseEdge& e, const Pose2& xi, const Pose2& xj, const Pose2& xi2,
                                   const Pose2& xj2) {
  const double di = wrap_angle(xi2.theta - xi.theta);
  const double dj = wrap_angle(xj2.theta - xj.theta);
  const Eigen::Vector2d dt((xj2.x - xj.x) - (xi2.x - xi.x), (xj2.y - xj.y) - (xi2.y - xi.y));
  const Eigen::Vector2d span(xj.x - xi.x, xj.y - xi.y);
  const Eigen::Matrix2d ri_t = rot(xi.theta).transpose();
  const Eigen::Vector2d u = ri_t * (span + dt);
  const double h = std::sin(0.5 * di);
  Eigen::Matrix2d rot_minus_i;  // R(di)^T - I
  rot_minus_i << -2.0 * h * h, std::sin(di), -std::sin(di), -2.0 * h * h;
  Eigen::Vector3d d;
  d.head<2>() = rot(e.measurement.theta).transpose() * (rot_minus_i * u + ri_t * dt);
  d(2) = dj - di;
  return d;
}

double edge_cost_change(const PoseEdge& e, const Pose2& xi, const Pose2& xj, const Pose2& xi2, const Pose2& xj2,
                        const SolverConfig& config) {
  const Eigen::Vector3d r = residual(e, xi, xj);
  const Eigen::Vector3d d = residual_increment(e, xi, xj, xi2, xj2);
  const auto& k = kernel_for(e, config);
  // The angular residual wraps; near the seam fall back to direct evaluation.
  if (std::abs(r(2) + d(2)) > std::numbers::pi) return edge_cost(e, xi2, xj2, config) - edge_cost(e, xi, xj, config);
  const double s = r.dot(e.information * r);
  const double ds = d.dot(e.information * (2.0 * r + d));
  const double s2 = s + ds;
  if (k.type == RobustKernel::Type::none) return ds;
  const double d2 = k.delta * k.delta;
  if (s <= d2 && s2 <= d2) return ds;
  if (s > d2 && s2 > d2) return 2.0 * k.delta * ds / (std::sqrt(std::max(s2, 0.0)) + std::sqrt(s));
  return k.rho(std::max(s2, 0.0)) - k.rho(s);
}

double cost_change_of(const std::vector<PoseEdge>& edges, const std::vector<Pose2>& x, const std::vector<Pose2>& y,
                      const std::vector<std::size_t>& slot, const SolverConfig& config) {
  double total = 0.0;
  for (const auto& e : edges) {
    const std::size_t si = slot[e.i];
    const std::size_t sj = slot[e.j];
    if (x[si] == y[si] && x[sj] == y[sj]) continue;
    total += edge_cost_change(e, x[si], x[sj], y[si], y[sj], config);
  }
  return total;
}

}  // namespace

void PoseGraph::validate() const {
  if (fixed.empty()) throw ConsistencyError("pose graph has no fixed vertex");
  for (std::size_t id : fixed) {
    if (!vertices.contains(id)) throw ConsistencyError("fixed vertex " + std::to_string(id) + " does not exist");
  }
  for (const auto& e : edges) {
    if (!vertices.contains(e.i) || !vertices.contains(e.j)) {
      throw ConsistencyError("edge " + std::to_string(e.i) + "-" + std::to_string(e.j) + " references a missing vertex");
    }
    if (!is_spd(e.information)) {
      throw DataError("edge " + std::to_string(e.i) + "-" + std::to_string(e.j) + " information is not SPD");
    }
  }
}

std::vector<Pose2> PoseGraph::trajectory() const {
  std::vector<Pose2> out;
  out.reserve(vertices.size());
  for (const auto& [id, pose] : vertices) out.push_back(pose);
  return out;
}

std::vector<Pose2> dead_reckon(const std::vector<Pose2>& odometry) {
  std::vector<Pose2> poses{Pose2{}};
  poses.reserve(odometry.size() + 1);
  for (const auto& step : odometry) poses.push_back(compose(poses.back(), step));
  return poses;
}

PoseGraph build_graph(const std::vector<Pose2>& odometry, const std::vector<LoopConstraint>& loops,
                      const Eigen::Matrix3d& info_odom, const Eigen::Matrix3d& info_loop) {
  if (!is_spd(info_odom) || !is_spd(info_loop)) throw ArgumentError("information matrices must be SPD");
  PoseGraph g;
  const auto poses = dead_reckon(odometry);
  for (std::size_t k = 0; k < poses.size(); ++k) g.vertices.emplace(k, poses[k]);
  g.fixed.insert(0);
  for (std::size_t k = 0; k < odometry.size(); ++k) {
    g.edges.push_back({k, k + 1, odometry[k], info_odom, EdgeKind::odometry});
  }
  for (const auto& lc : loops) {
    if (lc.pair.i >= poses.size() || lc.pair.j >= poses.size()) {
      throw ConsistencyError("loop (" + std::to_string(lc.pair.i) + "," + std::to_string(lc.pair.j) +
                             ") references a frame outside the trajectory");
    }
    g.edges.push_back({lc.pair.i, lc.pair.j, lc.measurement, info_loop, EdgeKind::loop});
  }
  return g;
}

Eigen::Vector3d residual(const PoseEdge& edge, const Pose2& xi, const Pose2& xj) {
  const Pose2 err = between(edge.measurement, between(xi, xj));
  return {err.x, err.y, err.theta};
}

EdgeLinearization linearize(const PoseEdge& edge, const Pose2& xi, const Pose2& xj) {
  EdgeLinearization out;
  out.error = residual(edge, xi, xj);

  const Eigen::Matrix2d rz_t = rot(edge.measurement.theta).transpose();
  const Eigen::Matrix2d ri_t = rot(xi.theta).transpose();
  const double c = std::cos(xi.theta);
  const double s = std::sin(xi.theta);
  Eigen::Matrix2d dri_t;
  dri_t << -s, c, -c, -s;
  const Eigen::Vector2d dt(xj.x - xi.x, xj.y - xi.y);

  out.jacobian_i.setZero();
  out.jacobian_j.setZero();
  out.jacobian_i.topLeftCorner<2, 2>() = -rz_t * ri_t;
  out.jacobian_i.topRightCorner<2, 1>() = rz_t * dri_t * dt;
  out.jacobian_i(2, 2) = -1.0;
  out.jacobian_j.topLeftCorner<2, 2>() = rz_t * ri_t;
  out.jacobian_j(2, 2) = 1.0;
  return out;
}

double RobustKernel::rho(double s) const {
  if (type == Type::none || s <= delta * delta) return s;
  return 2.0 * delta * std::sqrt(s) - delta * delta;
}

double RobustKernel::weight(double s) const {
  if (type == Type::none || s <= delta * delta) return 1.0;
  return delta / std::sqrt(s);
}

double cost_change(const PoseGraph& before, const PoseGraph& after, const SolverConfig& config) {
  double total = 0.0;
  for (const auto& e : before.edges) {
    const Pose2& xi = before.vertices.at(e.i);
    const Pose2& xj = before.vertices.at(e.j);
    const Pose2& yi = after.vertices.at(e.i);
    const Pose2& yj = after.vertices.at(e.j);
    if (xi == yi && xj == yj) continue;
    total += edge_cost_change(e, xi, xj, yi, yj, config);
  }
  return total;
}

double total_cost(const PoseGraph& graph, const SolverConfig& config) {
  double total = 0.0;
  for (const auto& e : graph.edges) total += edge_cost(e, graph.vertices.at(e.i), graph.vertices.at(e.j), config);
  return total;
}

OptimizeResult optimize(const PoseGraph& graph, const SolverConfig& config) {
  graph.validate();
  if (config.lambda_factor <= 1.0 || config.lambda_init <= 0.0) {
    throw ArgumentError("solver: lambda_init must be > 0 and lambda_factor > 1");
  }

  // Dense slots for every vertex; free vertices also get a block column.
  std::vector<std::size_t> ids;
  std::vector<Pose2> x;
  std::unordered_map<std::size_t, std::size_t> slot_of;
  for (const auto& [id, pose] : graph.vertices) {
    slot_of.emplace(id, ids.size());
    ids.push_back(id);
    x.push_back(pose);
  }
  std::vector<std::size_t> slot(ids.empty() ? 0 : ids.back() + 1, 0);
  for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = k;

  constexpr std::size_t kFixed = static_cast<std::size_t>(-1);
  std::vector<std::size_t> column(ids.size(), kFixed);
  std::size_t free_count = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!graph.fixed.contains(ids[k])) column[k] = free_count++;
  }

  OptimizeResult result;
  result.graph = graph;
  double cost = cost_of(graph.edges, x, slot, config);
  result.initial_cost = cost;
  result.final_cost = cost;
  if (free_count == 0 || graph.edges.empty()) return result;

  const auto dim = static_cast<Eigen::Index>(3 * free_count);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> solver;
  bool analyzed = false;
  double lambda = config.lambda_init;
  result.reason = StopReason::max_iterations;

  for (std::size_t it = 0; it < config.max_iters; ++it) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 36 + 3 * free_count);
    Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);

    for (const auto& e : graph.edges) {
      const std::size_t si = slot[e.i];
      const std::size_t sj = slot[e.j];
      const EdgeLinearization lin = linearize(e, x[si], x[sj]);
      const double w = kernel_for(e, config).weight(lin.error.dot(e.information * lin.error));
      const Eigen::Matrix3d omega = w * e.information;
      const std::array<std::pair<std::size_t, const Eigen::Matrix3d*>, 2> blocks{
          {{column[si], &lin.jacobian_i}, {column[sj], &lin.jacobian_j}}};
      for (const auto& [ca, ja] : blocks) {
        if (ca == kFixed) continue;
        gradient.segment<3>(static_cast<Eigen::Index>(3 * ca)) += ja->transpose() * omega * lin.error;
        for (const auto& [cb, jb] : blocks) {
          if (cb == kFixed || cb > ca) continue;  // lower triangle only
          const Eigen::Matrix3d h = ja->transpose() * omega * (*jb);
          for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
              const auto row = static_cast<int>(3 * ca) + r;
              const auto col = static_cast<int>(3 * cb) + c;
              if (row < col) continue;
              triplets.emplace_back(row, col, h(r, c));
              if (row == col) diag(row) += h(r, c);
            }
          }
        }
      }
    }
    // Zero-valued diagonal triplets keep the sparsity pattern constant.
    const std::size_t base = triplets.size();
    for (Eigen::Index k = 0; k < dim; ++k) triplets.emplace_back(static_cast<int>(k), static_cast<int>(k), 0.0);
    const double diag_floor = 1e-12 * std::max(diag.maxCoeff(), 0.0);

    bool step_taken = false;
    while (!step_taken) {
      for (Eigen::Index k = 0; k < dim; ++k) {
        triplets[base + static_cast<std::size_t>(k)] =
            Eigen::Triplet<double>(static_cast<int>(k), static_cast<int>(k), lambda * (diag(k) + diag_floor));
      }
      Eigen::SparseMatrix<double> h(dim, dim);
      h.setFromTriplets(triplets.begin(), triplets.end());
      if (!analyzed) {
        solver.analyzePattern(h);
        analyzed = true;
      }
      solver.factorize(h);
      if (solver.info() != Eigen::Success) {
        lambda *= config.lambda_factor;
        if (lambda > config.lambda_max) {
          throw NumericalError("optimize: Cholesky failed at iteration " + std::to_string(it) +
                               " even with lambda = " + std::to_string(lambda));
        }
        continue;
      }
      const Eigen::VectorXd dx = solver.solve(-gradient);
      const double step_norm = dx.norm();

      if (!std::isfinite(step_norm)) throw NumericalError("optimize: non-finite step at iteration " + std::to_string(it));
      if (step_norm <= config.tol_dx) {
        result.reason = StopReason::converged;
        result.log.push_back({it, cost, 0.0, lambda, step_norm, false});
        step_taken = true;
        break;
      }

      std::vector<Pose2> candidate = x;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (column[k] == kFixed) continue;
        const auto o = static_cast<Eigen::Index>(3 * column[k]);
        candidate[k] = Pose2(x[k].x + dx(o), x[k].y + dx(o + 1), x[k].theta + dx(o + 2));
      }
      const double decrease = -cost_change_of(graph.edges, x, candidate, slot, config);
      if (decrease > 0.0) {
        x = std::move(candidate);
        cost = std::min(cost, cost_of(graph.edges, x, slot, config));
        lambda = std::max(lambda / config.lambda_factor, 1e-15);
        result.log.push_back({it, cost, decrease, lambda, step_norm, true});
      } else {
        lambda *= config.lambda_factor;
        result.log.push_back({it, cost, decrease, lambda, step_norm, false});
        if (lambda > config.lambda_max) result.reason = StopReason::damping_overflow;
      }
      step_taken = true;
    }
    if (result.reason == StopReason::converged || result.reason == StopReason::damping_overflow) break;
  }

  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (column[k] != kFixed) result.graph.vertices[ids[k]] = x[k];
  }
  result.final_cost = cost;
  return result;
}

// ---------------------------------------------------------------------------
// Text format

std::string format_pose_graph(const PoseGraph& graph) {
  std::string out;
  char buf[512];
  for (const auto& [id, p] : graph.vertices) {
    std::snprintf(buf, sizeof buf, "VERTEX_SE2 %zu %.9f %.9f %.9f\n", id, p.x, p.y, p.theta);
    out += buf;
  }
  for (std::size_t id : graph.fixed) out += "FIX " + std::to_string(id) + "\n";
  for (const auto& e : graph.edges) {
    const auto& m = e.measurement;
    const auto& I = e.information;
    std::snprintf(buf, sizeof buf, "EDGE_SE2 %zu %zu %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", e.i, e.j, m.x,
                  m.y, m.theta, I(0, 0), I(0, 1), I(0, 2), I(1, 1), I(1, 2), I(2, 2));
    out += buf;
  }
  return out;
}

PoseGraph parse_pose_graph(const std::string& text) {
  PoseGraph g;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    const std::string ctx = "pose graph line " + std::to_string(lineno);
    if (tok[0] == "VERTEX_SE2") {
      if (tok.size() != 5) throw ParseError(ctx + ": VERTEX_SE2 needs id x y theta");
      const std::size_t id = parse_index(tok[1], ctx);
      if (!g.vertices.emplace(id, Pose2(parse_double(tok[2], ctx), parse_double(tok[3], ctx), parse_double(tok[4], ctx))).second) {
        throw ConsistencyError(ctx + ": duplicate vertex " + std::to_string(id));
      }
    } else if (tok[0] == "EDGE_SE2") {
      if (tok.size() != 12) throw ParseError(ctx + ": EDGE_SE2 needs i j dx dy dtheta and 6 information entries");
      PoseEdge e;
      e.i = parse_index(tok[1], ctx);
      e.j = parse_index(tok[2], ctx);
      e.measurement = Pose2(parse_double(tok[3], ctx), parse_double(tok[4], ctx), parse_double(tok[5], ctx));
      double v[6];
      for (int k = 0; k < 6; ++k) v[k] = parse_double(tok[6 + k], ctx);
      e.information << v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5];
      e.kind = (e.j == e.i + 1 || e.i == e.j + 1) ? EdgeKind::odometry : EdgeKind::loop;
      g.edges.push_back(e);
    } else if (tok[0] == "FIX") {
      if (tok.size() < 2) throw ParseError(ctx + ": FIX needs an id");
      for (std::size_t k = 1; k < tok.size(); ++k) g.fixed.insert(parse_index(tok[k], ctx));
    } else {
      throw ParseError(ctx + ": unknown record '" + tok[0] + "'");
    }
  }
  g.validate();
  return g;
}

void write_pose_graph(const PoseGraph& graph, const std::filesystem::path& path) {
  write_text_file(path, format_pose_graph(graph));
}

PoseGraph read_pose_graph(const std::filesystem::path& path) { return parse_pose_graph(read_text_file(path)); }

}  // namespace topoloop
