#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/evaluation.hpp"
#include "topoloop/posegraph.hpp"

using namespace topoloop;

namespace {

PoseEdge edge(std::size_t i, std::size_t j, Pose2 m) {
  PoseEdge e;
  e.i = i;
  e.j = j;
  e.measurement = m;
  return e;
}

Pose2 random_pose(Rng& rng, double spread) {
  return {spread * rng.normal(), spread * rng.normal(), std::numbers::pi * (2 * rng.uniform() - 1)};
}

// Square of side 10 m, 10 steps per side, ending back on the start.
std::vector<Pose2> square_truth() {
  std::vector<Pose2> poses;
  Pose2 p;
  poses.push_back(p);
  for (int side = 0; side < 4; ++side) {
    for (int k = 0; k < 10; ++k) {
      p = compose(p, Pose2(1.0, 0.0, 0.0));
      poses.push_back(p);
    }
    p = compose(p, Pose2(0.0, 0.0, std::numbers::pi / 2));
    poses.back() = p;
  }
  return poses;
}

}  // namespace

TEST_CASE("residual examples") {
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const Pose2 xi = random_pose(rng, 5);
    const Pose2 m = random_pose(rng, 2);
    const auto r = residual(edge(0, 1, m), xi, compose(xi, m));
    CHECK(r.norm() < 1e-12);
    const auto r0 = residual(edge(0, 1, Pose2{}), xi, xi);
    CHECK(r0.norm() == 0.0);
  }
  const auto r = residual(edge(0, 1, Pose2(1, 0, 0)), Pose2{}, Pose2(1, 0, 0.1));
  CHECK(r(0) == doctest::Approx(0.0));
  CHECK(r(1) == doctest::Approx(0.0));
  CHECK(r(2) == doctest::Approx(0.1));
}

TEST_CASE("analytic jacobians match central differences") {
  Rng rng(2);
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const Pose2 xi = random_pose(rng, 10);
    const Pose2 xj = random_pose(rng, 10);
    // Keep the angular residual away from the +-pi seam.
    const Pose2 m(rng.normal(), rng.normal(), wrap_angle(xj.theta - xi.theta + 0.5 * rng.normal()));
    const auto e = edge(0, 1, m);
    const auto lin = linearize(e, xi, xj);
    for (int which = 0; which < 2; ++which) {
      for (int c = 0; c < 3; ++c) {
        Pose2 a = which == 0 ? xi : xj;
        Pose2 b = a;
        double* pa = c == 0 ? &a.x : c == 1 ? &a.y : &a.theta;
        double* pb = c == 0 ? &b.x : c == 1 ? &b.y : &b.theta;
        *pa += h;
        *pb -= h;
        const auto rp = which == 0 ? residual(e, a, xj) : residual(e, xi, a);
        const auto rm = which == 0 ? residual(e, b, xj) : residual(e, xi, b);
        const Eigen::Vector3d fd = (rp - rm) / (2 * h);
        const Eigen::Vector3d an = which == 0 ? lin.jacobian_i.col(c) : lin.jacobian_j.col(c);
        CHECK((fd - an).cwiseAbs().maxCoeff() <= 1e-5);
      }
    }
  }
}

TEST_CASE("build_graph structure") {
  const std::vector<Pose2> odo{{1, 0, 0}, {1, 0, 0.5}};
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const auto g = build_graph(odo, {}, I, I);
  CHECK(g.vertices.size() == 3);
  CHECK(g.edges.size() == 2);
  CHECK(g.fixed.count(0) == 1);
  CHECK(g.vertices.at(2).x == doctest::Approx(2.0));

  const LoopConstraint lc{{0, 2, 1.0}, Pose2{}};
  CHECK(build_graph(odo, {lc, lc}, I, I).edges.size() == 4);
  const LoopConstraint bad{{0, 7, 1.0}, Pose2{}};
  CHECK_THROWS_AS(build_graph(odo, {bad}, I, I), ConsistencyError);
  CHECK_THROWS_AS(build_graph(odo, {}, -I, I), ArgumentError);
}

TEST_CASE("noise-free graph is already optimal") {
  const auto truth = square_truth();
  const auto odo = [&] {
    std::vector<Pose2> o;
    for (std::size_t k = 1; k < truth.size(); ++k) o.push_back(between(truth[k - 1], truth[k]));
    return o;
  }();
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const auto g = build_graph(odo, {}, I, I);
  const auto r = optimize(g, {});
  CHECK(r.initial_cost < 1e-12);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    CHECK(r.graph.vertices.at(k).x == g.vertices.at(k).x);
    CHECK(r.graph.vertices.at(k).y == g.vertices.at(k).y);
  }
}

TEST_CASE("square loop with drift: one exact closure reduces APE, cost decreases") {
  const auto truth = square_truth();
  const std::size_t last = truth.size() - 1;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const double drift = 0.01 + 0.01 * rng.uniform();
    std::vector<Pose2> odo;
    for (std::size_t k = 1; k < truth.size(); ++k) {
      const Pose2 d = between(truth[k - 1], truth[k]);
      odo.push_back(compose(d, Pose2(0.01 * rng.normal(), 0.01 * rng.normal(), drift)));
    }
    const LoopConstraint lc{{0, last, 0.0}, between(truth[0], truth[last])};
    const auto g = build_graph(odo, {lc}, I * 100, I * 1000);
    SolverConfig cfg;
    cfg.loop_kernel = {};
    const auto r = optimize(g, cfg);
    const double before = ape(g.trajectory(), truth, false).mean;
    const double after = ape(r.graph.trajectory(), truth, false).mean;
    improved += after < before;
    double prev = r.initial_cost;
    for (const auto& rec : r.log) {
      if (!rec.accepted) continue;
      CHECK(rec.decrease > 0.0);
      CHECK(rec.cost <= prev);
      prev = rec.cost;
    }
    CHECK(r.final_cost < r.initial_cost);
    CHECK(r.graph.vertices.at(0) == g.vertices.at(0));
  }
  CHECK(improved == 20);
}

TEST_CASE("huber with a huge delta reproduces the plain solution") {
  const auto truth = square_truth();
  Rng rng(5);
  std::vector<Pose2> odo;
  for (std::size_t k = 1; k < truth.size(); ++k)
    odo.push_back(compose(between(truth[k - 1], truth[k]), Pose2(0.02 * rng.normal(), 0.02 * rng.normal(), 0.02)));
  const LoopConstraint lc{{0, truth.size() - 1, 0.0}, Pose2{}};
  const auto g = build_graph(odo, {lc}, Eigen::Matrix3d::Identity() * 50, Eigen::Matrix3d::Identity() * 50);
  SolverConfig plain;
  plain.loop_kernel = {};
  SolverConfig wide;
  wide.loop_kernel = RobustKernel::huber(1e9);
  const auto a = optimize(g, plain);
  const auto b = optimize(g, wide);
  for (const auto& [id, p] : a.graph.vertices) {
    const auto& q = b.graph.vertices.at(id);
    CHECK(std::abs(p.x - q.x) <= 1e-9);
    CHECK(std::abs(p.y - q.y) <= 1e-9);
    CHECK(std::abs(p.theta - q.theta) <= 1e-9);
  }
}

TEST_CASE("huber kernel values") {
  const auto k = RobustKernel::huber(2.0);
  CHECK(k.rho(1.0) == 1.0);
  CHECK(k.weight(1.0) == 1.0);
  CHECK(k.rho(16.0) == doctest::Approx(2 * 2 * 4 - 4));
  CHECK(k.weight(16.0) == doctest::Approx(0.5));
  CHECK(RobustKernel{}.rho(100.0) == 100.0);
}

TEST_CASE("validation errors") {
  PoseGraph g;
  g.vertices.emplace(0, Pose2{});
  g.vertices.emplace(1, Pose2{});
  g.edges.push_back(edge(0, 1, Pose2{}));
  CHECK_THROWS_AS(g.validate(), ConsistencyError);
  g.fixed.insert(0);
  g.validate();
  g.edges.push_back(edge(0, 5, Pose2{}));
  CHECK_THROWS_AS(g.validate(), ConsistencyError);
  g.edges.pop_back();
  g.edges[0].information(0, 0) = -1;
  CHECK_THROWS_AS(g.validate(), DataError);
}

TEST_CASE("g2o text round trip and edge kinds") {
  Rng rng(17);
  const std::vector<Pose2> odo{{1, 0, 0.1}, {1, 0.2, 0}, {0.5, 0, -0.3}};
  Eigen::Matrix3d info;
  info << 4, 0.5, 0.1, 0.5, 3, 0.2, 0.1, 0.2, 2;
  const auto g = build_graph(odo, {{{0, 3, 0.5}, Pose2(0.1, -0.2, 0.3)}}, info, Eigen::Matrix3d::Identity() * 9);
  const std::string text = format_pose_graph(g);
  const auto back = parse_pose_graph(text);
  CHECK(format_pose_graph(back) == text);
  REQUIRE(back.edges.size() == 4);
  CHECK(back.edges[0].kind == EdgeKind::odometry);
  CHECK(back.edges[3].kind == EdgeKind::loop);
  CHECK(back.edges[0].information.isApprox(info));
  CHECK(back.fixed == g.fixed);

  CHECK_THROWS_AS(parse_pose_graph("VERTEX_SE2 0 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_pose_graph("FOO 1\n"), ParseError);
  CHECK_THROWS_AS(parse_pose_graph("VERTEX_SE2 0 0 0 0\nVERTEX_SE2 0 1 1 0\nFIX 0\n"), ConsistencyError);
}

TEST_CASE("cost_change agrees with the difference of totals for large moves") {
  Rng rng(23);
  const auto truth = square_truth();
  std::vector<Pose2> odo;
  for (std::size_t k = 1; k < truth.size(); ++k)
    odo.push_back(compose(between(truth[k - 1], truth[k]), Pose2(0.05 * rng.normal(), 0.05 * rng.normal(), 0.03)));
  const auto g = build_graph(odo, {{{0, truth.size() - 1, 0.0}, Pose2(0.3, -0.2, 0.1)}}, Eigen::Matrix3d::Identity() * 20,
                             Eigen::Matrix3d::Identity() * 30);
  for (const SolverConfig& cfg : {SolverConfig{}, SolverConfig{.loop_kernel = {}}}) {
    for (int t = 0; t < 20; ++t) {
      PoseGraph moved = g;
      for (auto& [id, p] : moved.vertices)
        if (id != 0) p = Pose2(p.x + 0.1 * rng.normal(), p.y + 0.1 * rng.normal(), p.theta + 0.1 * rng.normal());
      const double direct = total_cost(moved, cfg) - total_cost(g, cfg);
      CHECK(cost_change(g, moved, cfg) == doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("cost_change resolves moves far below the rounding of the total") {
  const auto truth = square_truth();
  std::vector<Pose2> odo;
  for (std::size_t k = 1; k < truth.size(); ++k)
    odo.push_back(compose(between(truth[k - 1], truth[k]), Pose2(0.0, 0.0, 0.05)));
  // Large residuals: the total is ~1e5, its rounding step ~1e-11.
  const auto g = build_graph(odo, {{{0, truth.size() - 1, 0.0}, Pose2(5.0, 5.0, 1.0)}},
                             Eigen::Matrix3d::Identity() * 1000, Eigen::Matrix3d::Identity() * 1000);
  SolverConfig cfg;
  cfg.loop_kernel = {};
  REQUIRE(total_cost(g, cfg) > 1e4);
  // First-order oracle: dcost = 2 r^T Omega J dx for a tiny move of one coordinate.
  const std::size_t v = 17;
  const double h = 1e-10;
  for (int c = 0; c < 3; ++c) {
    double expect = 0.0;
    for (const auto& e : g.edges) {
      if (e.i != v && e.j != v) continue;
      const auto lin = linearize(e, g.vertices.at(e.i), g.vertices.at(e.j));
      const Eigen::Matrix3d& J = e.i == v ? lin.jacobian_i : lin.jacobian_j;
      expect += 2.0 * lin.error.dot(e.information * J.col(c)) * h;
    }
    PoseGraph moved = g;
    auto& p = moved.vertices.at(v);
    p = Pose2(p.x + (c == 0 ? h : 0), p.y + (c == 1 ? h : 0), p.theta + (c == 2 ? h : 0));
    // The applied move is the rounded one; compare relative to the gradient scale.
    CHECK(cost_change(g, moved, cfg) == doctest::Approx(expect).epsilon(1e-4));
  }
}
