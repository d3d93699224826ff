#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/loopdetect.hpp"

using namespace topoloop;

namespace {

Sequence span(std::size_t id, std::size_t start, std::size_t end) {
  Sequence s;
  s.id = id;
  s.start = start;
  s.end = end;
  return s;
}

DetectorConfig detector(double t_g, std::size_t w_frame) {
  DetectorConfig c;
  c.t_g = t_g;
  c.w_frame = w_frame;
  return c;
}

}  // namespace

TEST_CASE("hierarchical detector with no edges finds nothing") {
  Traversal t(testutil::matrix({{1, 0}, {1, 0}, {1, 0}}));
  SequenceGraph g;
  g.nodes = {span(0, 0, 0), span(1, 1, 2)};
  CHECK(detect_hierarchical(t, g, detector(0.0, 0)).empty());
}

TEST_CASE("one edge between lengths 2 and 3 with identical frames gives all 6 pairs") {
  Traversal t(testutil::matrix({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}}));
  SequenceGraph g;
  g.nodes = {span(0, 0, 1), span(1, 2, 4)};
  g.edges = {{0, 1, 1.0}};
  const auto pairs = detect_hierarchical(t, g, detector(0.5, 0));
  REQUIRE(pairs.size() == 6);
  for (const auto& p : pairs) {
    CHECK(p.i < 2);
    CHECK(p.j >= 2);
    CHECK(p.score == doctest::Approx(1.0));
  }
}

TEST_CASE("hierarchical keeps exactly the cross pairs at or above t_g") {
  // Frames 0,1 against 2,3,4 with chosen angles; oracle is the direct cosine.
  const double ang[5] = {0.0, 0.3, std::acos(0.95), std::acos(0.85), std::acos(0.75)};
  std::vector<std::vector<double>> rows;
  for (double a : ang) rows.push_back({std::cos(a), std::sin(a)});
  Traversal t(testutil::matrix(rows));
  SequenceGraph g;
  g.nodes = {span(0, 0, 1), span(1, 2, 4)};
  g.edges = {{0, 1, 0.9}};
  const auto pairs = detect_hierarchical(t, g, detector(0.8, 0));
  std::vector<LoopPair> expect;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 2; j < 5; ++j) {
      const double c = testutil::plain_cosine(rows[i], rows[j]);
      if (c >= 0.8) expect.push_back({i, j, c});
    }
  REQUIRE(pairs.size() == expect.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CHECK(pairs[k].i == expect[k].i);
    CHECK(pairs[k].j == expect[k].j);
    CHECK(pairs[k].score == doctest::Approx(expect[k].score));
  }
  CHECK(expect.size() == 5);
}

TEST_CASE("hierarchical rejects sequences outside the traversal") {
  Traversal t(testutil::matrix({{1, 0}, {0, 1}}));
  SequenceGraph g;
  g.nodes = {span(0, 0, 0), span(1, 1, 5)};
  g.edges = {{0, 1, 0.5}};
  CHECK_THROWS_AS(detect_hierarchical(t, g, detector(0.5, 0)), ConsistencyError);
}

TEST_CASE("flat baseline examples") {
  Traversal ortho(testutil::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  CHECK(detect_flat_baseline(ortho, detector(0.1, 0)).empty());

  Traversal same(testutil::matrix({{2, 1}, {2, 1}, {2, 1}}));
  const auto p = detect_flat_baseline(same, detector(0.9, 0));
  REQUIRE(p.size() == 3);
  CHECK((p[0].i == 0 && p[0].j == 1));
  CHECK((p[1].i == 0 && p[1].j == 2));
  CHECK((p[2].i == 1 && p[2].j == 2));
}

TEST_CASE("flat baseline agrees with all-pairs enumeration") {
  Rng rng(12);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(testutil::random_unit(64, rng));
  rows[90] = rows[10];
  Traversal t(testutil::matrix(rows));
  const auto got = detect_flat_baseline(t, detector(0.9, 5));
  std::vector<LoopPair> expect;
  for (std::size_t j = 0; j < 100; ++j)
    for (std::size_t i = 0; i + 5 < j; ++i) {
      const double c = testutil::plain_cosine(rows[i], rows[j]);
      if (c >= 0.9) expect.push_back({i, j, c});
    }
  REQUIRE(got.size() == expect.size());
  bool has = false;
  for (std::size_t k = 0; k < got.size(); ++k) {
    CHECK(got[k].i == expect[k].i);
    CHECK(got[k].j == expect[k].j);
    has = has || (got[k].i == 10 && got[k].j == 90);
  }
  CHECK(has);
}

TEST_CASE("ground truth pairs") {
  std::vector<Pose2> line;
  for (int i = 0; i < 100; ++i) line.emplace_back(i, 0, 0);
  Traversal straight(DescriptorMatrix(100, 1), line);
  CHECK(ground_truth_pairs(straight, 5.0, 10).empty());

  // Square of side 4 m, 4 frames per side, walked twice.
  std::vector<Pose2> sq;
  for (int lap = 0; lap < 2; ++lap)
    for (int side = 0; side < 4; ++side)
      for (int k = 0; k < 4; ++k) {
        const double s = k;
        const double xy[4][2] = {{s, 0}, {4, s}, {4 - s, 4}, {0, 4 - s}};
        sq.emplace_back(xy[side][0], xy[side][1], 0);
      }
  Traversal loop(DescriptorMatrix(sq.size(), 1), sq);
  const auto r0 = ground_truth_pairs(loop, 0.0, 10);
  REQUIRE(r0.size() == 16);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(r0[k].i == k);
    CHECK(r0[k].j == k + 16);
    CHECK(r0[k].score == 0.0);
  }
  const auto r1 = ground_truth_pairs(loop, 1.0, 10);
  CHECK(r1.size() > r0.size());
  for (const auto& p : r1) CHECK(translation_distance(sq[p.i], sq[p.j]) <= 1.0);

  Traversal nopose(DescriptorMatrix(3, 1));
  CHECK_THROWS_AS(ground_truth_pairs(nopose, 1.0, 0), ArgumentError);
}

TEST_CASE("exclusion window drops near pairs") {
  const auto kept = apply_exclusion_window({{0, 3, 1}, {0, 4, 1}, {2, 9, 1}}, 3);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].j == 4);
}
