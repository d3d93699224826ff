#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/topology.hpp"

using namespace topoloop;

namespace {

std::vector<std::size_t> expand(const std::vector<Sequence>& seqs) {
  std::vector<std::size_t> out;
  for (const auto& s : seqs)
    for (std::size_t f = s.start; f <= s.end; ++f) out.push_back(s.cluster);
  return out;
}

Sequence seq_with(std::size_t id, std::size_t start, std::size_t end, std::vector<double> desc) {
  Sequence s;
  s.id = id;
  s.start = start;
  s.end = end;
  s.descriptor = std::move(desc);
  return s;
}

}  // namespace

TEST_CASE("segmentation examples") {
  const std::vector<std::size_t> a{0, 0, 1, 1, 0};
  const auto s = segment_sequences(a, 1);
  REQUIRE(s.size() == 3);
  CHECK((s[0].start == 0 && s[0].end == 1 && s[0].cluster == 0));
  CHECK((s[1].start == 2 && s[1].end == 3 && s[1].cluster == 1));
  CHECK((s[2].start == 4 && s[2].end == 4 && s[2].cluster == 0));

  const std::vector<std::size_t> same(9, 4);
  for (std::size_t m = 1; m <= 9; ++m) CHECK(segment_sequences(same, m).size() == 1);

  const std::vector<std::size_t> alt{0, 1, 0, 1};
  CHECK(segment_sequences(alt, 2).empty());
  CHECK_THROWS_AS(segment_sequences(std::vector<std::size_t>{}, 1), ArgumentError);
}

TEST_CASE("segmentation is a maximal partition on random streams") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.index(200);
    const std::size_t k = 1 + rng.index(10);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.index(k);
    const auto s = segment_sequences(labels, 1);
    CHECK(expand(s) == labels);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      CHECK(s[i].end + 1 == s[i + 1].start);
      CHECK(s[i].cluster != s[i + 1].cluster);
      CHECK(s[i].id == i);
    }
  }
}

TEST_CASE("mean aggregation") {
  const auto same = testutil::matrix({{3, 4}, {3, 4}, {3, 4}});
  const auto v = aggregate_sequence(same, Aggregator::mean, {});
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));

  const auto m = aggregate_sequence(testutil::matrix({{1, 0}, {0, 1}}), Aggregator::mean, {});
  CHECK(m[0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(m[1] == doctest::Approx(0.70711).epsilon(1e-5));

  // Order-invariant.
  const auto r = aggregate_sequence(testutil::matrix({{0, 1}, {1, 0}}), Aggregator::mean, {});
  CHECK(r == m);
  CHECK_THROWS_AS(aggregate_sequence(DescriptorMatrix{}, Aggregator::mean, {}), ArgumentError);
}

TEST_CASE("concat_cap truncates and pads with the last row") {
  AggregatorParams p;
  p.concat_length = 3;
  const auto v = aggregate_sequence(testutil::matrix({{1, 0}, {0, 1}}), Aggregator::concat_cap, p);
  REQUIRE(v.size() == 6);
  const double s = 1.0 / std::sqrt(3.0);
  const std::vector<double> expect{s, 0, 0, s, 0, s};
  for (std::size_t i = 0; i < 6; ++i) CHECK(v[i] == doctest::Approx(expect[i]));

  const auto t = aggregate_sequence(testutil::matrix({{1, 0}, {0, 1}, {1, 0}, {5, 5}}), Aggregator::concat_cap, p);
  const auto u = aggregate_sequence(testutil::matrix({{1, 0}, {0, 1}, {1, 0}}), Aggregator::concat_cap, p);
  CHECK(t == u);
  CHECK(aggregated_dimension(Aggregator::concat_cap, 2, p) == 6);
}

TEST_CASE("vlad residuals and the zero-residual fallback") {
  Codebook cb{testutil::matrix({{1, 0}, {0, 1}})};
  AggregatorParams p;
  p.codebook = &cb;
  CHECK(aggregated_dimension(Aggregator::vlad, 2, p) == 4);

  // A single row equal to its word: residual vanishes, falls back to the mean
  // result placed in that word's block.
  const auto f = aggregate_sequence(testutil::matrix({{0, 1}}), Aggregator::vlad, p);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == doctest::Approx(0.0));
  CHECK(f[3] == doctest::Approx(1.0));

  // Unit rows near word 0 only: residual sum lives in the first block.
  const double a = 0.1, b = 0.35;
  const auto g = aggregate_sequence(testutil::matrix({{std::cos(a), std::sin(a)}, {std::cos(b), std::sin(b)}}),
                                    Aggregator::vlad, p);
  const double rx = std::cos(a) + std::cos(b) - 2.0;
  const double ry = std::sin(a) + std::sin(b);
  const double n = std::hypot(rx, ry);
  CHECK(g[0] == doctest::Approx(rx / n));
  CHECK(g[1] == doctest::Approx(ry / n));
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);

  CHECK_THROWS_AS(aggregate_sequence(testutil::matrix({{1, 0}}), Aggregator::vlad, {}), ArgumentError);
}

TEST_CASE("aggregator names") {
  CHECK(parse_aggregator("mean") == Aggregator::mean);
  CHECK(parse_aggregator("concat_cap") == Aggregator::concat_cap);
  CHECK(parse_aggregator("vlad") == Aggregator::vlad);
  CHECK_THROWS_AS(parse_aggregator("max"), ArgumentError);
  CHECK(to_string(Aggregator::vlad) == "vlad");
}

TEST_CASE("cosine examples") {
  const std::vector<double> a{3, 4};
  CHECK(cosine_similarity(a, a) == 1.0);
  const std::vector<double> x{1, 0}, y{0, 1}, xy{1, 1};
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(cosine_similarity(xy, x) == doctest::Approx(0.7071068));
  const std::vector<double> z{0, 0}, three{1, 2, 3};
  CHECK_THROWS_AS(cosine_similarity(z, x), ArgumentError);
  CHECK_THROWS_AS(cosine_similarity(three, x), ArgumentError);
}

TEST_CASE("graph from cosines 0.95, 0.40, 0.40") {
  // u at 0, v at acos(0.95), w placed so that <u,w> = <v,w> = 0.40 using a
  // third axis.
  const double a = std::acos(0.95);
  const std::vector<double> u{1, 0, 0};
  const std::vector<double> v{std::cos(a), std::sin(a), 0};
  // w = (p, q, r) with p = 0.4, p cos a + q sin a = 0.4, |w| = 1.
  const double p = 0.4;
  const double q = (0.4 - p * std::cos(a)) / std::sin(a);
  const std::vector<double> w{p, q, std::sqrt(1 - p * p - q * q)};
  CHECK(testutil::plain_cosine(u, v) == doctest::Approx(0.95));
  CHECK(testutil::plain_cosine(u, w) == doctest::Approx(0.40));
  CHECK(testutil::plain_cosine(v, w) == doctest::Approx(0.40));

  const auto g = build_sequence_graph({seq_with(0, 0, 4, u), seq_with(1, 20, 24, v), seq_with(2, 40, 44, w)}, 0.9, 10);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].p == 0);
  CHECK(g.edges[0].q == 1);
}

TEST_CASE("complete and empty graphs") {
  std::vector<Sequence> same, ortho;
  for (std::size_t i = 0; i < 5; ++i) {
    same.push_back(seq_with(i, 20 * i, 20 * i + 3, {1, 1, 0, 0, 0}));
    std::vector<double> e(5, 0.0);
    e[i] = 1.0;
    ortho.push_back(seq_with(i, 20 * i, 20 * i + 3, e));
  }
  CHECK(build_sequence_graph(same, 0.9, 10).edges.size() == 10);
  CHECK(build_sequence_graph(ortho, 0.5, 10).edges.empty());
  // Adjacent sequences are 16 frames apart, so w_seq = 17 unlinks only them.
  CHECK(build_sequence_graph(same, 0.9, 17).edges.size() == 6);
  CHECK(build_sequence_graph(same, 0.9, 16).edges.size() == 10);

  auto mixed = same;
  mixed[2].descriptor = {1, 0};
  CHECK_THROWS_AS(build_sequence_graph(mixed, 0.5, 0), ArgumentError);
}

TEST_CASE("frame gap counts frames strictly between") {
  const auto a = seq_with(0, 0, 4, {1});
  const auto b = seq_with(1, 10, 12, {1});
  CHECK(frame_gap(a, b) == 5);
  CHECK(frame_gap(b, a) == 5);
  CHECK(frame_gap(a, seq_with(2, 5, 6, {1})) == 0);
}

TEST_CASE("graph symmetry, clamp and t_s monotonicity on random sets") {
  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    const std::size_t P = 2 + rng.index(12);
    const std::size_t d = 2 + rng.index(6);
    std::vector<Sequence> seqs;
    for (std::size_t i = 0; i < P; ++i) seqs.push_back(seq_with(i, 12 * i, 12 * i + 1, testutil::random_unit(d, rng)));
    auto rev = seqs;
    std::reverse(rev.begin(), rev.end());
    for (std::size_t i = 0; i < P; ++i) rev[i].id = i;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = 0; q < P; ++q) {
        const double c = cosine_similarity(seqs[p].descriptor, seqs[q].descriptor);
        CHECK(c == cosine_similarity(seqs[q].descriptor, seqs[p].descriptor));
        CHECK(c <= 1.0);
        CHECK(c >= -1.0);
      }
    const double lo = rng.uniform() * 2 - 1;
    const double hi = lo + rng.uniform() * (1 - lo);
    const auto glo = build_sequence_graph(seqs, lo, 5);
    const auto ghi = build_sequence_graph(seqs, hi, 5);
    std::set<std::pair<std::size_t, std::size_t>> elo;
    for (const auto& e : glo.edges) elo.insert({e.p, e.q});
    for (const auto& e : ghi.edges) CHECK(elo.count({e.p, e.q}) == 1);
    // Reversed enumeration order gives the same edges up to relabelling.
    const auto grev = build_sequence_graph(rev, lo, 5);
    std::set<std::pair<std::size_t, std::size_t>> erev;
    for (const auto& e : grev.edges) erev.insert({std::min(P - 1 - e.p, P - 1 - e.q), std::max(P - 1 - e.p, P - 1 - e.q)});
    CHECK(erev == elo);
  }
}

TEST_CASE("sequence files round trip") {
  testutil::TempDir dir("seq");
  const auto seqs = segment_sequences(std::vector<std::size_t>{0, 0, 1, 1, 1, 2, 2}, 2);
  write_sequences(seqs, dir / "s.csv");
  CHECK(read_sequences(dir / "s.csv") == seqs);
}
