#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/dataset.hpp"
#include "topoloop/errors.hpp"

using namespace topoloop;
using testutil::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string header(const char* magic, std::uint32_t version, std::uint32_t n, std::uint32_t d) {
  std::string s(magic, 4);
  for (std::uint32_t v : {version, n, d})
    for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  return s;
}

std::string f32(float x) {
  std::uint32_t u;
  std::memcpy(&u, &x, 4);
  std::string s;
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
  return s;
}

}  // namespace

TEST_CASE("hand-built tdsc file reads back as a 2x3 matrix") {
  TempDir dir("tdsc");
  std::string bytes = header("TDSC", 1, 2, 3);
  for (float x : {1.f, 0.f, 0.f, 0.f, 1.f, 0.f}) bytes += f32(x);
  write_bytes(dir / "m.tdsc", bytes);
  const auto m = read_descriptors(dir / "m.tdsc");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 1.0);
  CHECK(m(0, 1) == 0.0);
}

TEST_CASE("tdsc round trip is bit-identical for float-representable values") {
  TempDir dir("tdsc");
  Rng rng(3);
  DescriptorMatrix m(7, 5);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c) m(r, c) = static_cast<float>(rng.normal());
  write_descriptors(m, dir / "a.tdsc");
  CHECK(read_descriptors(dir / "a.tdsc") == m);
}

TEST_CASE("tdsc error paths") {
  TempDir dir("tdsc");
  write_bytes(dir / "magic.tdsc", header("XXXX", 1, 1, 1) + f32(1.f));
  CHECK_THROWS_AS(read_descriptors(dir / "magic.tdsc"), FormatError);
  write_bytes(dir / "short.tdsc", header("TDSC", 1, 2, 2) + f32(1.f));
  CHECK_THROWS_AS(read_descriptors(dir / "short.tdsc"), CorruptionError);
  write_bytes(dir / "empty.tdsc", header("TDSC", 1, 0, 4));
  CHECK_THROWS_AS(read_descriptors(dir / "empty.tdsc"), EmptyDataError);
  write_bytes(dir / "ver.tdsc", header("TDSC", 2, 1, 1) + f32(1.f));
  CHECK_THROWS_AS(read_descriptors(dir / "ver.tdsc"), FormatError);
  CHECK_THROWS_AS(read_descriptors(dir / "missing.tdsc"), DataError);
}

TEST_CASE("pose text parsing") {
  const auto p = parse_poses("0 1.0 2.0 0.0\n");
  REQUIRE(p.size() == 1);
  CHECK(p[0] == Pose2(1.0, 2.0, 0.0));

  const auto w = parse_poses("0 0 0 3.5\n");
  CHECK(w[0].theta == doctest::Approx(3.5 - 2 * std::numbers::pi));
  CHECK(w[0].theta == doctest::Approx(-2.7832).epsilon(1e-4));

  CHECK_THROWS_AS(parse_poses("0 0 0 0\n2 0 0 0\n"), OrderingError);
  CHECK_THROWS_AS(parse_poses("0 a 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_poses("0 0 0\n"), ParseError);
}

TEST_CASE("pose files round trip") {
  TempDir dir("poses");
  Rng rng(5);
  std::vector<Pose2> poses;
  for (int i = 0; i < 50; ++i) poses.emplace_back(rng.normal() * 100, rng.normal() * 100, rng.normal() * 3);
  write_poses(poses, dir / "p.txt");
  CHECK(read_poses(dir / "p.txt") == poses);
}

TEST_CASE("loop pair csv") {
  CHECK(format_loop_pairs({{3, 17, 0.912345}}) == "i,j,score\n3,17,0.912345\n");
  CHECK_THROWS_AS(parse_loop_pairs("i,j,score\n5,5,1.0\n"), CanonicalizationError);
  CHECK_THROWS_AS(parse_loop_pairs("i,j,score\n6,5,1.0\n"), CanonicalizationError);

  Rng rng(9);
  std::vector<LoopPair> pairs;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = rng.index(1000);
    pairs.push_back({i, i + 1 + rng.index(1000), std::round(rng.uniform() * 1e6) / 1e6});
  }
  CHECK(parse_loop_pairs(format_loop_pairs(pairs)) == pairs);
}

TEST_CASE("make_loop_pair orders and sort_and_dedupe keeps first score") {
  CHECK(make_loop_pair(9, 2, 0.5) == LoopPair{2, 9, 0.5});
  CHECK_THROWS_AS(make_loop_pair(4, 4, 0.5), ArgumentError);
  std::vector<LoopPair> v{{2, 5, 0.1}, {1, 3, 0.2}, {2, 5, 0.9}};
  sort_and_dedupe(v);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == LoopPair{1, 3, 0.2});
  CHECK(v[1] == LoopPair{2, 5, 0.1});
}

TEST_CASE("traversal invariants") {
  DescriptorMatrix m(3, 2);
  CHECK_THROWS_AS(Traversal(m, std::vector<Pose2>(2)), ConsistencyError);
  CHECK_THROWS_AS(Traversal(DescriptorMatrix{}), EmptyDataError);
  Traversal t(m, std::vector<Pose2>(3));
  CHECK(t.frame(2).pose.has_value());
  CHECK_THROWS_AS(t.frame(3), ArgumentError);
}

TEST_CASE("normalize_rows leaves zero rows alone") {
  auto m = testutil::matrix({{3, 4}, {0, 0}});
  normalize_rows(m);
  CHECK(m(0, 0) == doctest::Approx(0.6));
  CHECK(m(0, 1) == doctest::Approx(0.8));
  CHECK(m(1, 0) == 0.0);
}
