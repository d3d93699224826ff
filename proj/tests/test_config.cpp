#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/config.hpp"
#include "topoloop/errors.hpp"

using namespace topoloop;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(TOPOLOOP_SOURCE_DIR) / "configs";

const char* kMinimal = R"({
  "version": 1,
  "name": "tiny",
  "scenario": {"places": [[0, 0], [10, 0]], "route": [0, 1, {"place": 0, "heading_deg": 90}]}
})";

}  // namespace

TEST_CASE("shipped configs load and round trip") {
  for (const char* name : {"figure8.json", "corridor.json", "grid.json"}) {
    CAPTURE(name);
    const auto c = load_config(kConfigs / name);
    CHECK(c.base_dir == kConfigs);
    const auto again = parse_config(serialize_config(c));
    CHECK(again == c);
    CHECK(serialize_config(again) == serialize_config(c));
  }
}

TEST_CASE("defaults fill omitted sections") {
  const auto c = parse_config(kMinimal);
  CHECK(c.name == "tiny");
  REQUIRE(c.scenario.has_value());
  CHECK(c.scenario->route.size() == 3);
  CHECK(c.scenario->route[2].heading_deg == 90.0);
  CHECK(c.topology.aggregator == "mean");
  CHECK(c.evaluation.match == "exact");
  const auto wps = c.scenario->waypoints();
  CHECK(*wps[2].heading == doctest::Approx(3.14159265358979 / 2));
  CHECK_FALSE(wps[0].heading.has_value());
}

TEST_CASE("strict parsing rejects bad input") {
  std::string unknown = kMinimal;
  unknown.replace(unknown.find("\"name\""), 6, "\"nmae\"");
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);

  std::string version = kMinimal;
  version.replace(version.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK_THROWS_AS(parse_config(version), ConfigError);

  std::string wrong_type = kMinimal;
  wrong_type.replace(wrong_type.find("\"tiny\""), 6, "17");
  CHECK_THROWS_AS(parse_config(wrong_type), ConfigError);

  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "name": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "name": "x",
    "scenario": {"places": [[0,0],[1,0]], "route": [0,1]},
    "topology": {"aggregator": "max"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "name": "x",
    "scenario": {"places": [[0,0],[1,0]], "route": [0,1]},
    "detection": {"t_g": 1.5}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config(kConfigs / "does-not-exist.json"), ConfigError);
}

TEST_CASE("derived solver and detector settings") {
  auto c = parse_config(kMinimal);
  c.backend.huber_delta = 0.0;
  CHECK(c.solver().loop_kernel.type == RobustKernel::Type::none);
  c.backend.huber_delta = 2.0;
  CHECK(c.solver().loop_kernel.type == RobustKernel::Type::huber);
  CHECK(c.solver().loop_kernel.delta == 2.0);
  const auto d = c.detector();
  CHECK(d.t_g == c.detection.t_g);
  CHECK(d.w_seq == c.topology.w_seq);
  CHECK(c.thresholds().size() == 201);
}
