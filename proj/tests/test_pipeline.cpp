#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "topoloop/config.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/loopdetect.hpp"
#include "topoloop/pipeline.hpp"
#include "topoloop/plot.hpp"
#include "topoloop/simulator.hpp"

using namespace topoloop;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(TOPOLOOP_SOURCE_DIR) / "configs";

ExperimentConfig corridor(const fs::path& out) {
  auto c = load_config(kConfigs / "corridor.json");
  c.output_dir = out.string();
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_text_file(e.path());
  return files;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TOPOLOOP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("stage names round trip") {
  for (Stage s : all_stages()) CHECK(parse_stage(stage_name(s)) == s);
  CHECK(stage_name(Stage::eval_pr) == "eval-pr");
  CHECK_THROWS_AS(parse_stage("nope"), ArgumentError);
}

TEST_CASE("same config and seed give byte-identical output directories") {
  testutil::TempDir a("run_a"), b("run_b");
  const auto ra = run_experiment(corridor(a.path()));
  const auto rb = run_experiment(corridor(b.path()));
  const auto sa = snapshot(a.path());
  const auto sb = snapshot(b.path());
  CHECK(sa.size() == ra.artifacts.size());
  CHECK(sa.count("summary.json") == 1);
  CHECK(sa == sb);

  auto other = corridor(b.path());
  other.seed = 1;
  run_experiment(other);
  CHECK(snapshot(b.path()) != sa);
}

TEST_CASE("rerunning one stage reproduces its artifacts") {
  testutil::TempDir dir("stage");
  const auto cfg = corridor(dir.path());
  run_experiment(cfg);
  const auto before = snapshot(dir.path());
  for (Stage s : {Stage::graph, Stage::detect, Stage::optimize, Stage::eval_pr}) run_stage(s, cfg, dir.path());
  CHECK(snapshot(dir.path()) == before);
}

TEST_CASE("stage without its inputs fails with a prefixed data error") {
  testutil::TempDir dir("empty");
  const auto cfg = corridor(dir.path());
  try {
    run_stage(Stage::cluster, cfg, dir.path());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("cluster: ", 0) == 0);
  }
}

TEST_CASE("hierarchical pairs link frames of different, connected sequences") {
  testutil::TempDir dir("hier");
  const auto cfg = corridor(dir.path());
  run_experiment(cfg);
  const auto seqs = read_sequences(dir / "sequences.csv");
  const auto edges = read_sequence_edges(dir / "seqgraph.csv");
  const auto pairs = read_loop_pairs(dir / "loops_hierarchical.csv");
  REQUIRE(!pairs.empty());
  auto seq_of = [&](std::size_t f) -> long {
    for (const auto& s : seqs)
      if (s.contains(f)) return static_cast<long>(s.id);
    return -1;
  };
  for (const auto& p : pairs) {
    const long a = seq_of(p.i);
    const long b = seq_of(p.j);
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    CHECK(a != b);
    bool linked = false;
    for (const auto& e : edges)
      linked = linked || (static_cast<long>(e.p) == std::min(a, b) && static_cast<long>(e.q) == std::max(a, b));
    CHECK(linked);
    CHECK(p.j - p.i > cfg.detection.w_frame);
  }
}

TEST_CASE("corridor: same-heading revisits, both detectors reduce APE") {
  testutil::TempDir dir("corr");
  const auto rep = run_experiment(corridor(dir.path()));
  const auto& s = rep.summary;
  for (const char* label : {"hierarchical", "baseline"}) {
    const auto& d = s.detector(label);
    CHECK(d.invalid_loops == 0);
    CHECK(d.accepted > 0);
    CHECK(d.ape.mean < 0.5 * s.noisy.mean);
    CHECK(d.opposite_mass == 0);
  }
}

TEST_CASE("hierarchical detector over a complete singleton graph equals the flat baseline") {
  const auto world = make_world({{0, 0}, {8, 0}, {8, 8}}, 32, 8, 3);
  DescriptorModel m;
  m.beta = 0.5;
  m.sigma_d = 0.2;
  const auto t = generate_traversal(world, {{0, {}}, {1, {}}, {2, {}}, {0, {}}, {1, {}}}, 6, m, 4);
  std::vector<std::size_t> labels(t.size());
  for (std::size_t f = 0; f < t.size(); ++f) labels[f] = f;
  auto seqs = segment_sequences(labels, 1);
  for (auto& s : seqs) s.descriptor = {1.0};
  const auto graph = build_sequence_graph(seqs, -1.0, 0);
  CHECK(graph.edges.size() == t.size() * (t.size() - 1) / 2);
  DetectorConfig cfg;
  cfg.t_g = 0.3;
  cfg.w_frame = 4;
  const auto h = apply_exclusion_window(detect_hierarchical(t, graph, cfg), cfg.w_frame);
  const auto b = detect_flat_baseline(t, cfg);
  REQUIRE(h.size() == b.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    CHECK(h[k].i == b[k].i);
    CHECK(h[k].j == b[k].j);
    CHECK(h[k].score == doctest::Approx(b[k].score).epsilon(1e-12));
  }
}

TEST_CASE("cli exit codes") {
  testutil::TempDir dir("cli");
  const std::string cfg = (kConfigs / "corridor.json").string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("cluster") == 2);
  CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"version": 3, "name": "x"})";
  }
  CHECK(run_cli("simulate --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("cluster --config " + cfg + " --out " + (dir / "nothing").string()) == 3);
  CHECK(run_cli("simulate --config " + cfg + " --out " + (dir / "sim").string() + " --seed 4") == 0);
  CHECK(fs::exists(dir / "sim" / "descriptors.tdsc"));
}

TEST_CASE("without a view term both detectors agree at confident thresholds") {
  testutil::TempDir dir("beta0");
  auto cfg = load_config(kConfigs / "figure8.json");
  cfg.output_dir = dir.path().string();
  cfg.scenario->beta = 0.0;
  run_experiment(cfg);
  const auto curves = parse_pr(read_text_file(dir / "pr.csv"));
  REQUIRE(curves.size() == 2);
  const auto& h = curves[0].label == "hierarchical" ? curves[0].points : curves[1].points;
  const auto& b = curves[0].label == "hierarchical" ? curves[1].points : curves[0].points;
  REQUIRE(h.size() == b.size());
  // Below ~0.5 the baseline still scores pairs the sequence graph never links.
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k].threshold < 0.5) continue;
    CAPTURE(h[k].threshold);
    CHECK(std::abs(h[k].precision - b[k].precision) <= 0.05);
    CHECK(std::abs(h[k].recall - b[k].recall) <= 0.05);
  }
}

TEST_CASE("plot renders svg files from a run") {
  testutil::TempDir dir("plot");
  run_experiment(corridor(dir.path()));
  const auto files = render_plots(dir.path());
  CHECK(files.size() == 2);
  for (const auto& f : files) CHECK(read_text_file(f).rfind("<svg", 0) == 0);
  testutil::TempDir empty("plot_empty");
  CHECK_THROWS_AS(render_plots(empty.path()), DataError);
}
