#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "topoloop/config.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/pipeline.hpp"
#include "topoloop/plot.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", flags.seed, "root seed (overrides seed)");
}

topoloop::ExperimentConfig load(const CommonFlags& flags) {
  topoloop::ExperimentConfig c = topoloop::load_config(flags.config);
  if (!flags.out.empty()) c.output_dir = flags.out;
  if (flags.seed) c.seed = *flags.seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topoloop: topology-based hierarchical loop detection and pose-graph evaluation"};
  app.require_subcommand(1);
  CommonFlags flags;

  std::vector<std::pair<CLI::App*, topoloop::Stage>> stage_cmds;
  const std::pair<topoloop::Stage, const char*> stage_help[] = {
      {topoloop::Stage::simulate, "simulate (or ingest) a traversal: descriptors, poses, odometry"},
      {topoloop::Stage::cluster, "k-means over frame descriptors, elbow selection of k"},
      {topoloop::Stage::segment, "split the label stream into sequences"},
      {topoloop::Stage::aggregate, "compute sequence descriptors"},
      {topoloop::Stage::graph, "build the sequence similarity graph"},
      {topoloop::Stage::detect, "hierarchical loop detection over the sequence graph"},
      {topoloop::Stage::baseline, "flat all-pairs loop detection"},
      {topoloop::Stage::truth, "ground-truth loop pairs from poses"},
      {topoloop::Stage::optimize, "build and optimize pose graphs for both detectors"},
      {topoloop::Stage::eval_pr, "precision/recall sweep -> pr.csv"},
      {topoloop::Stage::eval_ape, "absolute pose error -> ape.csv"},
      {topoloop::Stage::eval_hist, "rotation-difference histograms -> hist.csv"},
  };
  for (const auto& [stage, help] : stage_help) {
    auto* cmd = app.add_subcommand(std::string(topoloop::stage_name(stage)), help);
    add_common(cmd, flags);
    stage_cmds.emplace_back(cmd, stage);
  }
  auto* run = app.add_subcommand("run", "run every stage and write summary.json");
  add_common(run, flags);
  auto* compare = app.add_subcommand("compare", "run everything and print both detectors side by side");
  add_common(compare, flags);
  auto* plot = app.add_subcommand("plot", "render pr.csv and trajectories to SVG");
  add_common(plot, flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& [cmd, stage] : stage_cmds) {
      if (!cmd->parsed()) continue;
      const auto config = load(flags);
      const auto out = topoloop::output_directory(config);
      topoloop::run_stage(stage, config, out);
      std::cout << topoloop::stage_name(stage) << ": ok (" << out.string() << ")\n";
      return 0;
    }
    if (run->parsed()) {
      const auto report = topoloop::run_experiment(load(flags));
      std::cout << topoloop::format_summary(report.summary);
      std::cout << report.artifacts.size() << " artifacts in " << report.output_dir.string() << "\n";
      return 0;
    }
    if (compare->parsed()) {
      std::cout << topoloop::format_comparison(topoloop::compare_detectors(load(flags)));
      return 0;
    }
    if (plot->parsed()) {
      std::filesystem::path dir = flags.out;
      if (dir.empty()) {
        if (flags.config.empty()) throw topoloop::ArgumentError("plot needs --out or --config");
        dir = topoloop::output_directory(load(flags));
      }
      for (const auto& p : topoloop::render_plots(dir)) std::cout << p.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return topoloop::exit_code_for(e);
  }
  return 1;
}
