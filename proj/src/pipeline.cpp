#include "topoloop/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "topoloop/dataset.hpp"
#include "topoloop/errors.hpp"
#include "topoloop/rng.hpp"

namespace topoloop {
namespace {

namespace fs = std::filesystem;

constexpr const char* kDescriptorsFile = "descriptors.tdsc";
constexpr const char* kPosesFile = "poses.txt";
constexpr const char* kOdometryFile = "odom.txt";
constexpr const char* kNoisyTrajFile = "traj_noisy.txt";
constexpr const char* kClustersFile = "clusters.csv";
constexpr const char* kElbowFile = "elbow.csv";
constexpr const char* kSequencesFile = "sequences.csv";
constexpr const char* kSeqDescFile = "seqdesc.tdsc";
constexpr const char* kCodebookFile = "codebook.tdsc";
constexpr const char* kSeqGraphFile = "seqgraph.csv";
constexpr const char* kTruthFile = "truth.csv";
constexpr const char* kPRFile = "pr.csv";
constexpr const char* kAPEFile = "ape.csv";
constexpr const char* kHistFile = "hist.csv";
constexpr const char* kSummaryFile = "summary.json";

constexpr double kDefaultRadius = 5.0;
constexpr double kOppositeDeg = 150.0;

const std::array<std::string_view, 2> kDetectors{kHierarchical, kBaseline};

fs::path loops_file(const fs::path& out, std::string_view label) {
  return out / ("loops_" + std::string(label) + ".csv");
}
fs::path traj_file(const fs::path& out, std::string_view label) { return out / ("traj_" + std::string(label) + ".txt"); }
fs::path log_file(const fs::path& out, std::string_view label) {
  return out / ("optimize_" + std::string(label) + ".csv");
}

std::string with_prefix(std::string_view stage, const std::exception& e) {
  return std::string(stage) + ": " + e.what();
}

template <typename F>
auto in_stage(std::string_view stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const FormatError& e) {
    throw FormatError(with_prefix(stage, e));
  } catch (const CorruptionError& e) {
    throw CorruptionError(with_prefix(stage, e));
  } catch (const EmptyDataError& e) {
    throw EmptyDataError(with_prefix(stage, e));
  } catch (const OrderingError& e) {
    throw OrderingError(with_prefix(stage, e));
  } catch (const ParseError& e) {
    throw ParseError(with_prefix(stage, e));
  } catch (const CanonicalizationError& e) {
    throw CanonicalizationError(with_prefix(stage, e));
  } catch (const ConsistencyError& e) {
    throw ConsistencyError(with_prefix(stage, e));
  } catch (const DataError& e) {
    throw DataError(with_prefix(stage, e));
  } catch (const ConfigError& e) {
    throw ConfigError(with_prefix(stage, e));
  } catch (const ArgumentError& e) {
    throw ArgumentError(with_prefix(stage, e));
  } catch (const NumericalError& e) {
    throw NumericalError(with_prefix(stage, e));
  } catch (const fs::filesystem_error& e) {
    throw DataError(with_prefix(stage, e));
  }
}

double ground_truth_radius(const ExperimentConfig& c) {
  return c.scenario ? c.scenario->ground_truth_radius : kDefaultRadius;
}

// Candidates are kept down to the bottom of the evaluation sweep so the PR
// curve can be drawn from the persisted pairs.
double candidate_threshold(const ExperimentConfig& c) {
  return std::clamp(std::min(c.detection.t_g, c.evaluation.threshold_lo), -1.0, 1.0);
}

Traversal load_traversal(const fs::path& out, bool need_poses) {
  DescriptorMatrix d = read_descriptors(out / kDescriptorsFile);
  normalize_rows(d);
  std::vector<Pose2> poses;
  if (fs::exists(out / kPosesFile)) {
    poses = read_poses(out / kPosesFile);
  } else if (need_poses) {
    throw DataError("ground-truth poses are required but " + (out / kPosesFile).string() + " is missing");
  }
  return Traversal(std::move(d), std::move(poses));
}

std::vector<LoopPair> above(const std::vector<LoopPair>& pairs, double threshold) {
  std::vector<LoopPair> out;
  for (const auto& p : pairs) {
    if (p.score >= threshold) out.push_back(p);
  }
  return out;
}

void stage_simulate(const ExperimentConfig& c, const fs::path& out) {
  fs::create_directories(out);
  if (c.scenario) {
    const ScenarioConfig& s = *c.scenario;
    const World world = make_world(s.place_specs(), s.dimension, s.n_view, derive_seed(c.seed, "world"));
    const Traversal trav =
        generate_traversal(world, s.waypoints(), s.steps_per_leg, s.descriptor_model(), derive_seed(c.seed, "traversal"));
    const auto odom = corrupt_odometry(trav, s.odometry_noise(), derive_seed(c.seed, "odometry"));
    write_descriptors(trav.descriptors(), out / kDescriptorsFile);
    write_poses(trav.poses(), out / kPosesFile);
    write_poses(odom, out / kOdometryFile);
    write_poses(dead_reckon(odom), out / kNoisyTrajFile);
    return;
  }
  const DatasetConfig& ds = *c.dataset;
  const fs::path desc_path = c.resolve(ds.descriptors);
  if (!fs::exists(desc_path)) throw ConfigError("dataset file not found: " + desc_path.string());
  DescriptorMatrix d = read_descriptors(desc_path);
  normalize_rows(d);
  write_descriptors(d, out / kDescriptorsFile);
  std::vector<Pose2> poses;
  if (!ds.poses.empty()) {
    poses = read_poses(c.resolve(ds.poses));
    if (poses.size() != d.rows()) throw ConsistencyError("dataset poses and descriptors disagree on N");
    write_poses(poses, out / kPosesFile);
  }
  std::vector<Pose2> odom;
  if (!ds.odometry.empty()) {
    odom = read_poses(c.resolve(ds.odometry));
    if (odom.size() + 1 != d.rows()) throw ConsistencyError("dataset odometry must have N-1 entries");
  } else if (!poses.empty()) {
    odom = true_odometry(poses);
  }
  if (!odom.empty()) {
    write_poses(odom, out / kOdometryFile);
    write_poses(dead_reckon(odom), out / kNoisyTrajFile);
  }
}

void stage_cluster(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, false);
  const std::size_t n = trav.size();
  const ClusteringConfig& cc = c.clustering;
  const KMeansOptions opts{cc.max_iters, cc.tol, cc.restarts};
  const std::uint64_t seed = derive_seed(c.seed, "cluster");
  if (cc.k > 0) {
    if (cc.k > n) throw ConfigError("clustering.k exceeds the number of frames");
    const Clustering cl = kmeans(trav.descriptors(), cc.k, seed, opts);
    fs::remove(out / kElbowFile);
    write_clusters(cl.labels, out / kClustersFile);
    return;
  }
  KRange range = default_k_range(n);
  if (cc.k_min > 0) range.k_min = cc.k_min;
  if (cc.k_max > 0) range.k_max = cc.k_max;
  if (range.k_min == 0 || range.k_min >= range.k_max || range.k_max > n) {
    throw ConfigError("clustering: k range [" + std::to_string(range.k_min) + ", " + std::to_string(range.k_max) +
                      "] is not usable for " + std::to_string(n) + " frames");
  }
  const ElbowResult elbow = elbow_select_k(trav.descriptors(), range.k_min, range.k_max, cc.tau_elbow, seed, opts);
  write_elbow(elbow, out / kElbowFile);
  write_clusters(elbow.clustering.labels, out / kClustersFile);
}

void stage_segment(const ExperimentConfig& c, const fs::path& out) {
  const DescriptorMatrix d = read_descriptors(out / kDescriptorsFile);
  const auto labels = read_clusters(out / kClustersFile);
  if (labels.size() != d.rows()) throw ConsistencyError("clusters.csv does not cover every frame");
  write_sequences(segment_sequences(labels, c.topology.min_len), out / kSequencesFile);
}

void stage_aggregate(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, false);
  auto seqs = read_sequences(out / kSequencesFile);
  const Aggregator method = parse_aggregator(c.topology.aggregator);
  AggregatorParams params;
  params.concat_length = c.topology.concat_length;
  Codebook codebook;
  if (method == Aggregator::vlad) {
    const std::size_t words = std::min(c.topology.vlad_words, trav.size());
    codebook = learn_codebook(trav.descriptors(), words, derive_seed(c.seed, "codebook"));
    write_descriptors(codebook.words, out / kCodebookFile);
    params.codebook = &codebook;
  } else {
    fs::remove(out / kCodebookFile);
  }
  aggregate_sequences(trav.descriptors(), seqs, method, params);
  write_sequence_descriptors(seqs, out / kSeqDescFile);
}

void stage_graph(const ExperimentConfig& c, const fs::path& out) {
  auto seqs = read_sequences(out / kSequencesFile);
  attach_sequence_descriptors(seqs, read_descriptors(out / kSeqDescFile));
  write_sequence_graph(build_sequence_graph(std::move(seqs), c.topology.t_s, c.topology.w_seq), out / kSeqGraphFile);
}

void stage_detect(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, false);
  SequenceGraph graph;
  graph.nodes = read_sequences(out / kSequencesFile);
  graph.edges = read_sequence_edges(out / kSeqGraphFile);
  DetectorConfig dc = c.detector();
  dc.t_g = candidate_threshold(c);
  const auto pairs = apply_exclusion_window(detect_hierarchical(trav, graph, dc), c.detection.w_frame);
  write_loop_pairs(pairs, loops_file(out, kHierarchical));
}

void stage_baseline(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, false);
  DetectorConfig dc = c.detector();
  dc.t_g = candidate_threshold(c);
  write_loop_pairs(detect_flat_baseline(trav, dc), loops_file(out, kBaseline));
}

void stage_truth(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, true);
  write_loop_pairs(ground_truth_pairs(trav, ground_truth_radius(c), c.detection.w_frame), out / kTruthFile);
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::damping_overflow: return "damping_overflow";
  }
  return "unknown";
}

std::string format_log(const OptimizeResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "# reason=%s iterations=%zu initial_cost=%.17g final_cost=%.17g\n",
                std::string(to_string(r.reason)).c_str(), r.log.size(), r.initial_cost, r.final_cost);
  std::string text = buf;
  text += "iteration,cost,decrease,lambda,step_norm,accepted\n";
  for (const auto& it : r.log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.6g,%.17g,%d\n", it.iteration, it.cost, it.decrease, it.lambda,
                  it.step_norm, it.accepted ? 1 : 0);
    text += buf;
  }
  return text;
}

void stage_optimize(const ExperimentConfig& c, const fs::path& out) {
  const Traversal trav = load_traversal(out, true);
  if (!fs::exists(out / kOdometryFile)) throw DataError("odometry is required but odom.txt is missing");
  const auto odom = read_poses(out / kOdometryFile);
  if (odom.size() + 1 != trav.size()) throw ConsistencyError("odometry must have N-1 entries");

  const double sigma_t = std::max(c.scenario ? c.scenario->sigma_t : 0.0, c.backend.min_sigma_t);
  const double sigma_r = std::max(c.scenario ? c.scenario->sigma_r : 0.0, c.backend.min_sigma_r);
  const double sigma_loop = c.scenario ? c.scenario->sigma_loop : 0.0;
  Eigen::Matrix3d info_odom = Eigen::Vector3d(1.0 / (sigma_t * sigma_t), 1.0 / (sigma_t * sigma_t),
                                              1.0 / (sigma_r * sigma_r)).asDiagonal();
  const Eigen::Matrix3d info_loop = c.backend.info_loop * Eigen::Matrix3d::Identity();
  const SolverConfig solver = c.solver();
  const std::uint64_t loop_seed = derive_seed(c.seed, "loops");

  for (std::string_view label : kDetectors) {
    std::vector<LoopConstraint> loops;
    for (const auto& p : above(read_loop_pairs(loops_file(out, label)), c.detection.t_g)) {
      const LoopMeasurement m = synthesize_loop_measurement(trav, p, ground_truth_radius(c), sigma_loop, loop_seed);
      if (!m.valid && c.backend.drop_invalid_loops) continue;
      loops.push_back({p, m.relative});
    }
    const PoseGraph graph = build_graph(odom, loops, info_odom, info_loop);
    const std::string name(label);
    write_pose_graph(graph, out / ("pg_" + name + "_init.g2o"));
    const OptimizeResult r = optimize(graph, solver);
    write_pose_graph(r.graph, out / ("pg_" + name + ".g2o"));
    write_poses(r.graph.trajectory(), traj_file(out, label));
    write_text_file(log_file(out, label), format_log(r));
  }
}

struct LogHeader {
  std::string reason;
  std::size_t iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

LogHeader read_log_header(const fs::path& path) {
  const std::string text = read_text_file(path);
  const std::string first = text.substr(0, text.find('\n'));
  if (first.rfind("# ", 0) != 0) throw FormatError(path.string() + ": missing optimizer header");
  LogHeader h;
  std::istringstream in(first.substr(2));
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(path.string() + ": bad header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "reason") h.reason = value;
    else if (key == "iterations") h.iterations = parse_index(value, path.string());
    else if (key == "initial_cost") h.initial_cost = parse_double(value, path.string());
    else if (key == "final_cost") h.final_cost = parse_double(value, path.string());
  }
  return h;
}

// Evaluation inputs shared by the eval stages and the summary.
struct Evaluated {
  std::vector<LabeledPR> pr;
  std::vector<LabeledHistogram> histograms;
  std::vector<std::vector<LoopPair>> predictions;
  std::vector<PRPoint> operating;
};

Evaluated evaluate_detectors(const ExperimentConfig& c, const fs::path& out, bool with_histograms) {
  const auto truth = read_loop_pairs(out / kTruthFile);
  const auto thresholds = c.thresholds();
  const MatchOptions match = c.match_options();
  std::vector<Pose2> poses;
  if (with_histograms) poses = read_poses(out / kPosesFile);
  Evaluated ev;
  for (std::string_view label : kDetectors) {
    auto preds = read_loop_pairs(loops_file(out, label));
    auto curve = pr_curve(preds, truth, thresholds, match);
    const PRPoint op = nearest_precision(curve, c.evaluation.precision_target);
    if (with_histograms) {
      ev.histograms.push_back(
          {std::string(label), rotation_histogram(above(preds, op.threshold), poses, c.evaluation.histogram_bins)});
    }
    ev.operating.push_back(op);
    ev.pr.push_back({std::string(label), std::move(curve)});
    ev.predictions.push_back(std::move(preds));
  }
  if (with_histograms) {
    ev.histograms.push_back({"truth", rotation_histogram(truth, poses, c.evaluation.histogram_bins)});
  }
  return ev;
}

std::vector<LabeledAPE> evaluate_trajectories(const ExperimentConfig& c, const fs::path& out) {
  const auto truth = read_poses(out / kPosesFile);
  const bool align = c.evaluation.align_first;
  std::vector<LabeledAPE> rows;
  rows.push_back({"noisy", ape(read_poses(out / kNoisyTrajFile), truth, align)});
  for (std::string_view label : kDetectors) {
    rows.push_back({std::string(label), ape(read_poses(traj_file(out, label)), truth, align)});
  }
  return rows;
}

void stage_eval_pr(const ExperimentConfig& c, const fs::path& out) {
  write_text_file(out / kPRFile, format_pr(evaluate_detectors(c, out, false).pr, c.match_options()));
}

void stage_eval_ape(const ExperimentConfig& c, const fs::path& out) {
  write_text_file(out / kAPEFile, format_ape(evaluate_trajectories(c, out)));
}

void stage_eval_hist(const ExperimentConfig& c, const fs::path& out) {
  write_text_file(out / kHistFile, format_histogram(evaluate_detectors(c, out, true).histograms));
}

nlohmann::ordered_json to_json(const APEReport& r) {
  return {{"min", r.min}, {"mean", r.mean}, {"max", r.max}, {"rmse", r.rmse}, {"aligned", r.aligned}};
}

nlohmann::ordered_json to_json(const PRPoint& p) {
  return {{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall},
          {"tp", p.tp},               {"fp", p.fp},               {"fn", p.fn}};
}

nlohmann::ordered_json to_json(const ExperimentSummary& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["frames"] = s.frames;
  j["clusters"] = s.clusters;
  j["sequences"] = s.sequences;
  j["graph_edges"] = s.graph_edges;
  j["truth_pairs"] = s.truth_pairs;
  j["match"] = s.match;
  j["ape_noisy"] = to_json(s.noisy);
  j["detectors"] = nlohmann::ordered_json::array();
  for (const auto& d : s.detectors) {
    j["detectors"].push_back({{"label", d.label},
                              {"candidates", d.candidates},
                              {"accepted", d.accepted},
                              {"invalid_loops", d.invalid_loops},
                              {"at_t_g", to_json(d.at_t_g)},
                              {"operating_point", to_json(d.operating)},
                              {"max_recall", d.max_recall},
                              {"histogram", d.histogram},
                              {"opposite_heading_pairs", d.opposite_mass},
                              {"ape", to_json(d.ape)},
                              {"iterations", d.iterations},
                              {"initial_cost", d.initial_cost},
                              {"final_cost", d.final_cost},
                              {"stop_reason", d.stop_reason}});
  }
  return j;
}

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::simulate: return "simulate";
    case Stage::cluster: return "cluster";
    case Stage::segment: return "segment";
    case Stage::aggregate: return "aggregate";
    case Stage::graph: return "graph";
    case Stage::detect: return "detect";
    case Stage::baseline: return "baseline";
    case Stage::truth: return "truth";
    case Stage::optimize: return "optimize";
    case Stage::eval_pr: return "eval-pr";
    case Stage::eval_ape: return "eval-ape";
    case Stage::eval_hist: return "eval-hist";
  }
  return "unknown";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::simulate, Stage::cluster,  Stage::segment,  Stage::aggregate,
                                         Stage::graph,    Stage::detect,   Stage::baseline, Stage::truth,
                                         Stage::optimize, Stage::eval_pr,  Stage::eval_ape, Stage::eval_hist};
  return stages;
}

Stage parse_stage(std::string_view name) {
  for (Stage s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw ArgumentError("unknown stage '" + std::string(name) + "'");
}

void run_stage(Stage stage, const ExperimentConfig& c, const fs::path& out) {
  in_stage(stage_name(stage), [&] {
    c.validate();
    switch (stage) {
      case Stage::simulate: return stage_simulate(c, out);
      case Stage::cluster: return stage_cluster(c, out);
      case Stage::segment: return stage_segment(c, out);
      case Stage::aggregate: return stage_aggregate(c, out);
      case Stage::graph: return stage_graph(c, out);
      case Stage::detect: return stage_detect(c, out);
      case Stage::baseline: return stage_baseline(c, out);
      case Stage::truth: return stage_truth(c, out);
      case Stage::optimize: return stage_optimize(c, out);
      case Stage::eval_pr: return stage_eval_pr(c, out);
      case Stage::eval_ape: return stage_eval_ape(c, out);
      case Stage::eval_hist: return stage_eval_hist(c, out);
    }
  });
}

const DetectorSummary& ExperimentSummary::detector(std::string_view label) const {
  for (const auto& d : detectors) {
    if (d.label == label) return d;
  }
  throw ArgumentError("no detector named '" + std::string(label) + "' in summary");
}

fs::path output_directory(const ExperimentConfig& config) { return fs::path(config.output_dir); }

ExperimentSummary summarize(const ExperimentConfig& c, const fs::path& out) {
  return in_stage("summary", [&] {
    ExperimentSummary s;
    s.name = c.name;
    s.seed = c.seed;
    s.match = describe(c.match_options());
    const Traversal trav = load_traversal(out, true);
    s.frames = trav.size();
    const auto labels = read_clusters(out / kClustersFile);
    s.clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    s.sequences = read_sequences(out / kSequencesFile).size();
    s.graph_edges = read_sequence_edges(out / kSeqGraphFile).size();
    const auto truth = read_loop_pairs(out / kTruthFile);
    s.truth_pairs = truth.size();

    const Evaluated ev = evaluate_detectors(c, out, true);
    const auto apes = evaluate_trajectories(c, out);
    s.noisy = apes.front().report;
    const double radius = ground_truth_radius(c);
    for (std::size_t k = 0; k < kDetectors.size(); ++k) {
      DetectorSummary d;
      d.label = std::string(kDetectors[k]);
      d.candidates = ev.predictions[k].size();
      const auto accepted = above(ev.predictions[k], c.detection.t_g);
      d.accepted = accepted.size();
      d.invalid_loops = static_cast<std::size_t>(std::count_if(accepted.begin(), accepted.end(), [&](const LoopPair& p) {
        return translation_distance(trav.poses()[p.i], trav.poses()[p.j]) > radius;
      }));
      d.at_t_g = pr_curve(ev.predictions[k], truth, {c.detection.t_g}, c.match_options()).front();
      d.operating = ev.operating[k];
      d.max_recall = max_recall(ev.pr[k].points);
      d.histogram = ev.histograms[k].counts;
      d.opposite_mass = histogram_mass_from(d.histogram, kOppositeDeg);
      d.ape = apes[k + 1].report;
      const LogHeader h = read_log_header(log_file(out, kDetectors[k]));
      d.iterations = h.iterations;
      d.initial_cost = h.initial_cost;
      d.final_cost = h.final_cost;
      d.stop_reason = h.reason;
      s.detectors.push_back(std::move(d));
    }
    return s;
  });
}

std::string format_summary(const ExperimentSummary& s) {
  std::ostringstream o;
  char buf[256];
  o << "experiment " << (s.name.empty() ? "(unnamed)" : s.name) << " seed=" << s.seed << "\n";
  o << "frames=" << s.frames << " clusters=" << s.clusters << " sequences=" << s.sequences
    << " graph_edges=" << s.graph_edges << " truth_pairs=" << s.truth_pairs << " match=" << s.match << "\n";
  std::snprintf(buf, sizeof buf, "ape noisy: mean=%.4f max=%.4f\n", s.noisy.mean, s.noisy.max);
  o << buf;
  for (const auto& d : s.detectors) {
    std::snprintf(buf, sizeof buf,
                  "%-12s accepted=%zu (invalid %zu)  P=%.3f R=%.3f at t_g  | op: t=%.2f P=%.3f R=%.3f  ape mean=%.4f "
                  "max=%.4f  [%s]\n",
                  d.label.c_str(), d.accepted, d.invalid_loops, d.at_t_g.precision, d.at_t_g.recall,
                  d.operating.threshold, d.operating.precision, d.operating.recall, d.ape.mean, d.ape.max,
                  d.stop_reason.c_str());
    o << buf;
  }
  return o.str();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.output_dir = output_directory(config);
  in_stage("setup", [&] { fs::create_directories(report.output_dir); });
  for (Stage s : all_stages()) run_stage(s, config, report.output_dir);
  report.summary = summarize(config, report.output_dir);
  in_stage("summary", [&] {
    write_text_file(report.output_dir / kSummaryFile, to_json(report.summary).dump(2) + "\n");
    for (const auto& entry : fs::directory_iterator(report.output_dir)) {
      if (entry.is_regular_file()) report.artifacts.push_back(entry.path());
    }
  });
  std::sort(report.artifacts.begin(), report.artifacts.end());
  return report;
}

ComparisonReport compare_detectors(const ExperimentConfig& config) {
  const ExperimentReport run = run_experiment(config);
  ComparisonReport r;
  r.summary = run.summary;
  in_stage("compare", [&] {
    Evaluated ev = evaluate_detectors(config, run.output_dir, true);
    r.pr = std::move(ev.pr);
    r.histograms = std::move(ev.histograms);
    r.ape = evaluate_trajectories(config, run.output_dir);
  });
  return r;
}

std::string format_comparison(const ComparisonReport& r) {
  std::ostringstream o;
  char buf[256];
  o << "match=" << r.summary.match << " truth_pairs=" << r.summary.truth_pairs << "\n";
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %8s %8s %8s %8s %9s %10s\n", "detector", "accepted", "op_thresh",
                "op_P", "op_R", "max_R", "150-180", "ape_mean", "ape_max");
  o << buf;
  for (const auto& d : r.summary.detectors) {
    std::snprintf(buf, sizeof buf, "%-14s %10zu %10.2f %8.3f %8.3f %8.3f %8zu %9.4f %10.4f\n", d.label.c_str(),
                  d.accepted, d.operating.threshold, d.operating.precision, d.operating.recall, d.max_recall,
                  d.opposite_mass, d.ape.mean, d.ape.max);
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %8s %8s %8s %8s %9.4f %10.4f\n", "noisy", "-", "-", "-", "-", "-",
                "-", r.summary.noisy.mean, r.summary.noisy.max);
  o << buf;
  return o.str();
}

}  // namespace topoloop
