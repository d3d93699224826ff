#include "topoloop/config.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <set>

#include "json.hpp"
#include "topoloop/errors.hpp"

namespace topoloop {
namespace {

using nlohmann::ordered_json;

// Reads one object and complains about any key it did not consume.
class Reader {
 public:
  Reader(const ordered_json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.contains(k)) throw ConfigError(where_ + ": unknown field '" + k + "'");
    }
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const ordered_json& at(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(where_ + ": missing field '" + key + "'");
    return obj_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      const auto& v = obj_.at(key);
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where_ + ": field '" + key + "' has the wrong type");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const ordered_json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

ScenarioConfig parse_scenario(const ordered_json& j) {
  ScenarioConfig s;
  Reader r(j, "scenario");
  const auto& places = r.at("places");
  if (!places.is_array()) throw ConfigError("scenario.places must be an array of [x, y]");
  for (const auto& p : places) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ConfigError("scenario.places entries must be [x, y]");
    }
    s.places.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  const auto& route = r.at("route");
  if (!route.is_array()) throw ConfigError("scenario.route must be an array");
  for (const auto& step : route) {
    RouteStep rs;
    if (step.is_number_unsigned()) {
      rs.place = step.get<std::size_t>();
    } else if (step.is_object()) {
      Reader sr(step, "scenario.route[]");
      sr.get("place", rs.place);
      if (sr.has("heading_deg")) {
        double h = 0.0;
        sr.get("heading_deg", h);
        rs.heading_deg = h;
      }
    } else {
      throw ConfigError("scenario.route entries must be place ids or {place, heading_deg}");
    }
    s.route.push_back(rs);
  }
  r.get("steps_per_leg", s.steps_per_leg);
  r.get("dimension", s.dimension);
  r.get("alpha", s.alpha);
  r.get("beta", s.beta);
  r.get("sigma_d", s.sigma_d);
  r.get("n_view", s.n_view);
  r.get("sigma_t", s.sigma_t);
  r.get("sigma_r", s.sigma_r);
  r.get("sigma_loop", s.sigma_loop);
  r.get("ground_truth_radius", s.ground_truth_radius);
  return s;
}

ordered_json dump_scenario(const ScenarioConfig& s) {
  ordered_json j;
  j["places"] = ordered_json::array();
  for (const auto& [x, y] : s.places) j["places"].push_back({x, y});
  j["route"] = ordered_json::array();
  for (const auto& rs : s.route) {
    if (rs.heading_deg) {
      j["route"].push_back({{"place", rs.place}, {"heading_deg", *rs.heading_deg}});
    } else {
      j["route"].push_back(rs.place);
    }
  }
  j["steps_per_leg"] = s.steps_per_leg;
  j["dimension"] = s.dimension;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["sigma_d"] = s.sigma_d;
  j["n_view"] = s.n_view;
  j["sigma_t"] = s.sigma_t;
  j["sigma_r"] = s.sigma_r;
  j["sigma_loop"] = s.sigma_loop;
  j["ground_truth_radius"] = s.ground_truth_radius;
  return j;
}

}  // namespace

std::vector<PlaceSpec> ScenarioConfig::place_specs() const {
  std::vector<PlaceSpec> out;
  for (const auto& [x, y] : places) out.push_back({x, y});
  return out;
}

std::vector<Waypoint> ScenarioConfig::waypoints() const {
  std::vector<Waypoint> out;
  for (const auto& rs : route) {
    Waypoint w{rs.place, std::nullopt};
    if (rs.heading_deg) w.heading = *rs.heading_deg * std::numbers::pi / 180.0;
    out.push_back(w);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (version != kConfigVersion) throw ConfigError("unsupported config version " + std::to_string(version));
  if (scenario.has_value() == dataset.has_value()) throw ConfigError("config needs exactly one of 'scenario' or 'dataset'");
  if (scenario) {
    if (scenario->places.size() < 2) throw ConfigError("scenario needs at least 2 places");
    if (scenario->route.size() < 2) throw ConfigError("scenario route needs at least 2 waypoints");
    for (const auto& rs : scenario->route) {
      if (rs.place >= scenario->places.size()) throw ConfigError("route references unknown place " + std::to_string(rs.place));
    }
    if (scenario->steps_per_leg == 0) throw ConfigError("steps_per_leg must be >= 1");
    if (scenario->dimension == 0) throw ConfigError("dimension must be >= 1");
    if (!(scenario->alpha > 0.0) || scenario->beta < 0.0 || scenario->sigma_d < 0.0) {
      throw ConfigError("descriptor model needs alpha > 0, beta >= 0, sigma_d >= 0");
    }
    if (scenario->n_view == 0 || scenario->n_view > scenario->dimension) throw ConfigError("n_view must lie in [1, dimension]");
    if (scenario->sigma_t < 0.0 || scenario->sigma_r < 0.0 || scenario->sigma_loop < 0.0) {
      throw ConfigError("noise parameters must be >= 0");
    }
    if (scenario->ground_truth_radius < 0.0) throw ConfigError("ground_truth_radius must be >= 0");
  }
  if (dataset && dataset->descriptors.empty()) throw ConfigError("dataset.descriptors is required");
  if (clustering.k_max != 0 && clustering.k_min >= clustering.k_max) throw ConfigError("clustering: k_min must be < k_max");
  if (clustering.restarts == 0 || clustering.max_iters == 0) throw ConfigError("clustering: restarts and max_iters must be >= 1");
  try {
    (void)parse_aggregator(topology.aggregator);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (topology.min_len == 0 || topology.concat_length == 0 || topology.vlad_words == 0) {
    throw ConfigError("topology: min_len, concat_length and vlad_words must be >= 1");
  }
  if (topology.t_s < -1.0 || topology.t_s > 1.0) throw ConfigError("topology.t_s must lie in [-1, 1]");
  if (detection.t_g < -1.0 || detection.t_g > 1.0) throw ConfigError("detection.t_g must lie in [-1, 1]");
  if (!(backend.info_loop > 0.0) || !(backend.min_sigma_t > 0.0) || !(backend.min_sigma_r > 0.0)) {
    throw ConfigError("backend: info_loop and noise floors must be > 0");
  }
  if (!(backend.lambda_init > 0.0) || !(backend.lambda_factor > 1.0) || backend.max_iters == 0) {
    throw ConfigError("backend: need lambda_init > 0, lambda_factor > 1, max_iters >= 1");
  }
  if (evaluation.match != "exact" && evaluation.match != "tolerance") {
    throw ConfigError("evaluation.match must be 'exact' or 'tolerance'");
  }
  if (!(evaluation.threshold_step > 0.0) || evaluation.threshold_hi < evaluation.threshold_lo) {
    throw ConfigError("evaluation: threshold sweep needs step > 0 and hi >= lo");
  }
  if (evaluation.histogram_bins == 0) throw ConfigError("evaluation.histogram_bins must be >= 1");
}

DetectorConfig ExperimentConfig::detector() const {
  return {topology.t_s, detection.t_g, detection.w_frame, topology.w_seq};
}

SolverConfig ExperimentConfig::solver() const {
  SolverConfig s;
  s.max_iters = backend.max_iters;
  s.lambda_init = backend.lambda_init;
  s.lambda_factor = backend.lambda_factor;
  s.tol_dx = backend.tol_dx;
  s.loop_kernel = backend.huber_delta > 0.0 ? RobustKernel::huber(backend.huber_delta) : RobustKernel{};
  s.odometry_kernel = backend.robust_odometry && backend.huber_delta > 0.0 ? RobustKernel::huber(backend.huber_delta)
                                                                           : RobustKernel{};
  return s;
}

MatchOptions ExperimentConfig::match_options() const {
  return {evaluation.match == "tolerance" ? MatchMode::tolerance : MatchMode::exact, evaluation.w_tol};
}

std::vector<double> ExperimentConfig::thresholds() const {
  return threshold_sweep(evaluation.threshold_lo, evaluation.threshold_hi, evaluation.threshold_step);
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  {
    Reader r(j, "config");
    if (!r.has("version")) throw ConfigError("config: missing 'version'");
    r.get("version", c.version);
    if (c.version != kConfigVersion) throw ConfigError("unsupported config version " + std::to_string(c.version));
    r.get("name", c.name);
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    if (r.has("scenario")) c.scenario = parse_scenario(r.at("scenario"));
    if (r.has("dataset")) {
      Reader d(r.at("dataset"), "dataset");
      DatasetConfig ds;
      d.get("descriptors", ds.descriptors);
      d.get("poses", ds.poses);
      d.get("odometry", ds.odometry);
      c.dataset = ds;
    }
    if (r.has("clustering")) {
      Reader s(r.at("clustering"), "clustering");
      s.get("k", c.clustering.k);
      s.get("k_min", c.clustering.k_min);
      s.get("k_max", c.clustering.k_max);
      s.get("tau_elbow", c.clustering.tau_elbow);
      s.get("restarts", c.clustering.restarts);
      s.get("max_iters", c.clustering.max_iters);
      s.get("tol", c.clustering.tol);
    }
    if (r.has("topology")) {
      Reader s(r.at("topology"), "topology");
      s.get("aggregator", c.topology.aggregator);
      s.get("concat_length", c.topology.concat_length);
      s.get("vlad_words", c.topology.vlad_words);
      s.get("min_len", c.topology.min_len);
      s.get("t_s", c.topology.t_s);
      s.get("w_seq", c.topology.w_seq);
    }
    if (r.has("detection")) {
      Reader s(r.at("detection"), "detection");
      s.get("t_g", c.detection.t_g);
      s.get("w_frame", c.detection.w_frame);
    }
    if (r.has("backend")) {
      Reader s(r.at("backend"), "backend");
      s.get("info_loop", c.backend.info_loop);
      s.get("min_sigma_t", c.backend.min_sigma_t);
      s.get("min_sigma_r", c.backend.min_sigma_r);
      s.get("drop_invalid_loops", c.backend.drop_invalid_loops);
      s.get("max_iters", c.backend.max_iters);
      s.get("lambda_init", c.backend.lambda_init);
      s.get("lambda_factor", c.backend.lambda_factor);
      s.get("tol_dx", c.backend.tol_dx);
      s.get("huber_delta", c.backend.huber_delta);
      s.get("robust_odometry", c.backend.robust_odometry);
    }
    if (r.has("evaluation")) {
      Reader s(r.at("evaluation"), "evaluation");
      s.get("threshold_lo", c.evaluation.threshold_lo);
      s.get("threshold_hi", c.evaluation.threshold_hi);
      s.get("threshold_step", c.evaluation.threshold_step);
      s.get("match", c.evaluation.match);
      s.get("w_tol", c.evaluation.w_tol);
      s.get("histogram_bins", c.evaluation.histogram_bins);
      s.get("precision_target", c.evaluation.precision_target);
      s.get("align_first", c.evaluation.align_first);
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig c = parse_config(text);
  c.base_dir = path.parent_path();
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  ordered_json j;
  j["version"] = c.version;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  if (c.scenario) j["scenario"] = dump_scenario(*c.scenario);
  if (c.dataset) {
    j["dataset"] = {{"descriptors", c.dataset->descriptors}, {"poses", c.dataset->poses}, {"odometry", c.dataset->odometry}};
  }
  const auto& k = c.clustering;
  j["clustering"] = {{"k", k.k},           {"k_min", k.k_min},         {"k_max", k.k_max}, {"tau_elbow", k.tau_elbow},
                     {"restarts", k.restarts}, {"max_iters", k.max_iters}, {"tol", k.tol}};
  const auto& t = c.topology;
  j["topology"] = {{"aggregator", t.aggregator}, {"concat_length", t.concat_length}, {"vlad_words", t.vlad_words},
                   {"min_len", t.min_len},       {"t_s", t.t_s},                     {"w_seq", t.w_seq}};
  j["detection"] = {{"t_g", c.detection.t_g}, {"w_frame", c.detection.w_frame}};
  const auto& b = c.backend;
  j["backend"] = {{"info_loop", b.info_loop},
                  {"min_sigma_t", b.min_sigma_t},
                  {"min_sigma_r", b.min_sigma_r},
                  {"drop_invalid_loops", b.drop_invalid_loops},
                  {"max_iters", b.max_iters},
                  {"lambda_init", b.lambda_init},
                  {"lambda_factor", b.lambda_factor},
                  {"tol_dx", b.tol_dx},
                  {"huber_delta", b.huber_delta},
                  {"robust_odometry", b.robust_odometry}};
  const auto& e = c.evaluation;
  j["evaluation"] = {{"threshold_lo", e.threshold_lo},
                     {"threshold_hi", e.threshold_hi},
                     {"threshold_step", e.threshold_step},
                     {"match", e.match},
                     {"w_tol", e.w_tol},
                     {"histogram_bins", e.histogram_bins},
                     {"precision_target", e.precision_target},
                     {"align_first", e.align_first}};
  return j.dump(2) + "\n";
}

}  // namespace topoloop
