#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/error.hpp"
#include "roiedge/features.hpp"
#include "roiedge/oracle.hpp"
#include "roiedge/policy.hpp"
#include "roiedge/roi.hpp"

namespace roiedge {

enum class F1Mode { kPerFrame, kGlobal };

// Everything one run needs, as read from a single JSON file. Relative paths
// are resolved against base_dir (the config file's directory).
struct RunConfig {
  std::uint64_t seed = 1;

  struct Scenario {
    std::int64_t frames = 60;
    int fps = 30;
    std::int64_t width = 3840;
    std::int64_t height = 2160;
    std::string ground_truth;  // JSONL; empty = no objects
    std::string frames_dir;    // frame_%05d.ppm; empty = render from ground truth
    std::uint64_t render_seed = 11;
  } scenario;

  ExtractorConfig extractor{};

  struct Cam {
    std::string weights;  // (K, C, 1) tensor; empty = calibrate in-process
    std::uint64_t calibration_seed = 101;
    int calibration_frames = 12;
    Aggregation aggregation = Aggregation::kMax;
  } cam;

  struct Layout {
    double top_fraction = 0.5;
    double center_fraction = 0.5;
  } layout;

  RoiConfig roi{};
  PolicyConfig policy{};

  struct Oracle {
    OracleModel model{};
    bool merge_duplicates = true;
    F1Mode f1_mode = F1Mode::kPerFrame;
  } oracle;

  struct Link {
    double loss_rate = 0.0;
    std::string bandwidth_trace;             // JSONL {t, bps}
    std::optional<double> bandwidth_mbps = 50.0;  // constant trace, used when no file is given
    std::string edge_trace;                  // JSONL {t, g_max, base_latency_ms}
    double g_max = 1.0;                      // constant edge trace fallback
    double base_latency_ms = 10.0;
  } link;

  struct Sweep {
    std::vector<double> bandwidths_mbps{100, 90, 80, 70, 60, 50, 40, 30, 20};
  } sweep;

  std::filesystem::path base_dir = ".";

  std::filesystem::path resolve(const std::string& p) const {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  void validate() const {
    if (scenario.frames <= 0) throw ConfigError("scenario.frames must be > 0");
    if (scenario.fps <= 0) throw ConfigError("scenario.fps must be > 0");
    if (scenario.width <= 0 || scenario.height <= 0) throw ConfigError("scenario dimensions must be > 0");
    extractor.validate();
    if (scenario.width < extractor.stride() || scenario.height < extractor.stride())
      throw ConfigError("frame is smaller than the feature stride");
    if (cam.calibration_frames < 1) throw ConfigError("cam.calibration_frames must be >= 1");
    if (!(layout.top_fraction > 0 && layout.top_fraction < 1)) throw ConfigError("layout.top_fraction must be in (0, 1)");
    if (!(layout.center_fraction > 0 && layout.center_fraction <= 1))
      throw ConfigError("layout.center_fraction must be in (0, 1]");
    roi.validate();
    policy.validate();
    oracle.model.validate();
    if (!(link.loss_rate >= 0 && link.loss_rate <= 1)) throw ConfigError("link.loss_rate must be in [0, 1]");
    if (link.bandwidth_mbps && !(*link.bandwidth_mbps >= 0)) throw ConfigError("link.bandwidth_mbps must be >= 0");
    if (!(link.g_max >= 0) || !(link.base_latency_ms >= 0)) throw ConfigError("link edge values must be >= 0");
    for (double b : sweep.bandwidths_mbps)
      if (!(b > 0)) throw ConfigError("sweep bandwidths must be > 0");
  }
};

namespace detail {

// Reads fields out of a JSON object and remembers which keys were used so
// leftovers can be reported as unknown.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(label(key) + ": " + e.what());
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  // Nested section; absent sections read as empty objects.
  StrictObject section(const char* key) {
    seen_.insert(key);
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return StrictObject(j_.contains(key) ? j_.at(key) : kEmpty, label(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + label(k.c_str()) + "'");
  }

  std::string label(const char* key = nullptr) const {
    if (key == nullptr) return path_.empty() ? "config" : path_;
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "sum") return Aggregation::kSum;
  throw ConfigError("cam.aggregation must be 'max' or 'sum'");
}

inline Solver parse_solver(const std::string& s) {
  if (s == "hill_climb") return Solver::kHillClimb;
  if (s == "brute_force") return Solver::kBruteForce;
  throw ConfigError("policy.solver must be 'hill_climb' or 'brute_force'");
}

inline F1Mode parse_f1_mode(const std::string& s) {
  if (s == "per_frame") return F1Mode::kPerFrame;
  if (s == "global") return F1Mode::kGlobal;
  throw ConfigError("oracle.f1_mode must be 'per_frame' or 'global'");
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  RunConfig c;
  c.base_dir = base_dir;
  detail::StrictObject root(j, "");
  root.get("seed", c.seed);
  {
    auto s = root.section("scenario");
    s.get("frames", c.scenario.frames);
    s.get("fps", c.scenario.fps);
    s.get("width", c.scenario.width);
    s.get("height", c.scenario.height);
    s.get("ground_truth", c.scenario.ground_truth);
    s.get("frames_dir", c.scenario.frames_dir);
    s.get("render_seed", c.scenario.render_seed);
    s.finish();
  }
  {
    auto s = root.section("extractor");
    s.get("seed", c.extractor.seed);
    s.get("widths", c.extractor.widths);
    s.get("pools", c.extractor.pools);
    s.finish();
  }
  {
    auto s = root.section("cam");
    std::string agg = "max";
    s.get("weights", c.cam.weights);
    s.get("calibration_seed", c.cam.calibration_seed);
    s.get("calibration_frames", c.cam.calibration_frames);
    s.get("aggregation", agg);
    c.cam.aggregation = detail::parse_aggregation(agg);
    s.finish();
  }
  {
    auto s = root.section("layout");
    s.get("top_fraction", c.layout.top_fraction);
    s.get("center_fraction", c.layout.center_fraction);
    s.get("include_top_parts", c.roi.include_top_parts);
    s.finish();
  }
  {
    auto s = root.section("roi");
    s.get("heat_threshold", c.roi.heat_threshold);
    s.get("pad", c.roi.pad);
    s.get("merge_iou", c.roi.merge_iou);
    s.get("min_area", c.roi.validity.min_area);
    s.get("min_mean_heat", c.roi.validity.min_mean_heat);
    s.get("max_boxes", c.roi.validity.max_boxes);
    s.finish();
  }
  {
    auto s = root.section("policy");
    auto& p = c.policy;
    s.get("omega", p.omega);
    std::vector<double> rates = p.rates.values();
    s.get("rates", rates);
    try {
      p.rates = RateSet(rates);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("policy.rates: ") + e.what());
    }
    {
      auto a = s.section("accuracy");
      a.get("small", p.accuracy.small);
      a.get("medium", p.accuracy.medium);
      a.get("large", p.accuracy.large);
      a.get("small_max_area", p.accuracy.small_max_area);
      a.get("large_min_area", p.accuracy.large_min_area);
      a.finish();
    }
    {
      auto k = s.section("cost");
      k.get("latency_ms", p.cost.latency_ms);
      k.get("gpu_share", p.cost.gpu_share);
      k.get("reference_pixels", p.cost.reference_pixels);
      k.get("latency_weight", p.cost.latency_weight);
      k.get("gpu_weight", p.cost.gpu_weight);
      k.get("latency_norm", p.cost.latency_norm);
      k.get("gpu_norm", p.cost.gpu_norm);
      k.finish();
    }
    s.get("encoding_factor", p.size.encoding_factor);
    std::string solver = "hill_climb";
    s.get("solver", solver);
    p.solver = detail::parse_solver(solver);
    s.get("starts", p.starts);
    s.get("enumeration_cap", p.enumeration_cap);
    s.get_optional("rate_override", p.rate_override);
    s.get("adaptive_frequency", p.adaptive_frequency);
    s.finish();
  }
  {
    auto s = root.section("oracle");
    s.get("min_side_px", c.oracle.model.min_side_px);
    s.get("min_coverage", c.oracle.model.min_coverage);
    s.get("match_iou", c.oracle.model.match_iou);
    s.get("merge_duplicates", c.oracle.merge_duplicates);
    std::string mode = "per_frame";
    s.get("f1_mode", mode);
    c.oracle.f1_mode = detail::parse_f1_mode(mode);
    s.finish();
  }
  {
    auto s = root.section("link");
    s.get("loss_rate", c.link.loss_rate);
    s.get("bandwidth_trace", c.link.bandwidth_trace);
    s.get_optional("bandwidth_mbps", c.link.bandwidth_mbps);
    s.get("edge_trace", c.link.edge_trace);
    s.get("g_max", c.link.g_max);
    s.get("base_latency_ms", c.link.base_latency_ms);
    s.finish();
  }
  {
    auto s = root.section("sweep");
    s.get("bandwidths_mbps", c.sweep.bandwidths_mbps);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

// Full effective configuration. With absolute_paths, file references are
// resolved so the echo re-runs from any directory.
inline nlohmann::json config_to_json(const RunConfig& c, bool absolute_paths = false) {
  auto path = [&](const std::string& p) -> std::string {
    if (!absolute_paths || p.empty()) return p;
    return std::filesystem::absolute(c.resolve(p)).lexically_normal().string();
  };
  const auto& p = c.policy;
  nlohmann::json j;
  j["seed"] = c.seed;
  j["scenario"] = {{"frames", c.scenario.frames},
                   {"fps", c.scenario.fps},
                   {"width", c.scenario.width},
                   {"height", c.scenario.height},
                   {"ground_truth", path(c.scenario.ground_truth)},
                   {"frames_dir", path(c.scenario.frames_dir)},
                   {"render_seed", c.scenario.render_seed}};
  j["extractor"] = {{"seed", c.extractor.seed}, {"widths", c.extractor.widths}, {"pools", c.extractor.pools}};
  j["cam"] = {{"weights", path(c.cam.weights)},
              {"calibration_seed", c.cam.calibration_seed},
              {"calibration_frames", c.cam.calibration_frames},
              {"aggregation", c.cam.aggregation == Aggregation::kMax ? "max" : "sum"}};
  j["layout"] = {{"top_fraction", c.layout.top_fraction},
                 {"center_fraction", c.layout.center_fraction},
                 {"include_top_parts", c.roi.include_top_parts}};
  j["roi"] = {{"heat_threshold", c.roi.heat_threshold},
              {"pad", c.roi.pad},
              {"merge_iou", c.roi.merge_iou},
              {"min_area", c.roi.validity.min_area},
              {"min_mean_heat", c.roi.validity.min_mean_heat},
              {"max_boxes", c.roi.validity.max_boxes}};
  j["policy"] = {{"omega", p.omega},
                 {"rates", p.rates.values()},
                 {"accuracy",
                  {{"small", p.accuracy.small},
                   {"medium", p.accuracy.medium},
                   {"large", p.accuracy.large},
                   {"small_max_area", p.accuracy.small_max_area},
                   {"large_min_area", p.accuracy.large_min_area}}},
                 {"cost",
                  {{"latency_ms", p.cost.latency_ms},
                   {"gpu_share", p.cost.gpu_share},
                   {"reference_pixels", p.cost.reference_pixels},
                   {"latency_weight", p.cost.latency_weight},
                   {"gpu_weight", p.cost.gpu_weight},
                   {"latency_norm", p.cost.latency_norm},
                   {"gpu_norm", p.cost.gpu_norm}}},
                 {"encoding_factor", p.size.encoding_factor},
                 {"solver", p.solver == Solver::kHillClimb ? "hill_climb" : "brute_force"},
                 {"starts", p.starts},
                 {"enumeration_cap", p.enumeration_cap},
                 {"rate_override", p.rate_override ? nlohmann::json(*p.rate_override) : nlohmann::json(nullptr)},
                 {"adaptive_frequency", p.adaptive_frequency}};
  j["oracle"] = {{"min_side_px", c.oracle.model.min_side_px},
                 {"min_coverage", c.oracle.model.min_coverage},
                 {"match_iou", c.oracle.model.match_iou},
                 {"merge_duplicates", c.oracle.merge_duplicates},
                 {"f1_mode", c.oracle.f1_mode == F1Mode::kPerFrame ? "per_frame" : "global"}};
  j["link"] = {{"loss_rate", c.link.loss_rate},
               {"bandwidth_trace", path(c.link.bandwidth_trace)},
               {"bandwidth_mbps", c.link.bandwidth_mbps ? nlohmann::json(*c.link.bandwidth_mbps) : nlohmann::json(nullptr)},
               {"edge_trace", path(c.link.edge_trace)},
               {"g_max", c.link.g_max},
               {"base_latency_ms", c.link.base_latency_ms}};
  j["sweep"] = {{"bandwidths_mbps", c.sweep.bandwidths_mbps}};
  return j;
}

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
// possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// Defaults plus overrides, for runs without a config file.
inline RunConfig default_config(const std::vector<std::string>& overrides = {}) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j, ".");
}

}  // namespace roiedge
