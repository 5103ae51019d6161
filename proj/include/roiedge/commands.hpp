#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/config.hpp"
#include "roiedge/scenario.hpp"
#include "roiedge/sim.hpp"
#include "roiedge/transport.hpp"

// Subcommand bodies behind the roiedge CLI. Each returns a process exit code
// and reports through the given stream; errors propagate as exceptions.
namespace roiedge {

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  std::vector<std::string> sets;
};

inline RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config ? load_config(*o.config, o.sets) : default_config(o.sets);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

inline std::filesystem::path output_dir(const CommonOptions& o, const char* fallback) {
  return o.out.empty() ? std::filesystem::path(fallback) : o.out;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOptions {
  std::filesystem::path input;  // PPM image or feature tensor
};

inline nlohmann::json roi_box_to_json(const RoiBox& b) {
  return {{"part", b.part},
          {"rect", rect_to_json(b.rect)},
          {"heat_mass", b.heat_mass},
          {"mean_heat", b.mean_heat},
          {"cells", b.cells}};
}

inline int cmd_extract(const CommonOptions& common, const ExtractOptions& opt, std::ostream& log) {
  RunConfig cfg = resolve_config(common);
  const auto bytes = detail::read_file_bytes(opt.input);
  FeatureMap features;
  std::int64_t frame_w = 0, frame_h = 0;
  const FeatureExtractor extractor(cfg.extractor);
  const std::string_view head(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 8));
  if (head.substr(0, 2) == "P6") {
    const Image img = decode_ppm(bytes);
    frame_w = img.width();
    frame_h = img.height();
    features = extractor.extract(img);
  } else if (head == kTensorMagic) {
    // A feature map given directly: the frame is the grid times the stride.
    features = FeatureMap{deserialize_tensor(bytes), cfg.extractor.stride()};
    frame_w = static_cast<std::int64_t>(features.tensor.width()) * features.stride;
    frame_h = static_cast<std::int64_t>(features.tensor.height()) * features.stride;
  } else {
    throw FormatError(opt.input.string() + ": neither a PPM image nor a feature tensor");
  }

  ClassWeights weights = [&] {
    if (!cfg.cam.weights.empty()) return load_class_weights(cfg.resolve(cfg.cam.weights));
    const FrameRenderer calib(cfg.scenario.width, cfg.scenario.height, cfg.scenario.render_seed);
    return calibrate_class_weights(extractor, calib, cfg.cam.calibration_frames, cfg.cam.calibration_seed);
  }();
  if (weights.channels() != features.tensor.channels())
    throw ConfigError("class weights have " + std::to_string(weights.channels()) + " channels, features have " +
                      std::to_string(features.tensor.channels()));

  const auto layout = make_layout(frame_w, frame_h, cfg.layout.top_fraction, cfg.layout.center_fraction);
  RoiConfig rc = cfg.roi;
  rc.aggregation = cfg.cam.aggregation;
  const auto boxes = extract_frame_rois(features, weights, layout, rc);

  const auto dir = output_dir(common, "out/extract");
  std::filesystem::create_directories(dir);
  std::string lines;
  std::int64_t area = 0;
  for (const auto& b : boxes) {
    lines += roi_box_to_json(b).dump() + "\n";
    area += b.area();
  }
  detail::write_text(dir / "boxes.jsonl", lines);
  log << "boxes: " << boxes.size() << "\n"
      << "covered area fraction: " << format_fixed(static_cast<double>(area) / static_cast<double>(frame_w * frame_h))
      << "\n"
      << "wrote " << (dir / "boxes.jsonl").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate / sweep / run-device

struct SimulateOptions {
  std::optional<std::filesystem::path> golden;
  bool update_golden = false;
};

inline void print_summary(const SimSummary& s, std::ostream& log) {
  log << "frames: " << s.frames << "\n"
      << "bytes sent: " << format_fixed(s.total_bytes) << " (" << format_fixed(s.bytes_ratio)
      << " of full frames, reduction " << format_fixed(s.reduction) << ")\n"
      << "f1: " << format_fixed(s.f1) << " (per-frame mean " << format_fixed(s.mean_f1) << ", global "
      << format_fixed(s.global.f1) << ")\n"
      << "mean utility: " << format_fixed(s.mean_utility) << "\n"
      << "mean latency ms: " << format_fixed(s.mean_latency_ms) << "\n"
      << "boxes sent/delivered: " << s.boxes_sent << "/" << s.boxes_delivered << "\n";
}

// Returns the first differing line (1-based), or 0 when equal.
inline std::size_t first_difference(const std::string& a, const std::string& b, std::string* line_a,
                                    std::string* line_b) {
  std::istringstream sa(a), sb(b);
  std::string la, lb;
  for (std::size_t n = 1;; ++n) {
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    if (!ga && !gb) return 0;
    if (ga != gb || la != lb) {
      *line_a = ga ? la : "<end of file>";
      *line_b = gb ? lb : "<end of file>";
      return n;
    }
  }
}

inline int finish_run(const SimResult& r, const RunConfig& cfg, const std::filesystem::path& dir,
                      const SimulateOptions& opt, std::ostream& log) {
  write_run_outputs(r, cfg, dir);
  print_summary(r.summary, log);
  log << "wrote " << dir.string() << "\n";
  if (!opt.golden) return 0;
  const std::string csv = summary_csv(r.reports);
  if (opt.update_golden) {
    if (opt.golden->has_parent_path()) std::filesystem::create_directories(opt.golden->parent_path());
    detail::write_text(*opt.golden, csv);
    log << "golden updated: " << opt.golden->string() << "\n";
    return 0;
  }
  const auto golden_bytes = detail::read_file_bytes(*opt.golden);
  const std::string golden(golden_bytes.begin(), golden_bytes.end());
  std::string got, want;
  if (const auto line = first_difference(csv, golden, &got, &want); line != 0) {
    log << "golden mismatch at line " << line << "\n  got:  " << got << "\n  want: " << want << "\n";
    return 1;
  }
  log << "golden match: " << opt.golden->string() << "\n";
  return 0;
}

inline int cmd_simulate(const CommonOptions& common, const SimulateOptions& opt, std::ostream& log) {
  const RunConfig cfg = resolve_config(common);
  const SimScenario s = load_scenario(cfg);
  return finish_run(run_simulation(s), cfg, output_dir(common, "out/simulate"), opt, log);
}

inline int cmd_sweep(const CommonOptions& common, std::ostream& log) {
  const RunConfig cfg = resolve_config(common);
  const SimScenario s = load_scenario(cfg);
  RoiCache cache;
  const auto rows = run_sweep(s, cache);
  const auto dir = output_dir(common, "out/sweep");
  std::filesystem::create_directories(dir);
  const std::string csv = sweep_csv(rows);
  detail::write_text(dir / "sweep.csv", csv);
  detail::write_text(dir / "effective_config.json", config_to_json(cfg, true).dump(2) + "\n");
  log << csv << "wrote " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

struct SocketOptions {
  std::string host = "127.0.0.1";
  int port = 7070;
  std::size_t connections = 0;  // serve-edge: stop after this many (0 = forever)
};

inline int cmd_run_device(const CommonOptions& common, const SocketOptions& sock, const SimulateOptions& opt,
                          std::ostream& log) {
  const RunConfig cfg = resolve_config(common);
  const SimScenario s = load_scenario(cfg);
  RemoteEdge edge(sock.host, sock.port);
  RoiCache cache;
  return finish_run(run_simulation(s, edge, cache), cfg, output_dir(common, "out/device"), opt, log);
}

inline int cmd_serve_edge(const CommonOptions& common, const SocketOptions& sock, std::ostream& log) {
  const RunConfig cfg = resolve_config(common);
  const auto frames = static_cast<std::size_t>(cfg.scenario.frames);
  const GroundTruth gt = cfg.scenario.ground_truth.empty()
                             ? GroundTruth(frames)
                             : load_ground_truth(cfg.resolve(cfg.scenario.ground_truth), frames);
  EdgeServer server(gt, cfg, sock.host, sock.port);
  log << "edge listening on " << sock.host << ":" << server.port() << std::endl;
  server.serve(sock.connections);
  const auto errors = server.errors();
  for (const auto& e : errors) log << "connection error: " << e << "\n";
  return errors.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// gen-scenario / stats

struct GenOptions {
  ScenarioParams params;
  std::vector<double> sweep_mbps;  // empty = config default
  bool write_frames = false;
};

inline int cmd_gen_scenario(const CommonOptions& common, const GenOptions& opt, std::ostream& log) {
  const std::uint64_t seed = common.seed.value_or(1);
  const ScenarioParams& p = opt.params;
  if (p.frames <= 0 || p.fps <= 0 || p.width <= 0 || p.height <= 0) throw ParameterError("scenario sizes must be > 0");
  const auto dir = output_dir(common, "out/scenario");
  std::filesystem::create_directories(dir);

  const GroundTruth gt = generate_ground_truth(p, seed);
  save_ground_truth(gt, dir / "ground_truth.jsonl");
  save_bandwidth_trace(generate_bandwidth_trace(p), dir / "bandwidth.jsonl");
  save_edge_trace(EdgeResourceTrace::constant(p.g_max, p.base_latency_ms), dir / "edge.jsonl");

  RunConfig cfg;
  cfg.seed = seed;
  cfg.scenario.frames = p.frames;
  cfg.scenario.fps = p.fps;
  cfg.scenario.width = p.width;
  cfg.scenario.height = p.height;
  cfg.scenario.ground_truth = "ground_truth.jsonl";
  cfg.scenario.render_seed = mix64(seed ^ 0x72656e646572ULL);
  cfg.layout.top_fraction = p.top_fraction;
  cfg.cam.calibration_seed = mix64(seed ^ 0x63616c6962ULL);
  cfg.cam.calibration_frames = p.calibration_frames;
  cfg.link.bandwidth_trace = "bandwidth.jsonl";
  cfg.link.bandwidth_mbps.reset();
  cfg.link.edge_trace = "edge.jsonl";
  if (!opt.sweep_mbps.empty()) cfg.sweep.bandwidths_mbps = opt.sweep_mbps;
  cfg.validate();

  const FeatureExtractor extractor(cfg.extractor);
  const FrameRenderer renderer(p.width, p.height, cfg.scenario.render_seed);
  save_class_weights(calibrate_class_weights(extractor, renderer, p.calibration_frames, cfg.cam.calibration_seed),
                     dir / "weights.tensor");
  cfg.cam.weights = "weights.tensor";

  if (opt.write_frames) {
    std::filesystem::create_directories(dir / "frames");
    for (std::int64_t f = 0; f < p.frames; ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05lld.ppm", static_cast<long long>(f));
      save_ppm(renderer.render(gt.frame(static_cast<std::size_t>(f))), dir / "frames" / name);
    }
    cfg.scenario.frames_dir = "frames";
  }
  detail::write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  const auto layout = make_layout(p.width, p.height, p.top_fraction);
  const auto occ = occupancy_stats(gt.all(), layout, p.frames);
  log << "density: " << density_name(p.density) << "\n"
      << "objects: " << gt.object_count() << " over " << p.frames << " frames\n"
      << "top-band frame share: " << format_fixed(occ.top_band) << "\n"
      << "wrote " << dir.string() << "\n";
  return 0;
}

inline int cmd_stats(const CommonOptions& common, std::ostream& log) {
  const RunConfig cfg = resolve_config(common);
  const auto frames = static_cast<std::size_t>(cfg.scenario.frames);
  const GroundTruth gt = cfg.scenario.ground_truth.empty()
                             ? GroundTruth(frames)
                             : load_ground_truth(cfg.resolve(cfg.scenario.ground_truth), frames);
  const auto layout = make_layout(cfg.scenario.width, cfg.scenario.height, cfg.layout.top_fraction,
                                  cfg.layout.center_fraction);
  const auto occ = occupancy_stats(gt.all(), layout, cfg.scenario.frames);
  if (occ.empty_ground_truth) {
    log << "no ground-truth objects\n";
    return 0;
  }
  log << std::left << std::setw(28) << "region" << std::setw(10) << "frames" << "share\n"
      << std::setw(28) << "P1 u P2" << std::setw(10) << occ.top_band_frames << format_fixed(100.0 * occ.top_band)
      << "%\n"
      << std::setw(28) << "P5 n (P1 u P2)" << std::setw(10) << occ.center_top_frames
      << format_fixed(100.0 * occ.center_top) << "%\n"
      << std::setw(28) << "total" << std::setw(10) << occ.frames << "\n";
  return 0;
}

}  // namespace roiedge
