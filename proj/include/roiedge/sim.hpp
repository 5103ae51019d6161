#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/cam.hpp"
#include "roiedge/config.hpp"
#include "roiedge/features.hpp"
#include "roiedge/ground_truth.hpp"
#include "roiedge/link.hpp"
#include "roiedge/oracle.hpp"
#include "roiedge/partition.hpp"
#include "roiedge/policy.hpp"
#include "roiedge/protocol.hpp"
#include "roiedge/roi.hpp"
#include "roiedge/scenario.hpp"

namespace roiedge {

// Everything a run reads, loaded and validated before frame 0.
struct SimScenario {
  RunConfig config;
  GroundTruth ground_truth;
  BandwidthTrace bandwidth;
  EdgeResourceTrace edge;
  FeatureExtractor extractor;
  ClassWeights weights;
  PartitionLayout layout;
  std::shared_ptr<const FrameRenderer> renderer;  // null when frames come from disk

  Image frame_image(std::int64_t f) const {
    if (!renderer) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05lld.ppm", static_cast<long long>(f));
      Image img = load_ppm(config.resolve(config.scenario.frames_dir) / name);
      if (img.width() != layout.frame_width || img.height() != layout.frame_height)
        throw ShapeError(std::string(name) + " does not match the configured frame size");
      return img;
    }
    return renderer->render(ground_truth.frame(static_cast<std::size_t>(f)));
  }
};

inline SimScenario load_scenario(const RunConfig& cfg) {
  cfg.validate();
  const auto& sc = cfg.scenario;
  const auto frames = static_cast<std::size_t>(sc.frames);
  GroundTruth gt = sc.ground_truth.empty() ? GroundTruth(frames) : load_ground_truth(cfg.resolve(sc.ground_truth), frames);
  if (gt.frame_count() != frames)
    throw ConfigError("ground truth covers " + std::to_string(gt.frame_count()) + " frames, scenario has " +
                      std::to_string(frames));
  const Rect frame_rect{0, 0, sc.width, sc.height};
  for (const auto& o : gt.all())
    if (!frame_rect.contains(o.box)) throw ConfigError("ground-truth box outside the frame at frame " + std::to_string(o.frame));

  BandwidthTrace bw;
  if (!cfg.link.bandwidth_trace.empty())
    bw = load_bandwidth_trace(cfg.resolve(cfg.link.bandwidth_trace));
  else if (cfg.link.bandwidth_mbps)
    bw = BandwidthTrace::constant(*cfg.link.bandwidth_mbps * 1e6);
  else
    throw ConfigError("link needs bandwidth_trace or bandwidth_mbps");

  EdgeResourceTrace edge = cfg.link.edge_trace.empty()
                               ? EdgeResourceTrace::constant(cfg.link.g_max, cfg.link.base_latency_ms)
                               : load_edge_trace(cfg.resolve(cfg.link.edge_trace));
  if (bw.samples.front().t > 0.0 || edge.samples.front().t > 0.0) throw ConfigError("traces must start at t <= 0");

  std::shared_ptr<const FrameRenderer> renderer;
  if (sc.frames_dir.empty()) renderer = std::make_shared<FrameRenderer>(sc.width, sc.height, sc.render_seed);

  FeatureExtractor extractor(cfg.extractor);
  std::optional<ClassWeights> weights;
  if (!cfg.cam.weights.empty()) {
    weights = load_class_weights(cfg.resolve(cfg.cam.weights));
  } else {
    const FrameRenderer calib(sc.width, sc.height, sc.render_seed);
    weights = calibrate_class_weights(extractor, calib, cfg.cam.calibration_frames, cfg.cam.calibration_seed);
  }
  if (weights->channels() != static_cast<std::size_t>(cfg.extractor.channels()))
    throw ConfigError("class weights have " + std::to_string(weights->channels()) + " channels, extractor produces " +
                      std::to_string(cfg.extractor.channels()));

  auto layout = make_layout(sc.width, sc.height, cfg.layout.top_fraction, cfg.layout.center_fraction);
  return SimScenario{cfg, std::move(gt), std::move(bw), std::move(edge), std::move(extractor), std::move(*weights),
                     layout, std::move(renderer)};
}

// Valid RoI boxes per frame. They depend only on the frame and the
// extraction settings, so runs that vary policy or link settings share them.
class RoiCache {
 public:
  const std::vector<RoiBox>& get(const SimScenario& s, std::int64_t f) {
    auto it = boxes_.find(f);
    if (it != boxes_.end()) return it->second;
    RoiConfig rc = s.config.roi;
    rc.aggregation = s.config.cam.aggregation;
    const FeatureMap fm = s.extractor.extract(s.frame_image(f));
    return boxes_.emplace(f, extract_frame_rois(fm, s.weights, s.layout, rc)).first->second;
  }

 private:
  std::map<std::int64_t, std::vector<RoiBox>> boxes_;
};

// Where box messages go. LocalEdge answers in-process; the socket client
// lives in transport.hpp.
class EdgeEndpoint {
 public:
  virtual ~EdgeEndpoint() = default;
  virtual ResultMessage process(const BoxMessage& box) = 0;
};

class LocalEdge : public EdgeEndpoint {
 public:
  LocalEdge(const GroundTruth& gt, const RunConfig& cfg) : gt_(gt), cfg_(cfg) {}

  ResultMessage process(const BoxMessage& box) override {
    ResultMessage r;
    r.frame = box.frame;
    r.part = box.part;
    if (box.frame < 0 || static_cast<std::size_t>(box.frame) >= gt_.frame_count())
      throw RangeError("box message for unknown frame " + std::to_string(box.frame));
    r.detections = oracle_detect(box.rect, box.rate, gt_.frame(static_cast<std::size_t>(box.frame)), cfg_.oracle.model,
                                 cfg_.policy.accuracy, cfg_.policy.rates);
    return r;
  }

 private:
  const GroundTruth& gt_;
  RunConfig cfg_;
};

struct PartDecision {
  int part = 0;
  int frequency = 0;     // before this frame's update
  bool offloaded = false;
  bool found = false;
};

struct SentBox {
  RoiBox box;
  double bytes = 0.0;
  double latency_ms = 0.0;
  bool delivered = false;
};

struct FrameReport {
  std::int64_t frame = 0;
  double bandwidth_bps = 0.0;
  double budget_bytes = 0.0;
  double g_max = 0.0;
  std::vector<PartDecision> parts;
  std::vector<SentBox> boxes;
  std::int64_t candidate_boxes = 0;  // valid boxes in offloaded parts
  std::int64_t shed_boxes = 0;
  bool feasible = true;
  double bytes = 0.0;
  double transmission_ms = 0.0;
  double inference_ms = 0.0;
  double latency_ms = 0.0;
  std::vector<Detection> detections;
  F1Result score;
  bool scored = false;  // false when the frame has neither objects nor detections
  double utility = 0.0;
};

struct SimSummary {
  std::int64_t frames = 0;
  double total_bytes = 0.0;
  double frame_bytes = 0.0;  // S(frame, 1)
  double bytes_ratio = 0.0;
  double reduction = 0.0;
  double mean_bytes = 0.0;
  double mean_f1 = 0.0;
  std::int64_t scored_frames = 0;
  F1Result global;
  double mean_utility = 0.0;
  double mean_latency_ms = 0.0;
  std::int64_t boxes_sent = 0;
  std::int64_t boxes_delivered = 0;
  std::int64_t infeasible_frames = 0;
  double f1 = 0.0;  // per the configured mode
};

struct SimResult {
  std::vector<FrameReport> reports;
  SimSummary summary;
};

namespace detail {

// Drops the coolest boxes until the all-minimum assignment fits.
inline std::vector<RoiBox> shed_until_feasible(std::vector<RoiBox> boxes, const PolicyConfig& pc, const Budget& budget) {
  while (!boxes.empty()) {
    std::vector<Rect> rects;
    for (const auto& b : boxes) rects.push_back(b.rect);
    const std::vector<double> lows(rects.size(), pc.rates.min());
    if (feasible(rects, lows, budget, pc)) break;
    auto coolest = std::min_element(boxes.begin(), boxes.end(),
                                    [](const RoiBox& a, const RoiBox& b) { return a.heat_mass < b.heat_mass; });
    // Among equal heat the later box goes first, so earlier parts win ties.
    for (auto it = boxes.begin(); it != boxes.end(); ++it)
      if (it->heat_mass == coolest->heat_mass) coolest = it;
    boxes.erase(coolest);
  }
  return boxes;
}

}  // namespace detail

inline SimSummary summarize(const std::vector<FrameReport>& reports, const RunConfig& cfg) {
  SimSummary s;
  s.frames = static_cast<std::int64_t>(reports.size());
  s.frame_bytes = cfg.policy.size.frame_bytes(cfg.scenario.width, cfg.scenario.height);
  MatchCounts total;
  double f1_sum = 0.0, util_sum = 0.0, lat_sum = 0.0;
  for (const auto& r : reports) {
    s.total_bytes += r.bytes;
    util_sum += r.utility;
    lat_sum += r.latency_ms;
    s.boxes_sent += static_cast<std::int64_t>(r.boxes.size());
    for (const auto& b : r.boxes) s.boxes_delivered += b.delivered ? 1 : 0;
    if (!r.feasible) ++s.infeasible_frames;
    total.tp += r.score.counts.tp;
    total.fp += r.score.counts.fp;
    total.fn += r.score.counts.fn;
    if (r.scored) {
      f1_sum += r.score.f1;
      ++s.scored_frames;
    }
  }
  if (s.frames > 0) {
    const double n = static_cast<double>(s.frames);
    s.mean_bytes = s.total_bytes / n;
    s.mean_utility = util_sum / n;
    s.mean_latency_ms = lat_sum / n;
    s.bytes_ratio = s.total_bytes / (s.frame_bytes * n);
    s.reduction = 1.0 - s.bytes_ratio;
  }
  s.mean_f1 = s.scored_frames > 0 ? f1_sum / static_cast<double>(s.scored_frames) : 0.0;
  s.global = f1_from_counts(total);
  s.f1 = cfg.oracle.f1_mode == F1Mode::kPerFrame ? s.mean_f1 : s.global.f1;
  return s;
}

// One pass over the clip: RoIs → frequency gating → rate assignment →
// transmission → edge detection → scoring → frequency feedback.
inline SimResult run_simulation(const SimScenario& s, EdgeEndpoint& edge, RoiCache& cache) {
  const RunConfig& cfg = s.config;
  const PolicyConfig& pc = cfg.policy;
  const int fps = cfg.scenario.fps;
  FrequencyController ctrl;
  SimResult result;

  for (std::int64_t f = 0; f < cfg.scenario.frames; ++f) {
    FrameReport rep;
    rep.frame = f;
    const double t = static_cast<double>(f) / fps;
    rep.bandwidth_bps = bandwidth_at(s.bandwidth, t);
    const auto& res = edge_resources_at(s.edge, t);
    rep.g_max = res.g_max;
    rep.budget_bytes = frame_byte_budget(rep.bandwidth_bps, fps);
    const Budget budget{rep.budget_bytes, res.g_max};

    const auto& all_boxes = cache.get(s, f);
    std::vector<RoiBox> candidates;
    for (int part : cfg.roi.parts()) {
      PartDecision d;
      d.part = part;
      d.frequency = ctrl.frequency(part);
      d.offloaded = !pc.adaptive_frequency || should_offload(std::min(d.frequency, fps), f, fps);
      if (d.offloaded)
        for (const auto& b : all_boxes)
          if (b.part == part) candidates.push_back(b);
      rep.parts.push_back(d);
    }
    rep.candidate_boxes = static_cast<std::int64_t>(candidates.size());

    // Rate assignment.
    std::vector<RoiBox> chosen;
    std::vector<double> rates;
    if (pc.rate_override) {
      chosen = candidates;
      rates.assign(chosen.size(), *pc.rate_override);
    } else {
      chosen = detail::shed_until_feasible(candidates, pc, budget);
      std::vector<Rect> rects;
      for (const auto& b : chosen) rects.push_back(b.rect);
      const auto a = solve_rates(rects, pc, budget, mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(f))));
      rates = a.rates;
      if (rates.size() != chosen.size()) throw Error("solver returned no assignment for a feasible instance");
    }
    rep.shed_boxes = rep.candidate_boxes - static_cast<std::int64_t>(chosen.size());
    {
      std::vector<Rect> rects;
      for (const auto& b : chosen) rects.push_back(b.rect);
      rep.feasible = rep.shed_boxes == 0 && feasible(rects, rates, budget, pc);
      rep.utility = utility(rects, rates, pc);
    }

    // Transmission and edge inference.
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      SentBox sb;
      sb.box = chosen[i];
      sb.box.rate = rates[i];
      sb.bytes = pc.size.bytes(sb.box.rect, rates[i]);
      const auto tx = transmit(sb.bytes, rep.bandwidth_bps, cfg.link.loss_rate, cfg.seed, static_cast<std::uint64_t>(f), i);
      sb.latency_ms = tx.latency_ms;
      sb.delivered = tx.delivered;
      rep.bytes += sb.bytes;
      rep.transmission_ms += tx.latency_ms;
      if (sb.delivered) {
        const BoxMessage msg{f, sb.box.part, sb.box.rect, rates[i], sb.bytes};
        const ResultMessage out = edge.process(msg);
        rep.inference_ms += res.base_latency_ms + pc.cost.latency(sb.box.rect, rates[i]);
        if (!out.detections.empty())
          for (auto& d : rep.parts)
            if (d.part == sb.box.part) d.found = true;
        dets.insert(dets.end(), out.detections.begin(), out.detections.end());
      }
      rep.boxes.push_back(sb);
    }
    rep.latency_ms = rep.transmission_ms + rep.inference_ms;

    // Frequency feedback for every part that had its turn this frame.
    for (const auto& d : rep.parts)
      if (d.offloaded) ctrl.step(d.part, d.found);

    rep.detections = cfg.oracle.merge_duplicates ? merge_duplicate_detections(dets, cfg.oracle.model.match_iou) : dets;
    const auto& gt = s.ground_truth.frame(static_cast<std::size_t>(f));
    rep.score = f1_score(rep.detections, gt, cfg.oracle.model.match_iou);
    rep.scored = !gt.empty() || !rep.detections.empty();
    result.reports.push_back(std::move(rep));
  }
  result.summary = summarize(result.reports, cfg);
  return result;
}

inline SimResult run_simulation(const SimScenario& s) {
  LocalEdge edge(s.ground_truth, s.config);
  RoiCache cache;
  return run_simulation(s, edge, cache);
}

// ---------------------------------------------------------------------------
// Report output.

inline nlohmann::json rect_to_json(const Rect& r) { return nlohmann::json::array({r.x, r.y, r.w, r.h}); }

inline nlohmann::json report_to_json(const FrameReport& r) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : r.parts)
    parts.push_back({{"part", p.part}, {"frequency", p.frequency}, {"offloaded", p.offloaded}, {"found", p.found}});
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : r.boxes)
    boxes.push_back({{"part", b.box.part},
                     {"rect", rect_to_json(b.box.rect)},
                     {"rate", b.box.rate},
                     {"bytes", b.bytes},
                     {"heat_mass", b.box.heat_mass},
                     {"mean_heat", b.box.mean_heat},
                     {"latency_ms", b.latency_ms},
                     {"delivered", b.delivered}});
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : r.detections)
    dets.push_back({{"class", d.cls}, {"rect", rect_to_json(d.box)}, {"confidence", d.confidence}});
  return {{"frame", r.frame},
          {"bandwidth_bps", r.bandwidth_bps},
          {"budget_bytes", r.budget_bytes},
          {"g_max", r.g_max},
          {"parts", parts},
          {"candidate_boxes", r.candidate_boxes},
          {"shed_boxes", r.shed_boxes},
          {"feasible", r.feasible},
          {"boxes", boxes},
          {"bytes", r.bytes},
          {"transmission_ms", r.transmission_ms},
          {"inference_ms", r.inference_ms},
          {"latency_ms", r.latency_ms},
          {"detections", dets},
          {"precision", r.score.precision},
          {"recall", r.score.recall},
          {"f1", r.score.f1},
          {"tp", r.score.counts.tp},
          {"fp", r.score.counts.fp},
          {"fn", r.score.counts.fn},
          {"scored", r.scored},
          {"utility", r.utility}};
}

inline nlohmann::json summary_to_json(const SimSummary& s) {
  return {{"frames", s.frames},
          {"total_bytes", s.total_bytes},
          {"frame_bytes", s.frame_bytes},
          {"mean_bytes", s.mean_bytes},
          {"bytes_ratio", s.bytes_ratio},
          {"reduction", s.reduction},
          {"f1", s.f1},
          {"mean_f1", s.mean_f1},
          {"scored_frames", s.scored_frames},
          {"global_precision", s.global.precision},
          {"global_recall", s.global.recall},
          {"global_f1", s.global.f1},
          {"mean_utility", s.mean_utility},
          {"mean_latency_ms", s.mean_latency_ms},
          {"boxes_sent", s.boxes_sent},
          {"boxes_delivered", s.boxes_delivered},
          {"infeasible_frames", s.infeasible_frames}};
}

inline std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string summary_csv(const std::vector<FrameReport>& reports) {
  std::string out = "frame,bytes,f1,utility,latency_ms\n";
  for (const auto& r : reports)
    out += std::to_string(r.frame) + "," + format_fixed(r.bytes) + "," + format_fixed(r.score.f1) + "," +
           format_fixed(r.utility) + "," + format_fixed(r.latency_ms) + "\n";
  return out;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

// reports.jsonl, summary.csv, summary.json, effective_config.json.
inline void write_run_outputs(const SimResult& r, const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const auto& rep : r.reports) lines += report_to_json(rep).dump() + "\n";
  detail::write_text(dir / "reports.jsonl", lines);
  detail::write_text(dir / "summary.csv", summary_csv(r.reports));
  detail::write_text(dir / "summary.json", summary_to_json(r.summary).dump(2) + "\n");
  detail::write_text(dir / "effective_config.json", config_to_json(cfg, true).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Bandwidth sweep: the same clip at a series of constant link rates.

struct SweepRow {
  double bandwidth_mbps = 0.0;
  double mean_f1 = 0.0;
  double mean_bytes = 0.0;
  double mean_utility = 0.0;
};

inline std::vector<SweepRow> run_sweep(const SimScenario& base, RoiCache& cache) {
  std::vector<SweepRow> rows;
  for (double mbps : base.config.sweep.bandwidths_mbps) {
    SimScenario s = base;
    s.config.link.bandwidth_trace.clear();
    s.config.link.bandwidth_mbps = mbps;
    s.bandwidth = BandwidthTrace::constant(mbps * 1e6);
    LocalEdge edge(s.ground_truth, s.config);
    const auto r = run_simulation(s, edge, cache);
    rows.push_back(SweepRow{mbps, r.summary.f1, r.summary.mean_bytes, r.summary.mean_utility});
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "bandwidth_mbps,mean_f1,mean_bytes,mean_utility\n";
  for (const auto& r : rows)
    out += format_fixed(r.bandwidth_mbps) + "," + format_fixed(r.mean_f1) + "," + format_fixed(r.mean_bytes) + "," +
           format_fixed(r.mean_utility) + "\n";
  return out;
}

}  // namespace roiedge
