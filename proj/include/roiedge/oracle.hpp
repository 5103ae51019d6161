#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "roiedge/geometry.hpp"
#include "roiedge/ground_truth.hpp"
#include "roiedge/policy.hpp"

namespace roiedge {

// Deterministic stand-in for the edge detector.
struct OracleModel {
  double min_side_px = 12.0;  // scaled shorter side must reach this
  double min_coverage = 0.5;  // fraction of the object's area inside the RoI
  double match_iou = 0.5;     // F1 matching threshold

  void validate() const {
    if (!(min_side_px >= 0.0)) throw ConfigError("oracle.min_side_px must be >= 0");
    if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw ConfigError("oracle.min_coverage must be in [0, 1]");
    if (!(match_iou > 0.0 && match_iou <= 1.0)) throw ConfigError("oracle.match_iou must be in (0, 1]");
  }
};

struct Detection {
  int cls = 0;
  Rect box;  // frame pixels
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// An object is reported iff its center lies in the RoI, at least
// min_coverage of its area does, and its shorter side survives
// down-sampling at the min_side_px level. Reported boxes are clipped to the
// RoI and carry the accuracy-profile value at rate r as confidence.
inline std::vector<Detection> oracle_detect(const Rect& roi, double rate, const FrameObjects& objects,
                                            const OracleModel& model, const AccuracyProfile& accuracy,
                                            const RateSet& rates) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError("rate must be in (0, 1]");
  std::vector<Detection> out;
  const double confidence = std::max(1e-6, accuracy.at(rates, roi.area(), rate));
  for (const auto& o : objects) {
    if (!roi.contains_point(o.box.center_x(), o.box.center_y())) continue;
    const auto inside = intersect(o.box, roi);
    if (static_cast<double>(inside.area()) < model.min_coverage * static_cast<double>(o.box.area())) continue;
    const double shorter = static_cast<double>(std::min(o.box.w, o.box.h));
    if (shorter * rate < model.min_side_px) continue;
    out.push_back(Detection{o.cls, inside, confidence});
  }
  return out;
}

// Drops same-class detections overlapping a higher-confidence one at
// IoU >= threshold (the same object reported from two RoI boxes).
inline std::vector<Detection> merge_duplicate_detections(const std::vector<Detection>& dets, double threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<char> keep(dets.size(), 0);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return dets[k].cls == dets[i].cls && iou(dets[k].box, dets[i].box) >= threshold;
    });
    if (!dup) {
      kept.push_back(i);
      keep[i] = 1;
    }
  }
  std::vector<Detection> out;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (keep[i]) out.push_back(dets[i]);
  return out;
}

struct MatchCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  MatchCounts counts;
};

inline F1Result f1_from_counts(const MatchCounts& c) {
  F1Result r;
  r.counts = c;
  r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

// Greedy one-to-one matching by descending confidence. A detection matches
// the unmatched same-class object of highest IoU, if that IoU reaches the
// threshold.
inline MatchCounts match_detections(const std::vector<Detection>& dets, const FrameObjects& gt,
                                    double iou_threshold = 0.5) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<char> taken(gt.size(), 0);
  MatchCounts c;
  for (std::size_t d : order) {
    double best = -1.0;
    std::size_t best_g = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g] || gt[g].cls != dets[d].cls) continue;
      const double v = iou(dets[d].box, gt[g].box);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g < gt.size()) {
      taken[best_g] = 1;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<std::int64_t>(gt.size()) - c.tp;
  return c;
}

inline F1Result f1_score(const std::vector<Detection>& dets, const FrameObjects& gt, double iou_threshold = 0.5) {
  return f1_from_counts(match_detections(dets, gt, iou_threshold));
}

}  // namespace roiedge
