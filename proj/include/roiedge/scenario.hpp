#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roiedge/cam.hpp"
#include "roiedge/features.hpp"
#include "roiedge/ground_truth.hpp"
#include "roiedge/link.hpp"
#include "roiedge/random.hpp"
#include "roiedge/tensor.hpp"

namespace roiedge {

inline constexpr int kSyntheticClasses = 3;  // car, pedestrian, cyclist

// Procedural street-scene frames: sky above a horizon, road below, a fixed
// low-amplitude texture, and ground-truth objects painted as solid
// class-coloured rectangles with a darker lower edge.
class FrameRenderer {
 public:
  FrameRenderer(std::int64_t width, std::int64_t height, std::uint64_t seed)
      : background_(width, height), horizon_(static_cast<std::int64_t>(std::llround(0.45 * height))) {
    for (std::int64_t y = 0; y < height; ++y) {
      std::array<double, 3> base;
      if (y < horizon_) {
        const double t = static_cast<double>(y) / static_cast<double>(std::max<std::int64_t>(1, horizon_));
        base = {110 + 60 * t, 150 + 40 * t, 205 + 10 * t};
      } else {
        const double t = static_cast<double>(y - horizon_) / static_cast<double>(std::max<std::int64_t>(1, height - horizon_));
        base = {105 - 20 * t, 105 - 20 * t, 110 - 20 * t};
      }
      for (std::int64_t x = 0; x < width; ++x) {
        const std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(y * width + x));
        for (int c = 0; c < 3; ++c) {
          const int noise = static_cast<int>((h >> (8 * c)) & 7u) - 3;
          background_.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(static_cast<int>(base[static_cast<std::size_t>(c)]) + noise, 0, 255));
        }
      }
    }
  }

  std::int64_t width() const noexcept { return background_.width(); }
  std::int64_t height() const noexcept { return background_.height(); }
  std::int64_t horizon() const noexcept { return horizon_; }

  static std::array<std::uint8_t, 3> class_color(int cls) {
    switch (cls % kSyntheticClasses) {
      case 0: return {205, 35, 30};
      case 1: return {235, 205, 40};
      default: return {40, 185, 75};
    }
  }

  Image render(const FrameObjects& objects) const {
    Image img = background_;
    for (const auto& o : objects) {
      const Rect r = intersect(o.box, img.bounds());
      const auto col = class_color(o.cls);
      const std::int64_t shade_from = r.y + (r.h * 4) / 5;
      for (std::int64_t y = r.y; y < r.y1(); ++y) {
        const bool shade = y >= shade_from;
        const std::array<std::uint8_t, 3> c = shade ? std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(col[0] / 3),
                                                                                   static_cast<std::uint8_t>(col[1] / 3),
                                                                                   static_cast<std::uint8_t>(col[2] / 3)}
                                                    : col;
        for (std::int64_t x = r.x; x < r.x1(); ++x) img.set(x, y, c);
      }
    }
    return img;
  }

 private:
  Image background_;
  std::int64_t horizon_;
};

enum class DensityProfile { kRoad, kCityOverpass, kEmpty };

inline DensityProfile parse_density(const std::string& s) {
  if (s == "road") return DensityProfile::kRoad;
  if (s == "city-overpass") return DensityProfile::kCityOverpass;
  if (s == "empty") return DensityProfile::kEmpty;
  throw ConfigError("unknown density profile '" + s + "' (expected road, city-overpass or empty)");
}

inline const char* density_name(DensityProfile d) {
  switch (d) {
    case DensityProfile::kRoad: return "road";
    case DensityProfile::kCityOverpass: return "city-overpass";
    default: return "empty";
  }
}

struct ScenarioParams {
  std::int64_t frames = 60;
  int fps = 30;
  std::int64_t width = 3840;
  std::int64_t height = 2160;
  DensityProfile density = DensityProfile::kRoad;
  int road_tracks = 3;        // concurrent objects below the top band
  double top_fraction = 0.5;  // band that top-region objects must stay in
  std::vector<double> bandwidth_mbps{80, 40, 20, 60};  // one step per bandwidth_step_s
  double bandwidth_step_s = 0.5;
  double g_max = 0.5;
  double base_latency_ms = 10.0;
  int calibration_frames = 12;
};

// Share of frames that carry one object centered in the top band.
inline double top_band_share(DensityProfile d) {
  switch (d) {
    case DensityProfile::kRoad: return 0.01;
    case DensityProfile::kCityOverpass: return 0.20;
    default: return 0.0;
  }
}

namespace detail {

inline Rect random_object_size(Rng& rng, int cls) {
  switch (cls) {
    case 0: return Rect{0, 0, rng.uniform_int(150, 260), rng.uniform_int(100, 160)};
    case 1: return Rect{0, 0, rng.uniform_int(36, 64), rng.uniform_int(100, 170)};
    default: return Rect{0, 0, rng.uniform_int(70, 110), rng.uniform_int(120, 170)};
  }
}

// Keeps the box center inside [lo_y, hi_y) vertically and the box inside the
// frame horizontally, reflecting velocity at the edges.
struct Track {
  int cls = 0;
  Rect size;
  double cx = 0, cy = 0, vx = 0, vy = 0;
  std::int64_t first = 0, last = 0;  // inclusive frame range
  double lo_y = 0, hi_y = 0;
};

inline void advance(Track& t, std::int64_t width) {
  t.cx += t.vx;
  t.cy += t.vy;
  const double half_w = static_cast<double>(t.size.w) / 2.0;
  if (t.cx < half_w || t.cx > static_cast<double>(width) - half_w) {
    t.vx = -t.vx;
    t.cx = std::clamp(t.cx, half_w, static_cast<double>(width) - half_w);
  }
  if (t.cy < t.lo_y || t.cy >= t.hi_y) {
    t.vy = -t.vy;
    t.cy = std::clamp(t.cy, t.lo_y, t.hi_y - 1.0);
  }
}

inline Rect track_box(const Track& t) {
  return Rect{static_cast<std::int64_t>(std::llround(t.cx - static_cast<double>(t.size.w) / 2.0)),
              static_cast<std::int64_t>(std::llround(t.cy - static_cast<double>(t.size.h) / 2.0)), t.size.w, t.size.h};
}

}  // namespace detail

// Object tracks for a synthetic clip. Road tracks live below the top band
// and span the whole clip; one extra track sits in the top band for
// round(share · frames) consecutive frames.
inline GroundTruth generate_ground_truth(const ScenarioParams& p, std::uint64_t seed) {
  GroundTruth gt(static_cast<std::size_t>(p.frames));
  if (p.density == DensityProfile::kEmpty) return gt;
  Rng rng(seed);
  const double top = std::round(static_cast<double>(p.height) * p.top_fraction);
  std::vector<detail::Track> tracks;
  for (int i = 0; i < p.road_tracks; ++i) {
    detail::Track t;
    t.cls = i % kSyntheticClasses;
    t.size = detail::random_object_size(rng, t.cls);
    t.lo_y = top + static_cast<double>(t.size.h) / 2.0 + 16.0;
    t.hi_y = static_cast<double>(p.height) - static_cast<double>(t.size.h) / 2.0 - 16.0;
    t.cx = rng.uniform(static_cast<double>(t.size.w), static_cast<double>(p.width - t.size.w));
    t.cy = rng.uniform(t.lo_y, t.hi_y);
    t.vx = rng.uniform(-12.0, 12.0);
    t.vy = rng.uniform(-3.0, 3.0);
    t.first = 0;
    t.last = p.frames - 1;
    tracks.push_back(t);
  }
  const auto top_frames = static_cast<std::int64_t>(std::llround(top_band_share(p.density) * static_cast<double>(p.frames)));
  if (top_frames > 0) {
    detail::Track t;
    t.cls = 0;
    t.size = Rect{0, 0, rng.uniform_int(90, 140), rng.uniform_int(60, 90)};
    t.lo_y = static_cast<double>(t.size.h) / 2.0 + 16.0;
    t.hi_y = std::max(t.lo_y + 1.0, top - static_cast<double>(t.size.h) / 2.0 - 16.0);
    t.cx = rng.uniform(static_cast<double>(t.size.w), static_cast<double>(p.width - t.size.w));
    t.cy = rng.uniform(t.lo_y, t.hi_y);
    t.vx = rng.uniform(-8.0, 8.0);
    t.vy = 0.0;
    t.first = rng.uniform_int(0, p.frames - top_frames);
    t.last = t.first + top_frames - 1;
    tracks.push_back(t);
  }
  for (std::int64_t f = 0; f < p.frames; ++f) {
    for (auto& t : tracks) {
      if (f >= t.first && f <= t.last) {
        const Rect box = intersect(detail::track_box(t), Rect{0, 0, p.width, p.height});
        if (!box.empty()) gt.add(GroundTruthObject{static_cast<int>(f), t.cls, box});
        detail::advance(t, p.width);
      }
    }
  }
  return gt;
}

inline BandwidthTrace generate_bandwidth_trace(const ScenarioParams& p) {
  BandwidthTrace tr;
  for (std::size_t i = 0; i < p.bandwidth_mbps.size(); ++i)
    tr.samples.push_back({static_cast<double>(i) * p.bandwidth_step_s, p.bandwidth_mbps[i] * 1e6});
  tr.validate();
  return tr;
}

// Linear probe standing in for trained classifier weights: one-vs-rest
// ridge regression of "cell center lies in an object of class k" on the
// cell's feature vector. Cells near an object without owning it are left
// out as ambiguous. The intercept is fitted and dropped (min-max
// normalization of the map cancels it anyway).
inline ClassWeights fit_class_weights(const std::vector<FeatureMap>& features, const std::vector<FrameObjects>& objects,
                                      int classes, double ridge = 1e-3) {
  if (features.size() != objects.size()) throw ShapeError("fit_class_weights: one object list per feature map");
  if (features.empty()) throw InputError("fit_class_weights: no calibration frames");
  if (classes < 1) throw ParameterError("fit_class_weights: classes must be >= 1");
  const auto channels = static_cast<Eigen::Index>(features.front().tensor.channels());
  const Eigen::Index dim = channels + 1;  // last column is the intercept
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(dim, classes);
  Eigen::VectorXd row(dim);

  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeatureMap& fm = features[i];
    if (static_cast<Eigen::Index>(fm.tensor.channels()) != channels) throw ShapeError("fit_class_weights: channel mismatch");
    const std::int64_t s = fm.stride;
    for (std::size_t y = 0; y < fm.tensor.height(); ++y) {
      for (std::size_t x = 0; x < fm.tensor.width(); ++x) {
        const Rect cell{static_cast<std::int64_t>(x) * s, static_cast<std::int64_t>(y) * s, s, s};
        int owner = -1;
        bool touches = false;
        for (const auto& o : objects[i]) {
          if (intersect(dilate(o.box, s), cell).area() > 0) touches = true;
          if (o.box.contains_point(cell.center_x(), cell.center_y())) owner = o.cls;
        }
        if (owner < 0 && touches) continue;
        for (Eigen::Index c = 0; c < channels; ++c) row[c] = fm.tensor.at(static_cast<std::size_t>(c), y, x);
        row[channels] = 1.0;
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
        if (owner >= 0 && owner < classes) xty.col(owner) += row;
      }
    }
  }
  xtx.triangularView<Eigen::StrictlyUpper>() = xtx.transpose();
  const double scale = xtx.diagonal().head(channels).mean();
  for (Eigen::Index c = 0; c < channels; ++c) xtx(c, c) += ridge * std::max(scale, 1e-12);
  const Eigen::MatrixXd sol = xtx.ldlt().solve(xty);

  std::vector<float> w(static_cast<std::size_t>(classes * channels));
  for (Eigen::Index k = 0; k < classes; ++k)
    for (Eigen::Index c = 0; c < channels; ++c) w[static_cast<std::size_t>(k * channels + c)] = static_cast<float>(sol(c, k));
  return ClassWeights(static_cast<std::size_t>(classes), static_cast<std::size_t>(channels), std::move(w));
}

// Calibration clip: objects of every class scattered over the lower part of
// the frame, rendered with the scenario's renderer, then probed.
inline ClassWeights calibrate_class_weights(const FeatureExtractor& extractor, const FrameRenderer& renderer,
                                            int frames, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureMap> feats;
  std::vector<FrameObjects> objs;
  const std::int64_t w = renderer.width();
  const std::int64_t h = renderer.height();
  for (int f = 0; f < frames; ++f) {
    FrameObjects list;
    for (int k = 0; k < 6; ++k) {
      const int cls = k % kSyntheticClasses;
      Rect r = detail::random_object_size(rng, cls);
      r.x = rng.uniform_int(0, w - r.w);
      r.y = rng.uniform_int(renderer.horizon() / 2, h - r.h);
      list.push_back(GroundTruthObject{f, cls, r});
    }
    feats.push_back(extractor.extract(renderer.render(list)));
    objs.push_back(std::move(list));
  }
  return fit_class_weights(feats, objs, kSyntheticClasses);
}

}  // namespace roiedge
