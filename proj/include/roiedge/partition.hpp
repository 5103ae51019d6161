#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"
#include "roiedge/ground_truth.hpp"
#include "roiedge/tensor.hpp"

namespace roiedge {

inline constexpr int kPartCount = 5;

// "Four plus one" layout. P1/P2 split the top band left/right, P3/P4 split
// the bottom band, P5 is centered. Parts are 1-based.
struct PartitionLayout {
  std::int64_t frame_width = 0;
  std::int64_t frame_height = 0;
  double top_fraction = 0.5;
  double center_fraction = 0.5;
  std::array<Rect, kPartCount> parts{};

  const Rect& part(int id) const {
    if (id < 1 || id > kPartCount) throw RangeError("part id " + std::to_string(id) + " out of range");
    return parts[static_cast<std::size_t>(id - 1)];
  }
  Rect frame() const noexcept { return Rect{0, 0, frame_width, frame_height}; }
  Rect top_band() const noexcept { return Rect{0, 0, frame_width, parts[0].h}; }
};

inline PartitionLayout make_layout(std::int64_t width, std::int64_t height, double top_fraction = 0.5,
                                   double center_fraction = 0.5) {
  if (width <= 0 || height <= 0) throw ParameterError("frame dimensions must be positive");
  if (!(top_fraction > 0.0 && top_fraction < 1.0)) throw ParameterError("top_fraction must be in (0, 1)");
  if (!(center_fraction > 0.0 && center_fraction <= 1.0)) throw ParameterError("center_fraction must be in (0, 1]");

  const auto top = static_cast<std::int64_t>(std::llround(static_cast<double>(height) * top_fraction));
  const std::int64_t left = width / 2;
  const auto cw = static_cast<std::int64_t>(std::llround(static_cast<double>(width) * center_fraction));
  const auto ch = static_cast<std::int64_t>(std::llround(static_cast<double>(height) * center_fraction));

  PartitionLayout l;
  l.frame_width = width;
  l.frame_height = height;
  l.top_fraction = top_fraction;
  l.center_fraction = center_fraction;
  l.parts[0] = Rect{0, 0, left, top};
  l.parts[1] = Rect{left, 0, width - left, top};
  l.parts[2] = Rect{0, top, left, height - top};
  l.parts[3] = Rect{left, top, width - left, height - top};
  l.parts[4] = Rect{(width - cw) / 2, (height - ch) / 2, cw, ch};
  for (int i = 0; i < kPartCount; ++i) {
    if (l.parts[static_cast<std::size_t>(i)].empty()) {
      throw ParameterError("layout part P" + std::to_string(i + 1) + " has zero area");
    }
  }
  return l;
}

// A part's rectangle in frame pixels and the feature cells that cover it.
struct CropRef {
  int part = 0;
  Rect pixels;
  Rect cells;
};

// Feature cells covering a pixel rectangle, rounded outward and clipped to
// the feature grid.
inline Rect cells_covering(const Rect& px, std::int64_t stride, std::int64_t grid_w, std::int64_t grid_h) {
  const auto floor_div = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const std::int64_t x0 = std::max<std::int64_t>(0, floor_div(px.x, stride));
  const std::int64_t y0 = std::max<std::int64_t>(0, floor_div(px.y, stride));
  const std::int64_t x1 = std::min(grid_w, floor_div(px.x1() + stride - 1, stride));
  const std::int64_t y1 = std::min(grid_h, floor_div(px.y1() + stride - 1, stride));
  return Rect::from_corners(x0, y0, std::max(x0, x1), std::max(y0, y1));
}

inline CropRef make_crop(const PartitionLayout& layout, int part, std::int64_t stride) {
  const std::int64_t gw = (layout.frame_width + stride - 1) / stride;
  const std::int64_t gh = (layout.frame_height + stride - 1) / stride;
  const Rect& px = layout.part(part);
  return CropRef{part, px, cells_covering(px, stride, gw, gh)};
}

// Crop covering the whole feature map, for single-crop processing.
inline CropRef full_frame_crop(const FeatureMap& f, std::int64_t frame_w, std::int64_t frame_h) {
  return CropRef{0, Rect{0, 0, frame_w, frame_h},
                 Rect{0, 0, static_cast<std::int64_t>(f.tensor.width()), static_cast<std::int64_t>(f.tensor.height())}};
}

inline FeatureMap crop_feature(const FeatureMap& f, const CropRef& c) {
  const Tensor& t = f.tensor;
  const Rect& r = c.cells;
  if (r.x < 0 || r.y < 0 || r.empty() || r.x1() > static_cast<std::int64_t>(t.width()) ||
      r.y1() > static_cast<std::int64_t>(t.height())) {
    throw RangeError("crop cells out of feature bounds");
  }
  Tensor out(t.channels(), static_cast<std::size_t>(r.h), static_cast<std::size_t>(r.w));
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    for (std::int64_t y = 0; y < r.h; ++y) {
      const auto src = t.plane(ch).subspan(static_cast<std::size_t>(r.y + y) * t.width() + static_cast<std::size_t>(r.x),
                                           static_cast<std::size_t>(r.w));
      std::copy(src.begin(), src.end(), out.plane(ch).begin() + y * r.w);
    }
  }
  return FeatureMap{std::move(out), f.stride};
}

// Box in crop-local feature cells → frame pixels. Cell (0,0) of the crop is
// feature cell c.cells.(x,y) of the frame grid.
inline Rect map_box_to_frame(const Rect& cell_box, const CropRef& c, std::int64_t stride, const Rect& frame) {
  const Rect px{(c.cells.x + cell_box.x) * stride, (c.cells.y + cell_box.y) * stride, cell_box.w * stride,
                cell_box.h * stride};
  return clamp_to(px, frame);
}

struct OccupancyStats {
  std::int64_t frames = 0;
  // Fraction of frames with at least one object centered in the top band
  // (P1 ∪ P2), and in P5 ∩ (P1 ∪ P2).
  double top_band = 0.0;
  double center_top = 0.0;
  std::int64_t top_band_frames = 0;
  std::int64_t center_top_frames = 0;
  bool empty_ground_truth = false;
};

inline OccupancyStats occupancy_stats(const std::vector<GroundTruthObject>& gt, const PartitionLayout& layout,
                                      std::int64_t frame_count) {
  OccupancyStats s;
  s.frames = frame_count;
  if (gt.empty() || frame_count <= 0) {
    s.empty_ground_truth = true;
    return s;
  }
  const Rect top = layout.top_band();
  const Rect center_top = intersect(layout.part(5), top);
  std::vector<char> in_top(static_cast<std::size_t>(frame_count), 0);
  std::vector<char> in_center_top(static_cast<std::size_t>(frame_count), 0);
  for (const auto& o : gt) {
    if (o.frame < 0 || o.frame >= frame_count) throw RangeError("ground-truth frame index out of range");
    const double cx = o.box.center_x();
    const double cy = o.box.center_y();
    if (top.contains_point(cx, cy)) in_top[static_cast<std::size_t>(o.frame)] = 1;
    if (center_top.contains_point(cx, cy)) in_center_top[static_cast<std::size_t>(o.frame)] = 1;
  }
  for (std::int64_t f = 0; f < frame_count; ++f) {
    s.top_band_frames += in_top[static_cast<std::size_t>(f)];
    s.center_top_frames += in_center_top[static_cast<std::size_t>(f)];
  }
  s.top_band = static_cast<double>(s.top_band_frames) / static_cast<double>(frame_count);
  s.center_top = static_cast<double>(s.center_top_frames) / static_cast<double>(frame_count);
  return s;
}

}  // namespace roiedge
