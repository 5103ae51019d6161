#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "roiedge/cam.hpp"
#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"
#include "roiedge/partition.hpp"

namespace roiedge {

struct HeatMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0/1
  int crop_id = 0;
  double threshold = 0.0;

  bool at(std::size_t y, std::size_t x) const { return bits[y * width + x] != 0; }
};

inline HeatMask threshold_mask(const ActivationMap& m, double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw ParameterError("heat threshold must be in (0, 1)");
  HeatMask mask{m.height, m.width, std::vector<std::uint8_t>(m.values.size(), 0), m.crop_id, sigma};
  for (std::size_t i = 0; i < m.values.size(); ++i) mask.bits[i] = static_cast<double>(m.values[i]) >= sigma ? 1 : 0;
  return mask;
}

struct Cell {
  std::int32_t y = 0;
  std::int32_t x = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// One 8-connected component; cells are in raster order.
struct Component {
  std::vector<Cell> cells;
  Rect bounds;  // in cells
};

namespace detail {

class UnionFind {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;  // smaller label is the root
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace detail

// Two-pass labeling with union-find, 8-connectivity. Components are
// returned ordered by their first cell in raster order.
inline std::vector<Component> connected_components(const HeatMask& mask) {
  const std::size_t h = mask.height;
  const std::size_t w = mask.width;
  std::vector<std::uint32_t> labels(h * w, 0);
  detail::UnionFind uf;
  uf.make();  // label 0 = background

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.bits[y * w + x]) continue;
      // Already-visited neighbours: W, NW, N, NE.
      std::uint32_t found = 0;
      auto visit = [&](std::size_t ny, std::size_t nx) {
        const std::uint32_t l = labels[ny * w + nx];
        if (l == 0) return;
        if (found == 0) {
          found = l;
        } else {
          uf.unite(found, l);
        }
      };
      if (x > 0) visit(y, x - 1);
      if (y > 0) {
        if (x > 0) visit(y - 1, x - 1);
        visit(y - 1, x);
        if (x + 1 < w) visit(y - 1, x + 1);
      }
      labels[y * w + x] = found != 0 ? found : uf.make();
    }
  }

  std::vector<Component> out;
  std::vector<std::int64_t> slot;  // root label -> index in out
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint32_t l = labels[y * w + x];
      if (l == 0) continue;
      const std::uint32_t root = uf.find(l);
      if (slot.size() <= root) slot.resize(root + 1, -1);
      if (slot[root] < 0) {
        slot[root] = static_cast<std::int64_t>(out.size());
        out.emplace_back();
      }
      out[static_cast<std::size_t>(slot[root])].cells.push_back(
          Cell{static_cast<std::int32_t>(y), static_cast<std::int32_t>(x)});
    }
  }
  for (auto& c : out) {
    std::int64_t x0 = c.cells.front().x, x1 = x0, y0 = c.cells.front().y, y1 = y0;
    for (const auto& cell : c.cells) {
      x0 = std::min<std::int64_t>(x0, cell.x);
      x1 = std::max<std::int64_t>(x1, cell.x);
      y0 = std::min<std::int64_t>(y0, cell.y);
      y1 = std::max<std::int64_t>(y1, cell.y);
    }
    c.bounds = Rect::from_corners(x0, y0, x1 + 1, y1 + 1);
  }
  return out;
}

struct RoiBox {
  Rect rect;  // frame pixels
  int part = 0;
  double heat_mass = 0.0;  // sum of normalized activation over the box's cells
  double mean_heat = 0.0;
  std::int64_t cells = 0;
  double rate = 0.0;  // assigned down-sampling rate; 0 until assigned
  bool valid = false;

  std::int64_t area() const noexcept { return rect.area(); }

  friend bool operator==(const RoiBox&, const RoiBox&) = default;
};

// Tight cell bounds of each component → frame pixels → dilated by pad and
// clamped to the part rectangle. Heat statistics come from the normalized
// map over the component's tight cell bounds.
inline std::vector<RoiBox> boxes_from_components(const std::vector<Component>& components, const ActivationMap& heat,
                                                 const CropRef& crop, std::int64_t stride, std::int64_t pad,
                                                 const Rect& frame) {
  std::vector<RoiBox> out;
  out.reserve(components.size());
  for (const auto& c : components) {
    RoiBox b;
    b.part = crop.part;
    b.rect = clamp_to(dilate(map_box_to_frame(c.bounds, crop, stride, frame), pad), crop.pixels);
    double mass = 0.0;
    for (std::int64_t y = c.bounds.y; y < c.bounds.y1(); ++y)
      for (std::int64_t x = c.bounds.x; x < c.bounds.x1(); ++x)
        mass += heat.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    b.cells = c.bounds.area();
    b.heat_mass = mass;
    b.mean_heat = b.cells > 0 ? mass / static_cast<double>(b.cells) : 0.0;
    out.push_back(b);
  }
  return out;
}

// Merges any pair with IoU >= threshold into its bounding union until no
// such pair remains. Heat mass and cell counts add.
inline std::vector<RoiBox> merge_overlapping(std::vector<RoiBox> boxes, double iou_threshold) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < boxes.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        if (iou(boxes[i].rect, boxes[j].rect) >= iou_threshold) {
          RoiBox& a = boxes[i];
          const RoiBox& b = boxes[j];
          a.rect = bounding_union(a.rect, b.rect);
          a.heat_mass += b.heat_mass;
          a.cells += b.cells;
          a.mean_heat = a.cells > 0 ? a.heat_mass / static_cast<double>(a.cells) : 0.0;
          boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
          break;
        }
      }
    }
  }
  return boxes;
}

struct ValidityPolicy {
  std::int64_t min_area = 32 * 32;
  double min_mean_heat = 0.55;
  std::size_t max_boxes = 6;  // 0 disables the cap
};

// Keeps boxes passing the area and mean-heat filters. With a cap, the
// max_boxes highest by heat mass survive (ties keep input order). The result
// preserves input order either way.
inline std::vector<RoiBox> select_valid(const std::vector<RoiBox>& boxes, const ValidityPolicy& policy) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].area() >= policy.min_area && boxes[i].mean_heat >= policy.min_mean_heat) keep.push_back(i);
  }
  if (policy.max_boxes > 0 && keep.size() > policy.max_boxes) {
    std::stable_sort(keep.begin(), keep.end(),
                     [&](std::size_t a, std::size_t b) { return boxes[a].heat_mass > boxes[b].heat_mass; });
    keep.resize(policy.max_boxes);
    std::sort(keep.begin(), keep.end());
  }
  std::vector<RoiBox> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) {
    out.push_back(boxes[i]);
    out.back().valid = true;
  }
  return out;
}

struct RoiConfig {
  double heat_threshold = 0.5;
  std::int64_t pad = 8;
  double merge_iou = 0.2;
  ValidityPolicy validity{};
  Aggregation aggregation = Aggregation::kMax;
  bool include_top_parts = false;  // run CAM on P1/P2 as well

  void validate() const {
    if (!(heat_threshold > 0.0 && heat_threshold < 1.0)) throw ConfigError("roi.heat_threshold must be in (0, 1)");
    if (pad < 0) throw ConfigError("roi.pad must be >= 0");
    if (!(merge_iou > 0.0 && merge_iou <= 1.0)) throw ConfigError("roi.merge_iou must be in (0, 1]");
    if (validity.min_area < 0) throw ConfigError("roi.min_area must be >= 0");
  }

  std::vector<int> parts() const { return include_top_parts ? std::vector<int>{1, 2, 3, 4, 5} : std::vector<int>{3, 4, 5}; }
};

// The normalized, class-aggregated activation map of one crop.
inline ActivationMap crop_heat(const FeatureMap& crop_features, const ClassWeights& weights, int crop_id,
                               Aggregation aggregation) {
  std::vector<ActivationMap> maps;
  maps.reserve(weights.classes());
  for (std::size_t k = 0; k < weights.classes(); ++k) maps.push_back(compute_cam(crop_features, weights, k, crop_id));
  return normalize_map(aggregate_classes(maps, aggregation));
}

// Valid RoI boxes of one part.
inline std::vector<RoiBox> extract_part_rois(const FeatureMap& features, const ClassWeights& weights,
                                             const PartitionLayout& layout, int part, const RoiConfig& cfg) {
  const CropRef crop = make_crop(layout, part, features.stride);
  const FeatureMap crop_features = crop_feature(features, crop);
  const ActivationMap heat = crop_heat(crop_features, weights, part, cfg.aggregation);
  const HeatMask mask = threshold_mask(heat, cfg.heat_threshold);
  auto boxes = boxes_from_components(connected_components(mask), heat, crop, features.stride, cfg.pad, layout.frame());
  return select_valid(merge_overlapping(std::move(boxes), cfg.merge_iou), cfg.validity);
}

// Valid boxes of every processed part, concatenated in part order.
inline std::vector<RoiBox> extract_frame_rois(const FeatureMap& features, const ClassWeights& weights,
                                              const PartitionLayout& layout, const RoiConfig& cfg) {
  const std::int64_t gw = static_cast<std::int64_t>(features.tensor.width());
  const std::int64_t gh = static_cast<std::int64_t>(features.tensor.height());
  if (gw != (layout.frame_width + features.stride - 1) / features.stride ||
      gh != (layout.frame_height + features.stride - 1) / features.stride) {
    throw ShapeError("feature map " + features.tensor.shape_string() + " does not match frame " +
                     std::to_string(layout.frame_width) + "x" + std::to_string(layout.frame_height) + " at stride " +
                     std::to_string(features.stride));
  }
  std::vector<RoiBox> out;
  for (int part : cfg.parts()) {
    auto boxes = extract_part_rois(features, weights, layout, part, cfg);
    out.insert(out.end(), boxes.begin(), boxes.end());
  }
  return out;
}

}  // namespace roiedge
