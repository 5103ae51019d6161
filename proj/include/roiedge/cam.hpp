#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "roiedge/error.hpp"
#include "roiedge/random.hpp"
#include "roiedge/tensor.hpp"

namespace roiedge {

// Per-class channel weights: row i holds the weight of every feature
// channel for class i.
class ClassWeights {
 public:
  ClassWeights() = default;
  ClassWeights(std::size_t classes, std::size_t channels, std::vector<float> values)
      : classes_(classes), channels_(channels), values_(std::move(values)) {
    if (values_.size() != classes_ * channels_) throw ShapeError("class weight matrix has wrong length");
    for (float v : values_)
      if (!std::isfinite(v)) throw InputError("class weights must be finite");
  }

  std::size_t classes() const noexcept { return classes_; }
  std::size_t channels() const noexcept { return channels_; }
  float at(std::size_t cls, std::size_t ch) const { return values_[cls * channels_ + ch]; }
  std::span<const float> row(std::size_t cls) const { return {values_.data() + cls * channels_, channels_}; }

  // Stored as a (K, C, 1) tensor.
  Tensor to_tensor() const { return Tensor(classes_, channels_, 1, values_); }
  static ClassWeights from_tensor(const Tensor& t) {
    if (t.width() != 1) throw ShapeError("class weight tensor must have shape (K, C, 1), got " + t.shape_string());
    return ClassWeights(t.channels(), t.height(), std::vector<float>(t.data().begin(), t.data().end()));
  }

  static ClassWeights random(std::size_t classes, std::size_t channels, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(classes * channels);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return ClassWeights(classes, channels, std::move(v));
  }

  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;

 private:
  std::size_t classes_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> values_;
};

inline void save_class_weights(const ClassWeights& w, const std::filesystem::path& path) {
  save_tensor(w.to_tensor(), path);
}

inline ClassWeights load_class_weights(const std::filesystem::path& path) {
  return ClassWeights::from_tensor(load_tensor(path));
}

inline constexpr int kAggregateClass = -1;

// Per-cell activation values for one crop.
struct ActivationMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;  // row-major
  int class_id = kAggregateClass;
  int crop_id = 0;

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  float& at(std::size_t y, std::size_t x) { return values[y * width + x]; }

  friend bool operator==(const ActivationMap&, const ActivationMap&) = default;
};

// Spatial mean of each channel, accumulated in double.
inline std::vector<double> global_pool(const FeatureMap& f) {
  const Tensor& t = f.tensor;
  if (t.plane_size() == 0 || t.channels() == 0) throw InputError("global_pool on an empty feature map");
  std::vector<double> out(t.channels());
  for (std::size_t c = 0; c < t.channels(); ++c) {
    double sum = 0.0;
    for (float v : t.plane(c)) sum += v;
    out[c] = sum / static_cast<double>(t.plane_size());
  }
  return out;
}

// M_i(x,y) = Σ_c w_i[c] · F_c(x,y). Channels are accumulated in ascending
// order in float, so the value at a cell depends only on that cell's
// feature vector.
inline ActivationMap compute_cam(const FeatureMap& f, const ClassWeights& w, std::size_t cls, int crop_id = 0) {
  const Tensor& t = f.tensor;
  if (w.channels() != t.channels()) {
    throw ShapeError("class weights have " + std::to_string(w.channels()) + " channels, feature map has " +
                     std::to_string(t.channels()));
  }
  if (cls >= w.classes()) throw RangeError("class index " + std::to_string(cls) + " out of range");
  ActivationMap m{t.height(), t.width(), std::vector<float>(t.plane_size(), 0.0f), static_cast<int>(cls), crop_id};
  const auto weights = w.row(cls);
  for (std::size_t c = 0; c < t.channels(); ++c) {
    const float wc = weights[c];
    const auto plane = t.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) m.values[i] += wc * plane[i];
  }
  return m;
}

enum class Aggregation { kMax, kSum };

inline ActivationMap aggregate_classes(const std::vector<ActivationMap>& maps, Aggregation mode = Aggregation::kMax) {
  if (maps.empty()) throw InputError("aggregate_classes needs at least one map");
  ActivationMap out = maps.front();
  out.class_id = maps.size() == 1 ? maps.front().class_id : kAggregateClass;
  for (std::size_t k = 1; k < maps.size(); ++k) {
    const auto& m = maps[k];
    if (m.height != out.height || m.width != out.width) throw ShapeError("activation maps differ in size");
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = mode == Aggregation::kMax ? std::max(out.values[i], m.values[i]) : out.values[i] + m.values[i];
    }
  }
  return out;
}

// Min-max normalization to [0, 1]; a constant map becomes all zeros.
inline ActivationMap normalize_map(const ActivationMap& m) {
  ActivationMap out = m;
  if (m.values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(m.values.begin(), m.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(out.values.begin(), out.values.end(), 0.0f);
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double v = (static_cast<double>(m.values[i]) - lo) / span;
    out.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

}  // namespace roiedge
