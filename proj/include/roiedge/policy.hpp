#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"
#include "roiedge/random.hpp"

namespace roiedge {

// Allowed down-sampling rates, strictly ascending, ending at 1.0.
class RateSet {
 public:
  RateSet() : RateSet({0.25, 0.5, 0.75, 1.0}) {}
  explicit RateSet(std::vector<double> rates) : rates_(std::move(rates)) {
    if (rates_.empty()) throw ParameterError("rate set is empty");
    if (!(rates_.front() > 0.0)) throw ParameterError("minimum rate must be > 0");
    for (std::size_t i = 1; i < rates_.size(); ++i)
      if (!(rates_[i] > rates_[i - 1])) throw ParameterError("rate set must be strictly ascending");
    if (rates_.back() != 1.0) throw ParameterError("rate set must end at 1.0");
  }

  std::size_t size() const noexcept { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_[i]; }
  double min() const noexcept { return rates_.front(); }
  const std::vector<double>& values() const noexcept { return rates_; }

  // Index of an exact member, or nullopt.
  std::optional<std::size_t> index_of(double r) const {
    for (std::size_t i = 0; i < rates_.size(); ++i)
      if (rates_[i] == r) return i;
    return std::nullopt;
  }

  friend bool operator==(const RateSet&, const RateSet&) = default;

 private:
  std::vector<double> rates_;
};

enum class SizeClass { kSmall, kMedium, kLarge };

// Expected detection accuracy per rate for each box-size class. Size class
// is decided by the box's full-resolution pixel area.
struct AccuracyProfile {
  std::vector<double> small{0.50, 0.70, 0.80, 0.85};
  std::vector<double> medium{0.60, 0.80, 0.90, 0.95};
  std::vector<double> large{0.63, 0.83, 0.93, 0.98};
  std::int64_t small_max_area = 128 * 128;    // area < this → small
  std::int64_t large_min_area = 1024 * 1024;  // area > this → large

  SizeClass classify(std::int64_t area) const noexcept {
    if (area < small_max_area) return SizeClass::kSmall;
    if (area > large_min_area) return SizeClass::kLarge;
    return SizeClass::kMedium;
  }

  const std::vector<double>& curve(SizeClass s) const noexcept {
    switch (s) {
      case SizeClass::kSmall: return small;
      case SizeClass::kLarge: return large;
      default: return medium;
    }
  }

  // Accuracy at an arbitrary rate: exact at set members, linear in between,
  // flat outside.
  double at(const RateSet& rates, std::int64_t area, double r) const {
    const auto& c = curve(classify(area));
    if (r <= rates[0]) return c.front();
    for (std::size_t i = 1; i < rates.size(); ++i) {
      if (r <= rates[i]) {
        const double t = (r - rates[i - 1]) / (rates[i] - rates[i - 1]);
        return c[i - 1] + t * (c[i] - c[i - 1]);
      }
    }
    return c.back();
  }

  void validate(const RateSet& rates) const {
    for (const auto* c : {&small, &medium, &large}) {
      if (c->size() != rates.size()) throw ConfigError("accuracy profile length must match the rate set");
      for (std::size_t i = 0; i < c->size(); ++i) {
        if ((*c)[i] < 0.0 || (*c)[i] > 1.0) throw ConfigError("accuracy values must lie in [0, 1]");
        if (i > 0 && (*c)[i] < (*c)[i - 1]) throw ConfigError("accuracy profile must be non-decreasing in rate");
      }
    }
    if (small_max_area > large_min_area) throw ConfigError("size-class thresholds are inverted");
  }

  friend bool operator==(const AccuracyProfile&, const AccuracyProfile&) = default;
};

inline std::int64_t scaled_pixels(const Rect& b, double r) { return scaled_extent(b.w, r) * scaled_extent(b.h, r); }

// Edge-side resource model. Latency and GPU share both scale with the pixel
// count of the down-sampled box relative to a reference input.
struct CostProfile {
  double latency_ms = 10.0;  // λ: latency of one reference-size input
  double gpu_share = 0.05;   // γ: GPU share of one reference-size input
  double reference_pixels = 640.0 * 640.0;
  double latency_weight = 0.5;
  double gpu_weight = 0.5;
  double latency_norm = 10.0;
  double gpu_norm = 0.05;

  double latency(const Rect& b, double r) const {
    return latency_ms * static_cast<double>(scaled_pixels(b, r)) / reference_pixels;
  }
  double gpu(const Rect& b, double r) const {
    return gpu_share * static_cast<double>(scaled_pixels(b, r)) / reference_pixels;
  }
  double cost(const Rect& b, double r) const {
    return latency_weight * latency(b, r) / latency_norm + gpu_weight * gpu(b, r) / gpu_norm;
  }

  void validate() const {
    if (latency_ms < 0 || gpu_share < 0 || latency_weight < 0 || gpu_weight < 0)
      throw ConfigError("cost profile coefficients must be non-negative");
    if (!(reference_pixels > 0) || !(latency_norm > 0) || !(gpu_norm > 0))
      throw ConfigError("cost profile normalizers must be positive");
  }

  friend bool operator==(const CostProfile&, const CostProfile&) = default;
};

// Encoded size of a down-sampled box: ceil(w·r)·ceil(h·r)·3·κ bytes.
struct SizeModel {
  double encoding_factor = 0.1;  // κ

  double bytes(const Rect& b, double r) const {
    return static_cast<double>(scaled_pixels(b, r)) * 3.0 * encoding_factor;
  }
  double frame_bytes(std::int64_t width, std::int64_t height) const {
    return static_cast<double>(width * height) * 3.0 * encoding_factor;
  }

  void validate() const {
    if (!(encoding_factor > 0.0 && encoding_factor <= 1.0)) throw ConfigError("encoding factor must be in (0, 1]");
  }

  friend bool operator==(const SizeModel&, const SizeModel&) = default;
};

enum class Solver { kHillClimb, kBruteForce };

struct PolicyConfig {
  double omega = 0.1;
  RateSet rates{};
  AccuracyProfile accuracy{};
  CostProfile cost{};
  SizeModel size{};
  Solver solver = Solver::kHillClimb;
  int starts = 24;
  std::uint64_t enumeration_cap = 1'000'000;
  std::optional<double> rate_override;  // bypasses the solver with a uniform rate
  bool adaptive_frequency = true;

  void validate() const {
    if (!(omega >= 0.0)) throw ConfigError("policy.omega must be >= 0");
    accuracy.validate(rates);
    cost.validate();
    size.validate();
    if (starts < 2) throw ConfigError("policy.starts must be >= 2");
    if (rate_override && !(*rate_override > 0.0 && *rate_override <= 1.0))
      throw ConfigError("policy.rate_override must be in (0, 1]");
  }
};

// Per-frame resource budgets: bytes on the link (C1) and edge GPU share (C2).
struct Budget {
  double bytes = std::numeric_limits<double>::infinity();
  double gpu = std::numeric_limits<double>::infinity();
};

// Per-frame byte budget from link bandwidth: bps · (1/fps) / 8.
inline double frame_byte_budget(double bandwidth_bps, double fps) { return bandwidth_bps / fps / 8.0; }

struct RateAssignment {
  std::vector<double> rates;
  std::vector<std::size_t> levels;  // indices into the RateSet
  double utility = 0.0;
  double bytes = 0.0;
  double gpu = 0.0;
  bool feasible = false;

  friend bool operator==(const RateAssignment&, const RateAssignment&) = default;
};

// Σ a(r_i) − ω Σ c(r_i).
inline double utility(std::span<const Rect> boxes, std::span<const double> rates, const PolicyConfig& cfg) {
  if (boxes.size() != rates.size()) throw ShapeError("utility: one rate per box required");
  double acc = 0.0;
  double cost = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    acc += cfg.accuracy.at(cfg.rates, boxes[i].area(), rates[i]);
    cost += cfg.cost.cost(boxes[i], rates[i]);
  }
  return acc - cfg.omega * cost;
}

inline double total_bytes(std::span<const Rect> boxes, std::span<const double> rates, const SizeModel& size) {
  double s = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) s += size.bytes(boxes[i], rates[i]);
  return s;
}

inline double total_gpu(std::span<const Rect> boxes, std::span<const double> rates, const CostProfile& cost) {
  double s = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) s += cost.gpu(boxes[i], rates[i]);
  return s;
}

// C1 ∧ C2 ∧ C3, closed inequalities.
inline bool feasible(std::span<const Rect> boxes, std::span<const double> rates, const Budget& budget,
                     const PolicyConfig& cfg) {
  if (boxes.size() != rates.size()) throw ShapeError("feasible: one rate per box required");
  for (double r : rates)
    if (r < cfg.rates.min()) return false;
  return total_bytes(boxes, rates, cfg.size) <= budget.bytes && total_gpu(boxes, rates, cfg.cost) <= budget.gpu;
}

namespace detail {

// Per-box, per-level tables so every solver evaluates identical sums.
class RateTables {
 public:
  RateTables(std::span<const Rect> boxes, const PolicyConfig& cfg) : n_(boxes.size()), m_(cfg.rates.size()) {
    acc_.resize(n_ * m_);
    cost_.resize(n_ * m_);
    bytes_.resize(n_ * m_);
    gpu_.resize(n_ * m_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t l = 0; l < m_; ++l) {
        const double r = cfg.rates[l];
        acc_[i * m_ + l] = cfg.accuracy.at(cfg.rates, boxes[i].area(), r);
        cost_[i * m_ + l] = cfg.cost.cost(boxes[i], r);
        bytes_[i * m_ + l] = cfg.size.bytes(boxes[i], r);
        gpu_[i * m_ + l] = cfg.cost.gpu(boxes[i], r);
      }
    }
    omega_ = cfg.omega;
  }

  std::size_t boxes() const noexcept { return n_; }
  std::size_t levels() const noexcept { return m_; }

  double utility(const std::vector<std::size_t>& lv) const {
    double acc = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      acc += acc_[i * m_ + lv[i]];
      cost += cost_[i * m_ + lv[i]];
    }
    return acc - omega_ * cost;
  }
  double bytes(const std::vector<std::size_t>& lv) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += bytes_[i * m_ + lv[i]];
    return s;
  }
  double gpu(const std::vector<std::size_t>& lv) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += gpu_[i * m_ + lv[i]];
    return s;
  }
  double bytes_at(std::size_t i, std::size_t l) const { return bytes_[i * m_ + l]; }
  double gpu_at(std::size_t i, std::size_t l) const { return gpu_[i * m_ + l]; }

 private:
  std::size_t n_;
  std::size_t m_;
  double omega_ = 0.0;
  std::vector<double> acc_, cost_, bytes_, gpu_;
};

inline RateAssignment make_assignment(const RateTables& t, const std::vector<std::size_t>& lv, const RateSet& rates,
                                      const Budget& budget) {
  RateAssignment a;
  a.levels = lv;
  a.rates.reserve(lv.size());
  for (std::size_t l : lv) a.rates.push_back(rates[l]);
  a.utility = t.utility(lv);
  a.bytes = t.bytes(lv);
  a.gpu = t.gpu(lv);
  a.feasible = a.bytes <= budget.bytes && a.gpu <= budget.gpu;
  return a;
}

// Strict preference: higher utility, then fewer bytes, then the
// lexicographically smaller level vector.
inline bool better(const RateAssignment& a, const RateAssignment& b) {
  if (a.utility != b.utility) return a.utility > b.utility;
  if (a.bytes != b.bytes) return a.bytes < b.bytes;
  return a.levels < b.levels;
}

inline RateAssignment infeasible_assignment() { return RateAssignment{}; }

}  // namespace detail

// Exhaustive search over RateSet^N.
inline RateAssignment brute_force_opt(std::span<const Rect> boxes, const PolicyConfig& cfg, const Budget& budget) {
  const std::size_t n = boxes.size();
  const std::size_t m = cfg.rates.size();
  double points = 1.0;
  for (std::size_t i = 0; i < n; ++i) points *= static_cast<double>(m);
  if (points > static_cast<double>(cfg.enumeration_cap)) {
    throw SizeError("brute force over " + std::to_string(m) + "^" + std::to_string(n) + " points exceeds the cap of " +
                    std::to_string(cfg.enumeration_cap));
  }
  const detail::RateTables tables(boxes, cfg);
  std::vector<std::size_t> lv(n, 0);
  std::optional<RateAssignment> best;
  while (true) {
    if (tables.bytes(lv) <= budget.bytes && tables.gpu(lv) <= budget.gpu) {
      auto cand = detail::make_assignment(tables, lv, cfg.rates, budget);
      if (!best || detail::better(cand, *best)) best = std::move(cand);
    }
    // Odometer increment, last box fastest: visits vectors in lexicographic order.
    bool wrapped = true;
    for (std::size_t k = n; k > 0; --k) {
      if (++lv[k - 1] < m) {
        wrapped = false;
        break;
      }
      lv[k - 1] = 0;
    }
    if (wrapped) break;
  }
  return best ? *best : detail::infeasible_assignment();
}

namespace detail {

inline bool fits(const RateTables& t, const std::vector<std::size_t>& lv, const Budget& budget) {
  return t.bytes(lv) <= budget.bytes && t.gpu(lv) <= budget.gpu;
}

// First-improvement ascent over ±1 level moves on a single box, scanning
// boxes in order and restarting the scan after every accepted move.
inline std::vector<std::size_t> climb(const RateTables& t, std::vector<std::size_t> lv, const Budget& budget) {
  double current = t.utility(lv);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i < t.boxes() && !improved; ++i) {
      for (int dir : {+1, -1}) {
        if (dir < 0 && lv[i] == 0) continue;
        if (dir > 0 && lv[i] + 1 >= t.levels()) continue;
        const std::size_t old = lv[i];
        lv[i] = dir > 0 ? old + 1 : old - 1;
        if (fits(t, lv, budget)) {
          const double u = t.utility(lv);
          if (u > current) {
            current = u;
            improved = true;
            break;
          }
        }
        lv[i] = old;
      }
    }
  }
  return lv;
}

// From all-max, lower one box at a time until both budgets hold, each time
// picking the step with the most budget relief per unit of utility lost.
inline std::vector<std::size_t> greedy_repair(const RateTables& t, std::vector<std::size_t> lv, const Budget& budget) {
  while (!fits(t, lv, budget)) {
    const double bytes = t.bytes(lv);
    const double gpu = t.gpu(lv);
    const bool over_bytes = bytes > budget.bytes;
    const bool over_gpu = gpu > budget.gpu;
    const double u0 = t.utility(lv);
    std::optional<std::size_t> pick;
    double best_score = -1.0;
    for (std::size_t i = 0; i < t.boxes(); ++i) {
      if (lv[i] == 0) continue;
      double relief = 0.0;
      if (over_bytes) {
        const double d = t.bytes_at(i, lv[i]) - t.bytes_at(i, lv[i] - 1);
        relief += budget.bytes > 0 ? d / budget.bytes : d;
      }
      if (over_gpu) {
        const double d = t.gpu_at(i, lv[i]) - t.gpu_at(i, lv[i] - 1);
        relief += budget.gpu > 0 ? d / budget.gpu : d;
      }
      --lv[i];
      const double loss = u0 - t.utility(lv);
      ++lv[i];
      const double score = relief / std::max(loss, 1e-12);
      if (score > best_score) {
        best_score = score;
        pick = i;
      }
    }
    if (!pick) break;  // all at minimum
    --lv[*pick];
  }
  return lv;
}

}  // namespace detail

// Multi-start hill climbing. Starts: all-minimum, greedily repaired
// all-maximum, and (starts − 2) seeded random feasible points.
inline RateAssignment hill_climb(std::span<const Rect> boxes, const PolicyConfig& cfg, const Budget& budget,
                                 int starts, std::uint64_t seed) {
  const std::size_t n = boxes.size();
  const detail::RateTables tables(boxes, cfg);
  const std::size_t m = cfg.rates.size();
  if (n == 0) {
    return detail::make_assignment(tables, {}, cfg.rates, budget);
  }
  const std::vector<std::size_t> all_min(n, 0);
  if (!detail::fits(tables, all_min, budget)) return detail::infeasible_assignment();

  std::vector<std::vector<std::size_t>> seeds;
  seeds.push_back(all_min);
  seeds.push_back(detail::greedy_repair(tables, std::vector<std::size_t>(n, m - 1), budget));
  Rng rng(seed);
  for (int s = 2; s < starts; ++s) {
    std::vector<std::size_t> lv(n);
    for (auto& l : lv) l = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1));
    while (!detail::fits(tables, lv, budget)) {
      std::vector<std::size_t> lowerable;
      for (std::size_t i = 0; i < n; ++i)
        if (lv[i] > 0) lowerable.push_back(i);
      --lv[lowerable[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lowerable.size()) - 1))]];
    }
    seeds.push_back(std::move(lv));
  }

  std::optional<RateAssignment> best;
  for (const auto& start : seeds) {
    auto cand = detail::make_assignment(tables, detail::climb(tables, start, budget), cfg.rates, budget);
    if (!best || detail::better(cand, *best)) best = std::move(cand);
  }
  return *best;
}

// Dispatches on cfg.solver.
inline RateAssignment solve_rates(std::span<const Rect> boxes, const PolicyConfig& cfg, const Budget& budget,
                                  std::uint64_t seed) {
  if (cfg.solver == Solver::kBruteForce) return brute_force_opt(boxes, cfg, budget);
  return hill_climb(boxes, cfg, budget, cfg.starts, seed);
}

// ---------------------------------------------------------------------------
// Per-part transmission frequency (frames per second offloaded).

inline constexpr int kInitFrequency = 30;
inline constexpr int kFrequencyStep = 5;
inline constexpr int kMinFrequency = 1;

class FrequencyController {
 public:
  FrequencyController() { fre_.fill(kInitFrequency); }

  int frequency(int part) const { return fre_.at(index(part)); }

  // No detections: drop by one step, floored at 1 FPS. Any detection: reset
  // to the initial frequency.
  int step(int part, bool detections_found) {
    int& f = fre_.at(index(part));
    f = detections_found ? kInitFrequency : std::max(kMinFrequency, f - kFrequencyStep);
    return f;
  }

 private:
  static std::size_t index(int part) {
    if (part < 1 || part > 5) throw RangeError("part id " + std::to_string(part) + " out of range");
    return static_cast<std::size_t>(part - 1);
  }
  std::array<int, 5> fre_{};
};

inline int frequency_step(FrequencyController& ctrl, int part, bool detections_found) {
  return ctrl.step(part, detections_found);
}

// Offload on every round(fps / fre)-th frame.
inline bool should_offload(int frequency, std::int64_t frame_index, int fps = 30) {
  if (frequency < 1 || frequency > fps) throw ParameterError("frequency must be in [1, fps]");
  const auto stride = static_cast<std::int64_t>(std::llround(static_cast<double>(fps) / frequency));
  return frame_index % std::max<std::int64_t>(1, stride) == 0;
}

inline bool should_offload(const FrequencyController& ctrl, int part, std::int64_t frame_index, int fps = 30) {
  return should_offload(ctrl.frequency(part), frame_index, fps);
}

}  // namespace roiedge
