#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace roiedge {

// Axis-aligned integer rectangle, half-open: covers [x, x+w) × [y, y+h).
struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t w = 0;
  std::int64_t h = 0;

  std::int64_t x1() const noexcept { return x + w; }
  std::int64_t y1() const noexcept { return y + h; }
  std::int64_t area() const noexcept { return w > 0 && h > 0 ? w * h : 0; }
  bool empty() const noexcept { return w <= 0 || h <= 0; }

  double center_x() const noexcept { return static_cast<double>(x) + static_cast<double>(w) / 2.0; }
  double center_y() const noexcept { return static_cast<double>(y) + static_cast<double>(h) / 2.0; }

  bool contains_point(double px, double py) const noexcept {
    return px >= static_cast<double>(x) && px < static_cast<double>(x1()) &&
           py >= static_cast<double>(y) && py < static_cast<double>(y1());
  }

  bool contains(const Rect& o) const noexcept {
    return o.x >= x && o.y >= y && o.x1() <= x1() && o.y1() <= y1();
  }

  static Rect from_corners(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) {
    return Rect{x0, y0, x1 - x0, y1 - y0};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Rect& r) {
  return os << '[' << r.x << ',' << r.y << ',' << r.w << ',' << r.h << ']';
}

inline Rect intersect(const Rect& a, const Rect& b) {
  const auto x0 = std::max(a.x, b.x);
  const auto y0 = std::max(a.y, b.y);
  const auto x1 = std::min(a.x1(), b.x1());
  const auto y1 = std::min(a.y1(), b.y1());
  if (x1 <= x0 || y1 <= y0) return Rect{x0, y0, 0, 0};
  return Rect::from_corners(x0, y0, x1, y1);
}

// Smallest rectangle containing both.
inline Rect bounding_union(const Rect& a, const Rect& b) {
  return Rect::from_corners(std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x1(), b.x1()),
                            std::max(a.y1(), b.y1()));
}

inline Rect clamp_to(const Rect& r, const Rect& bounds) { return intersect(r, bounds); }

inline Rect dilate(const Rect& r, std::int64_t pad) {
  return Rect{r.x - pad, r.y - pad, r.w + 2 * pad, r.h + 2 * pad};
}

inline double iou(const Rect& a, const Rect& b) {
  const double inter = static_cast<double>(intersect(a, b).area());
  if (inter <= 0.0) return 0.0;
  const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// ceil(n * r) for a down-sampling rate, tolerant of the binary representation
// of r (640 * 0.3 must give 192, not 193).
inline std::int64_t scaled_extent(std::int64_t n, double r) {
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * r - 1e-9));
}

}  // namespace roiedge
