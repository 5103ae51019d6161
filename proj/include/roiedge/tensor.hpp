#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"

namespace roiedge {

// Dense C×H×W tensor of binary32 values, row-major (channel, row, column).
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t channels, std::size_t height, std::size_t width)
      : channels_(channels), height_(height), width_(width), data_(channels * height * width, 0.0f) {}

  Tensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != channels_ * height_ * width_) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string());
    }
    if (!all_finite()) throw InputError("tensor contains non-finite values");
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }
  float& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  std::span<const float> plane(std::size_t c) const { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<float> plane(std::size_t c) { return {data_.data() + c * plane_size(), plane_size()}; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  std::string shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

// Output of the backbone's last convolutional layer, one cell per
// stride×stride block of frame pixels.
struct FeatureMap {
  Tensor tensor;
  std::int64_t stride = 1;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// 8-bit RGB image, interleaved, row-major.
class Image {
 public:
  Image() = default;
  Image(std::int64_t width, std::int64_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), pixels_(checked_size(width, height), fill) {}
  Image(std::int64_t width, std::int64_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_size(width, height)) {
      throw ShapeError("image pixel buffer does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
  }

  std::int64_t width() const noexcept { return width_; }
  std::int64_t height() const noexcept { return height_; }

  std::uint8_t at(std::int64_t x, std::int64_t y, int ch) const {
    return pixels_[static_cast<std::size_t>((y * width_ + x) * 3 + ch)];
  }
  std::uint8_t& at(std::int64_t x, std::int64_t y, int ch) {
    return pixels_[static_cast<std::size_t>((y * width_ + x) * 3 + ch)];
  }

  void set(std::int64_t x, std::int64_t y, std::array<std::uint8_t, 3> rgb) {
    auto* p = &pixels_[static_cast<std::size_t>((y * width_ + x) * 3)];
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  Rect bounds() const noexcept { return Rect{0, 0, width_, height_}; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::size_t checked_size(std::int64_t w, std::int64_t h) {
    if (w <= 0 || h <= 0) throw InputError("image dimensions must be positive");
    return static_cast<std::size_t>(w * h * 3);
  }

  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// ---------------------------------------------------------------------------
// Tensor file: "ROITNSR1", u32 C, u32 H, u32 W (little-endian), then C*H*W
// little-endian binary32 values.

inline constexpr std::string_view kTensorMagic = "ROITNSR1";
inline constexpr std::size_t kTensorHeaderSize = 8 + 3 * 4;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(kTensorHeaderSize + 4 * t.size());
  out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(t.channels()));
  detail::put_u32(out, static_cast<std::uint32_t>(t.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(t.width()));
  for (float v : t.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline Tensor deserialize_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTensorHeaderSize) throw FormatError("tensor file shorter than header");
  if (!std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    throw FormatError("bad tensor magic");
  }
  const std::uint64_t c = detail::get_u32(bytes, 8);
  const std::uint64_t h = detail::get_u32(bytes, 12);
  const std::uint64_t w = detail::get_u32(bytes, 16);
  const std::uint64_t count = c * h * w;
  const std::uint64_t payload = bytes.size() - kTensorHeaderSize;
  if (payload != count * 4) {
    throw FormatError("tensor payload length mismatch: expected " + std::to_string(count * 4) + " bytes, found " +
                      std::to_string(payload));
  }
  std::vector<float> data(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(detail::get_u32(bytes, kTensorHeaderSize + 4 * i));
    if (!std::isfinite(data[i])) throw FormatError("non-finite value at index " + std::to_string(i));
  }
  return Tensor(c, h, w, std::move(data));
}

inline void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  detail::write_file_bytes(path, serialize_tensor(t));
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  try {
    return deserialize_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255).

inline Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::int64_t {
    skip_ws();
    std::int64_t v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError("malformed PPM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)");
  pos = 2;
  const auto w = read_int();
  const auto h = read_int();
  const auto maxval = read_int();
  if (maxval != 255) throw FormatError("only 8-bit PPM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("malformed PPM header");
  ++pos;
  const auto n = static_cast<std::size_t>(w * h * 3);
  if (w <= 0 || h <= 0 || bytes.size() - pos < n) throw FormatError("truncated PPM payload");
  return Image(w, h, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + n)));
}

inline std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

inline Image load_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(detail::read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void save_ppm(const Image& img, const std::filesystem::path& path) {
  detail::write_file_bytes(path, encode_ppm(img));
}

// ---------------------------------------------------------------------------

// Area-average resampling to (ceil(w·r), ceil(h·r)). Each output pixel
// averages the source pixels its footprint covers, weighted by overlap.
inline Image downsample_image(const Image& img, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError("down-sampling rate must be in (0, 1]");
  if (rate == 1.0) return img;

  const std::int64_t ow = scaled_extent(img.width(), rate);
  const std::int64_t oh = scaled_extent(img.height(), rate);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(ow);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(oh);

  // Per-axis footprint: list of (source index, weight).
  auto footprints = [](std::int64_t out_n, std::int64_t in_n, double scale) {
    std::vector<std::vector<std::pair<std::int64_t, double>>> fp(static_cast<std::size_t>(out_n));
    for (std::int64_t o = 0; o < out_n; ++o) {
      const double a = static_cast<double>(o) * scale;
      const double b = std::min(static_cast<double>(in_n), static_cast<double>(o + 1) * scale);
      for (auto i = static_cast<std::int64_t>(std::floor(a)); i < in_n && static_cast<double>(i) < b; ++i) {
        const double wgt = std::min(b, static_cast<double>(i + 1)) - std::max(a, static_cast<double>(i));
        if (wgt > 0.0) fp[static_cast<std::size_t>(o)].emplace_back(i, wgt);
      }
    }
    return fp;
  };
  const auto fx = footprints(ow, img.width(), sx);
  const auto fy = footprints(oh, img.height(), sy);

  Image out(ow, oh);
  for (std::int64_t oy = 0; oy < oh; ++oy) {
    for (std::int64_t ox = 0; ox < ow; ++ox) {
      double acc[3] = {0.0, 0.0, 0.0};
      double total = 0.0;
      for (const auto& [iy, wy] : fy[static_cast<std::size_t>(oy)]) {
        for (const auto& [ix, wx] : fx[static_cast<std::size_t>(ox)]) {
          const double wgt = wx * wy;
          total += wgt;
          for (int ch = 0; ch < 3; ++ch) acc[ch] += wgt * img.at(ix, iy, ch);
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::floor(acc[ch] / total + 0.5);
        out.at(ox, oy, ch) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace roiedge
