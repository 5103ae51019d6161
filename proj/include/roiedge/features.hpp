#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "roiedge/error.hpp"
#include "roiedge/random.hpp"
#include "roiedge/tensor.hpp"

namespace roiedge {

struct ExtractorConfig {
  // Output channels of the three layers; the last one is the FeatureMap's C.
  std::array<int, 3> widths{8, 16, 64};
  // Down-sampling factor applied at the entry of each layer. Their product
  // is the FeatureMap stride.
  std::array<int, 3> pools{8, 2, 2};
  std::uint64_t seed = 7;

  std::int64_t stride() const noexcept {
    return static_cast<std::int64_t>(pools[0]) * pools[1] * pools[2];
  }
  int channels() const noexcept { return widths[2]; }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (widths[i] < 1) throw ConfigError("extractor widths must be >= 1");
      if (pools[i] < 1) throw ConfigError("extractor pools must be >= 1");
    }
  }

  friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

namespace detail {

// Block-average pooling with ceil output dims; edge blocks average only the
// cells that exist. Sums are accumulated in double.
inline Tensor average_pool(const Tensor& in, int factor) {
  if (factor == 1) return in;
  const std::size_t f = static_cast<std::size_t>(factor);
  const std::size_t oh = (in.height() + f - 1) / f;
  const std::size_t ow = (in.width() + f - 1) / f;
  Tensor out(in.channels(), oh, ow);
  for (std::size_t c = 0; c < in.channels(); ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t y0 = oy * f;
      const std::size_t y1 = std::min(in.height(), y0 + f);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t x0 = ox * f;
        const std::size_t x1 = std::min(in.width(), x0 + f);
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t x = x0; x < x1; ++x) sum += in.at(c, y, x);
        out.at(c, oy, ox) = static_cast<float>(sum / static_cast<double>((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

}  // namespace detail

// Seeded stand-in for a lightweight CNN backbone. Three layers, each:
// block-average pool, 3×3 convolution with replicate padding, bias, ReLU.
// Weights are drawn once at construction; extraction is a pure function of
// (image, seed, config).
class FeatureExtractor {
 public:
  explicit FeatureExtractor(ExtractorConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    int in_ch = 3;
    for (int l = 0; l < 3; ++l) {
      Layer layer;
      layer.in = in_ch;
      layer.out = cfg_.widths[l];
      layer.pool = cfg_.pools[l];
      const double bound = std::sqrt(6.0 / (9.0 * in_ch));
      layer.weights.resize(static_cast<std::size_t>(layer.out * in_ch * 9));
      for (auto& w : layer.weights) w = static_cast<float>(rng.uniform(-bound, bound));
      layer.bias.resize(static_cast<std::size_t>(layer.out));
      for (auto& b : layer.bias) b = static_cast<float>(rng.uniform(-0.05, 0.05));
      layers_.push_back(std::move(layer));
      in_ch = cfg_.widths[l];
    }
  }

  const ExtractorConfig& config() const noexcept { return cfg_; }
  std::int64_t stride() const noexcept { return cfg_.stride(); }
  int channels() const noexcept { return cfg_.channels(); }

  FeatureMap extract(const Image& img) const {
    if (img.width() < stride() || img.height() < stride()) {
      throw InputError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                       " is smaller than the feature stride " + std::to_string(stride()));
    }
    // First pool works on integer pixel values so that constant regions stay
    // exactly constant, then scales to [0, 1].
    Tensor x = pool_pixels(img, layers_[0].pool);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (l > 0) x = detail::average_pool(x, layers_[l].pool);
      x = conv_relu(x, layers_[l]);
    }
    return FeatureMap{std::move(x), stride()};
  }

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    int pool = 1;
    std::vector<float> weights;  // [out][in][3][3]
    std::vector<float> bias;
  };

  static Tensor pool_pixels(const Image& img, int factor) {
    const auto f = static_cast<std::int64_t>(factor);
    const std::int64_t oh = (img.height() + f - 1) / f;
    const std::int64_t ow = (img.width() + f - 1) / f;
    Tensor out(3, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow));
    std::vector<std::uint64_t> sums(static_cast<std::size_t>(3 * ow));
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      std::fill(sums.begin(), sums.end(), 0);
      const std::int64_t y0 = oy * f;
      const std::int64_t y1 = std::min(img.height(), y0 + f);
      for (std::int64_t y = y0; y < y1; ++y) {
        const std::uint8_t* row = img.pixels().data() + y * img.width() * 3;
        for (std::int64_t x = 0; x < img.width(); ++x) {
          auto* s = &sums[static_cast<std::size_t>((x / f) * 3)];
          s[0] += row[x * 3];
          s[1] += row[x * 3 + 1];
          s[2] += row[x * 3 + 2];
        }
      }
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const std::int64_t x0 = ox * f;
        const std::int64_t x1 = std::min(img.width(), x0 + f);
        const double n = static_cast<double>((y1 - y0) * (x1 - x0));
        for (int c = 0; c < 3; ++c) {
          const double mean = static_cast<double>(sums[static_cast<std::size_t>(ox * 3 + c)]) / n;
          out.at(static_cast<std::size_t>(c), static_cast<std::size_t>(oy), static_cast<std::size_t>(ox)) =
              static_cast<float>(mean / 255.0);
        }
      }
    }
    return out;
  }

  static Tensor conv_relu(const Tensor& in, const Layer& layer) {
    const std::size_t h = in.height();
    const std::size_t w = in.width();
    Tensor out(static_cast<std::size_t>(layer.out), h, w);
    // Replicate-padded copy of the input, one channel plane at a time.
    const std::size_t ph = h + 2;
    const std::size_t pw = w + 2;
    std::vector<float> padded(static_cast<std::size_t>(layer.in) * ph * pw);
    for (std::size_t c = 0; c < static_cast<std::size_t>(layer.in); ++c) {
      for (std::size_t py = 0; py < ph; ++py) {
        const std::size_t sy = std::min(h - 1, py == 0 ? 0 : py - 1);
        for (std::size_t px = 0; px < pw; ++px) {
          const std::size_t sx = std::min(w - 1, px == 0 ? 0 : px - 1);
          padded[(c * ph + py) * pw + px] = in.at(c, sy, sx);
        }
      }
    }
    std::vector<float> acc(w);
    for (std::size_t o = 0; o < static_cast<std::size_t>(layer.out); ++o) {
      for (std::size_t y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), layer.bias[o]);
        for (std::size_t c = 0; c < static_cast<std::size_t>(layer.in); ++c) {
          const float* k = &layer.weights[(o * static_cast<std::size_t>(layer.in) + c) * 9];
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const float* row = &padded[(c * ph + y + ky) * pw];
            const float k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
            for (std::size_t x = 0; x < w; ++x) acc[x] += k0 * row[x] + k1 * row[x + 1] + k2 * row[x + 2];
          }
        }
        float* dst = &out.at(o, y, 0);
        for (std::size_t x = 0; x < w; ++x) dst[x] = acc[x] > 0.0f ? acc[x] : 0.0f;
      }
    }
    return out;
  }

  ExtractorConfig cfg_;
  std::vector<Layer> layers_;
};

inline FeatureMap extract_features(const Image& img, std::uint64_t extractor_seed, ExtractorConfig cfg = {}) {
  cfg.seed = extractor_seed;
  return FeatureExtractor(cfg).extract(img);
}

}  // namespace roiedge
