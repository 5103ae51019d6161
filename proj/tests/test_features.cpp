#include <gtest/gtest.h>

#include "roiedge/features.hpp"
#include "roiedge/random.hpp"

using namespace roiedge;

TEST(Extractor, GridShapeFor4K) {
  const FeatureMap f = extract_features(Image(3840, 2160, 90), 7);
  EXPECT_EQ(f.stride, 32);
  EXPECT_EQ(f.tensor.channels(), 64u);
  EXPECT_EQ(f.tensor.height(), 68u);  // ceil(2160 / 32)
  EXPECT_EQ(f.tensor.width(), 120u);
}

TEST(Extractor, ConstantImageGivesSpatiallyConstantChannels) {
  const FeatureMap f = extract_features(Image(200, 130, 128), 7);
  for (std::size_t c = 0; c < f.tensor.channels(); ++c) {
    const float v0 = f.tensor.at(c, 0, 0);
    for (float v : f.tensor.plane(c)) ASSERT_EQ(v, v0) << "channel " << c;
  }
}

TEST(Extractor, DeterministicPerSeed) {
  Image img(96, 64);
  Rng rng(1);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  EXPECT_EQ(extract_features(img, 7), extract_features(img, 7));
  EXPECT_NE(extract_features(img, 7), extract_features(img, 8));
}

TEST(Extractor, NonNegativeAfterRelu) {
  Image img(64, 64);
  Rng rng(2);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  const auto f = extract_features(img, 3);
  for (float v : f.tensor.data()) EXPECT_GE(v, 0.0f);
}

TEST(Extractor, TooSmallImageIsInputError) {
  EXPECT_THROW(extract_features(Image(31, 64), 7), InputError);
  EXPECT_THROW(extract_features(Image(64, 31), 7), InputError);
}

TEST(Extractor, CustomStride) {
  ExtractorConfig cfg;
  cfg.pools = {4, 2, 1};
  cfg.widths = {4, 4, 6};
  const FeatureMap f = FeatureExtractor(cfg).extract(Image(33, 17, 5));
  EXPECT_EQ(f.stride, 8);
  EXPECT_EQ(f.tensor.channels(), 6u);
  EXPECT_EQ(f.tensor.width(), 5u);
  EXPECT_EQ(f.tensor.height(), 3u);
}

TEST(AveragePool, MatchesWideReference) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 13));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 13));
    const int f = static_cast<int>(rng.uniform_int(1, 4));
    Tensor t(2, h, w);
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-5, 5));
    const Tensor out = detail::average_pool(t, f);
    ASSERT_EQ(out.height(), (h + f - 1) / f);
    ASSERT_EQ(out.width(), (w + f - 1) / f);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t oy = 0; oy < out.height(); ++oy)
        for (std::size_t ox = 0; ox < out.width(); ++ox) {
          long double s = 0;
          int n = 0;
          for (std::size_t y = oy * f; y < std::min(h, (oy + 1) * f); ++y)
            for (std::size_t x = ox * f; x < std::min(w, (ox + 1) * f); ++x, ++n) s += t.at(c, y, x);
          EXPECT_NEAR(out.at(c, oy, ox), static_cast<double>(s / n), 1e-6);
        }
  }
}
