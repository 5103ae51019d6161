#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roiedge/random.hpp"
#include "roiedge/roi.hpp"

using namespace roiedge;

namespace {

ActivationMap map_of(std::size_t h, std::size_t w, std::vector<float> v) {
  return ActivationMap{h, w, std::move(v), kAggregateClass, 0};
}

HeatMask mask_of(std::size_t h, std::size_t w, std::vector<std::uint8_t> bits) {
  return HeatMask{h, w, std::move(bits), 0, 0.5};
}

HeatMask random_mask(Rng& rng, std::size_t h, std::size_t w, double density) {
  HeatMask m{h, w, std::vector<std::uint8_t>(h * w), 0, 0.5};
  for (auto& b : m.bits) b = rng.uniform() < density ? 1 : 0;
  return m;
}

RoiBox box(Rect r, double mass = 1.0, std::int64_t cells = 1) {
  RoiBox b;
  b.rect = r;
  b.heat_mass = mass;
  b.cells = cells;
  b.mean_heat = mass / static_cast<double>(cells);
  return b;
}

}  // namespace

TEST(Threshold, TwoCellExample) {
  const auto m = threshold_mask(map_of(1, 2, {0.2f, 0.8f}), 0.5);
  EXPECT_EQ(m.bits, (std::vector<std::uint8_t>{0, 1}));
}

TEST(Threshold, InclusiveAtSigma) {
  EXPECT_EQ(threshold_mask(map_of(1, 1, {0.5f}), 0.5).bits[0], 1);
}

TEST(Threshold, SigmaRangeChecked) {
  const auto a = map_of(1, 1, {0.5f});
  EXPECT_THROW(threshold_mask(a, 0.0), ParameterError);
  EXPECT_THROW(threshold_mask(a, 1.0), ParameterError);
  EXPECT_THROW(threshold_mask(a, -0.1), ParameterError);
}

TEST(Threshold, HigherSigmaGivesSubset) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    std::vector<float> v(64);
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    const auto a = map_of(8, 8, v);
    const double lo = rng.uniform(0.01, 0.98), hi = rng.uniform(lo, 0.99);
    const auto ml = threshold_mask(a, lo), mh = threshold_mask(a, hi);
    for (std::size_t k = 0; k < 64; ++k) EXPECT_LE(mh.bits[k], ml.bits[k]);
  }
}

TEST(Components, EmptyMask) {
  EXPECT_TRUE(connected_components(mask_of(3, 3, std::vector<std::uint8_t>(9, 0))).empty());
}

TEST(Components, DiagonalIsOneComponent) {
  const auto cs = connected_components(mask_of(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].cells.size(), 3u);
  EXPECT_EQ(cs[0].bounds, (Rect{0, 0, 3, 3}));
}

TEST(Components, AntiDiagonalJoinsThroughNortheast) {
  const auto cs = connected_components(mask_of(3, 3, {0, 0, 1, 0, 1, 0, 1, 0, 0}));
  ASSERT_EQ(cs.size(), 1u);
}

TEST(Components, UShapeMergesLabels) {
  // The two arms get different provisional labels and meet on the last row.
  const auto cs = connected_components(mask_of(3, 3, {1, 0, 1, 1, 0, 1, 1, 1, 1}));
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].cells.size(), 7u);
}

TEST(Components, SeparatedBlobs) {
  const auto cs = connected_components(mask_of(1, 5, {1, 1, 0, 0, 1}));
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].bounds, (Rect{0, 0, 2, 1}));
  EXPECT_EQ(cs[1].bounds, (Rect{4, 0, 1, 1}));
}

TEST(Components, AgreesWithFloodFill) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 24));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 24));
    const auto m = random_mask(rng, h, w, rng.uniform(0.1, 0.7));
    const auto cs = connected_components(m);
    ASSERT_EQ(oracle::as_partition(cs), oracle::flood_fill(m)) << "mask " << i;
    for (const auto& c : cs) {
      for (const auto& cell : c.cells) EXPECT_TRUE(c.bounds.contains_point(cell.x + 0.5, cell.y + 0.5));
      EXPECT_TRUE(std::is_sorted(c.cells.begin(), c.cells.end()));
    }
  }
}

TEST(Boxes, SingleCellToPixels) {
  std::vector<std::uint8_t> bits(5 * 6, 0);
  bits[2 * 6 + 3] = 1;
  const auto mask = mask_of(5, 6, bits);
  std::vector<float> heat(30, 0.0f);
  heat[2 * 6 + 3] = 1.0f;
  const CropRef crop{3, Rect{0, 0, 192, 160}, Rect{0, 0, 6, 5}};
  const Rect frame{0, 0, 192, 160};
  const auto tight = boxes_from_components(connected_components(mask), map_of(5, 6, heat), crop, 32, 0, frame);
  ASSERT_EQ(tight.size(), 1u);
  EXPECT_EQ(tight[0].rect, (Rect{96, 64, 32, 32}));
  EXPECT_DOUBLE_EQ(tight[0].mean_heat, 1.0);
  EXPECT_EQ(tight[0].part, 3);
  const auto padded = boxes_from_components(connected_components(mask), map_of(5, 6, heat), crop, 32, 8, frame);
  EXPECT_EQ(padded[0].rect, (Rect{88, 56, 48, 48}));
}

TEST(Boxes, PadClampedToPart) {
  const auto mask = mask_of(2, 2, {1, 0, 0, 0});
  const CropRef crop{4, Rect{64, 64, 64, 64}, Rect{2, 2, 2, 2}};
  const auto b = boxes_from_components(connected_components(mask), map_of(2, 2, {1, 0, 0, 0}), crop, 32, 8,
                                       Rect{0, 0, 256, 256});
  EXPECT_EQ(b[0].rect, (Rect{64, 64, 40, 40}));
}

TEST(Boxes, CoverTheirCells) {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto m = random_mask(rng, 10, 12, 0.3);
    const CropRef crop{5, Rect{32, 32, 12 * 32, 10 * 32}, Rect{1, 1, 12, 10}};
    const auto cs = connected_components(m);
    const auto bs = boxes_from_components(cs, map_of(10, 12, std::vector<float>(120, 0.5f)), crop, 32, 8,
                                          Rect{0, 0, 14 * 32, 12 * 32});
    ASSERT_EQ(bs.size(), cs.size());
    for (std::size_t k = 0; k < cs.size(); ++k) {
      EXPECT_TRUE(crop.pixels.contains(bs[k].rect));
      for (const auto& cell : cs[k].cells) {
        const Rect px{(cell.x + 1) * 32, (cell.y + 1) * 32, 32, 32};
        EXPECT_TRUE(bs[k].rect.contains(px));
      }
    }
  }
}

TEST(Merge, DisjointUntouched) {
  const auto out = merge_overlapping({box({0, 0, 10, 10}), box({50, 50, 10, 10})}, 0.2);
  EXPECT_EQ(out.size(), 2u);
}

TEST(Merge, IdenticalCollapse) {
  const auto out = merge_overlapping({box({0, 0, 10, 10}, 2, 2), box({0, 0, 10, 10}, 1, 2)}, 0.2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rect, (Rect{0, 0, 10, 10}));
  EXPECT_DOUBLE_EQ(out[0].heat_mass, 3.0);
  EXPECT_DOUBLE_EQ(out[0].mean_heat, 0.75);
}

TEST(Merge, ChainCollapsesToUnion) {
  // a and c only touch, but once a and b merge the union overlaps c enough.
  const auto out = merge_overlapping({box({0, 0, 10, 10}), box({4, 0, 10, 10}), box({10, 0, 10, 10})}, 0.2);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rect, (Rect{0, 0, 20, 10}));
}

TEST(Merge, Invariants) {
  Rng rng(33);
  for (int i = 0; i < 300; ++i) {
    std::vector<RoiBox> in;
    const int n = static_cast<int>(rng.uniform_int(0, 12));
    for (int k = 0; k < n; ++k)
      in.push_back(box({rng.uniform_int(0, 200), rng.uniform_int(0, 200), rng.uniform_int(5, 80), rng.uniform_int(5, 80)}));
    const double t = rng.uniform(0.05, 0.9);
    const auto out = merge_overlapping(in, t);
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = a + 1; b < out.size(); ++b) EXPECT_LT(iou(out[a].rect, out[b].rect), t);
    std::int64_t in_area = 0, out_area = 0;
    for (const auto& b : in) in_area = std::max(in_area, b.area());
    for (const auto& b : out) out_area = std::max(out_area, b.area());
    EXPECT_GE(out_area, in_area);
    // Every input lands in exactly one output, which is the union of its members.
    std::vector<std::optional<Rect>> unions(out.size());
    for (const auto& b : in) {
      int owners = 0;
      std::size_t owner = 0;
      for (std::size_t o = 0; o < out.size(); ++o)
        if (out[o].rect.contains(b.rect)) {
          ++owners;
          owner = o;
        }
      ASSERT_GE(owners, 1);
      if (owners == 1) unions[owner] = unions[owner] ? bounding_union(*unions[owner], b.rect) : b.rect;
    }
    double mass_in = 0, mass_out = 0;
    for (const auto& b : in) mass_in += b.heat_mass;
    for (const auto& b : out) mass_out += b.heat_mass;
    EXPECT_DOUBLE_EQ(mass_in, mass_out);
    for (std::size_t o = 0; o < out.size(); ++o)
      if (unions[o]) {
        EXPECT_TRUE(out[o].rect.contains(*unions[o]));
      }
  }
}

TEST(SelectValid, CapKeepsHottestInInputOrder) {
  std::vector<RoiBox> in;
  for (int k = 0; k < 7; ++k) in.push_back(box({k * 100, 0, 64, 64}, 0.6 + 0.01 * ((k * 3) % 7), 1));
  const auto out = select_valid(in, ValidityPolicy{32 * 32, 0.55, 6});
  ASSERT_EQ(out.size(), 6u);
  // k = 0 has the lowest mass and is dropped.
  EXPECT_EQ(out.front().rect.x, 100);
  for (std::size_t k = 1; k < out.size(); ++k) EXPECT_LT(out[k - 1].rect.x, out[k].rect.x);
  for (const auto& b : out) EXPECT_TRUE(b.valid);
}

TEST(SelectValid, FiltersAreaAndHeat) {
  const std::vector<RoiBox> in{box({0, 0, 31, 32}, 0.9), box({0, 0, 32, 32}, 0.9), box({0, 0, 64, 64}, 0.5)};
  const auto out = select_valid(in, ValidityPolicy{32 * 32, 0.55, 6});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rect, (Rect{0, 0, 32, 32}));
}

TEST(SelectValid, CapDisabledKeepsAll) {
  std::vector<RoiBox> in(20, box({0, 0, 64, 64}, 0.9));
  EXPECT_EQ(select_valid(in, ValidityPolicy{0, 0.0, 0}).size(), 20u);
}

TEST(SelectValid, OutputIsSubsequence) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    std::vector<RoiBox> in;
    for (int k = 0; k < 10; ++k)
      in.push_back(box({k, 0, rng.uniform_int(10, 80), rng.uniform_int(10, 80)}, rng.uniform(), 1));
    const auto out = select_valid(in, ValidityPolicy{900, 0.3, static_cast<std::size_t>(rng.uniform_int(0, 8))});
    std::size_t j = 0;
    for (const auto& b : out) {
      while (j < in.size() && in[j].rect != b.rect) ++j;
      ASSERT_LT(j, in.size());
      ++j;
    }
  }
}

TEST(ExtractFrame, ShapeMismatchRejected) {
  const FeatureMap f{Tensor(2, 10, 10), 32};
  const ClassWeights w(1, 2, {1, 1});
  EXPECT_THROW(extract_frame_rois(f, w, make_layout(3840, 2160), RoiConfig{}), ShapeError);
}

TEST(ExtractFrame, HotBlobInLowerHalfBecomesOneBox) {
  // 4K grid at stride 32 is 68x120. A hot 3x3 blob inside P3 only.
  Tensor t(1, 68, 120);
  for (std::size_t y = 50; y < 53; ++y)
    for (std::size_t x = 10; x < 13; ++x) t.at(0, y, x) = 5.0f;
  const FeatureMap f{t, 32};
  const auto boxes = extract_frame_rois(f, ClassWeights(1, 1, {1.0f}), make_layout(3840, 2160), RoiConfig{});
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].part, 3);
  EXPECT_EQ(boxes[0].rect, (Rect{312, 1592, 112, 112}));
}
