#include <gtest/gtest.h>

#include "roiedge/geometry.hpp"
#include "roiedge/random.hpp"

using roiedge::Rect;

TEST(Rect, IntersectAndUnion) {
  const Rect a{0, 0, 10, 10}, b{5, 5, 10, 10};
  EXPECT_EQ(roiedge::intersect(a, b), (Rect{5, 5, 5, 5}));
  EXPECT_EQ(roiedge::bounding_union(a, b), (Rect{0, 0, 15, 15}));
  EXPECT_TRUE(roiedge::intersect(a, Rect{20, 20, 1, 1}).empty());
}

TEST(Rect, HalfOpenContainment) {
  const Rect r{10, 10, 4, 4};
  EXPECT_TRUE(r.contains_point(10, 10));
  EXPECT_FALSE(r.contains_point(14, 10));
  EXPECT_TRUE(r.contains(Rect{11, 11, 3, 3}));
  EXPECT_FALSE(r.contains(Rect{11, 11, 4, 3}));
}

TEST(Iou, HandValues) {
  EXPECT_DOUBLE_EQ(roiedge::iou(Rect{0, 0, 2, 2}, Rect{0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(roiedge::iou(Rect{0, 0, 2, 2}, Rect{5, 5, 2, 2}), 0.0);
  // 2x2 boxes sharing a 1x2 strip: 2 / (4 + 4 - 2)
  EXPECT_NEAR(roiedge::iou(Rect{0, 0, 2, 2}, Rect{1, 0, 2, 2}), 2.0 / 6.0, 1e-12);
}

TEST(Iou, SymmetricBoundedAndOneOnlyWhenEqual) {
  roiedge::Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Rect a{rng.uniform_int(0, 20), rng.uniform_int(0, 20), rng.uniform_int(1, 10), rng.uniform_int(1, 10)};
    const Rect b{rng.uniform_int(0, 20), rng.uniform_int(0, 20), rng.uniform_int(1, 10), rng.uniform_int(1, 10)};
    const double v = roiedge::iou(a, b);
    EXPECT_EQ(v, roiedge::iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v == 1.0, a == b);
  }
}

TEST(ScaledExtent, CeilWithoutRepresentationDrift) {
  EXPECT_EQ(roiedge::scaled_extent(640, 0.5), 320);
  EXPECT_EQ(roiedge::scaled_extent(640, 0.3), 192);
  EXPECT_EQ(roiedge::scaled_extent(5, 0.5), 3);
  EXPECT_EQ(roiedge::scaled_extent(1, 0.25), 1);
}

TEST(KeyedUniform, DeterministicAndInRange) {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double v = roiedge::keyed_uniform(3, i, i * 7);
    EXPECT_EQ(v, roiedge::keyed_uniform(3, i, i * 7));
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_NE(roiedge::keyed_uniform(3, 1, 2), roiedge::keyed_uniform(4, 1, 2));
}
