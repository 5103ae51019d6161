#include <gtest/gtest.h>

#include "roiedge/oracle.hpp"
#include "roiedge/random.hpp"

using namespace roiedge;

namespace {

const OracleModel kModel{};
const AccuracyProfile kAcc{};
const RateSet kRates{};

FrameObjects objects(std::vector<Rect> boxes, int cls = 0) {
  FrameObjects out;
  for (const auto& b : boxes) out.push_back(GroundTruthObject{0, cls, b});
  return out;
}

}  // namespace

TEST(Detect, FullRateSeesFortyPixelObject) {
  const auto d = oracle_detect(Rect{0, 0, 200, 200}, 1.0, objects({{50, 50, 40, 80}}), kModel, kAcc, kRates);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].box, (Rect{50, 50, 40, 80}));
  EXPECT_DOUBLE_EQ(d[0].confidence, kAcc.at(kRates, 200 * 200, 1.0));
}

TEST(Detect, QuarterRateMissesFortyPixelObject) {
  // 40 * 0.25 = 10 < 12
  EXPECT_TRUE(oracle_detect(Rect{0, 0, 200, 200}, 0.25, objects({{50, 50, 40, 80}}), kModel, kAcc, kRates).empty());
  EXPECT_EQ(oracle_detect(Rect{0, 0, 200, 200}, 0.25, objects({{50, 50, 48, 80}}), kModel, kAcc, kRates).size(), 1u);
}

TEST(Detect, CenterOutsideRoiNeverDetected) {
  for (double r : {0.25, 0.5, 1.0})
    EXPECT_TRUE(oracle_detect(Rect{0, 0, 100, 100}, r, objects({{80, 80, 60, 60}}), kModel, kAcc, kRates).empty());
}

TEST(Detect, CoverageAndClipping) {
  // Center inside, 60% of the area inside.
  const auto d = oracle_detect(Rect{0, 0, 100, 100}, 1.0, objects({{40, 0, 100, 50}}), kModel, kAcc, kRates);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].box, (Rect{40, 0, 60, 50}));
  // Center inside but 45% of the area only.
  EXPECT_TRUE(oracle_detect(Rect{0, 0, 100, 100}, 1.0, objects({{-15, 0, 220, 50}}), kModel, kAcc, kRates).empty());
}

TEST(Detect, RateRangeChecked) {
  EXPECT_THROW(oracle_detect(Rect{0, 0, 1, 1}, 0.0, {}, kModel, kAcc, kRates), ParameterError);
  EXPECT_THROW(oracle_detect(Rect{0, 0, 1, 1}, 1.5, {}, kModel, kAcc, kRates), ParameterError);
}

TEST(Detect, MonotoneInRate) {
  Rng rng(19);
  for (int i = 0; i < 300; ++i) {
    FrameObjects objs;
    for (int k = 0; k < 6; ++k)
      objs.push_back({0, 0, Rect{rng.uniform_int(0, 400), rng.uniform_int(0, 400), rng.uniform_int(8, 120), rng.uniform_int(8, 120)}});
    const Rect roi{rng.uniform_int(0, 200), rng.uniform_int(0, 200), rng.uniform_int(50, 300), rng.uniform_int(50, 300)};
    std::size_t prev = 0;
    for (double r : kRates.values()) {
      const auto n = oracle_detect(roi, r, objs, kModel, kAcc, kRates).size();
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou(Rect{0, 0, 5, 5}, Rect{0, 0, 5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(iou(Rect{0, 0, 5, 5}, Rect{10, 10, 5, 5}), 0.0);
  EXPECT_NEAR(iou(Rect{0, 0, 2, 2}, Rect{1, 0, 2, 2}), 2.0 / 6.0, 1e-15);
}

TEST(F1, PerfectAndEmpty) {
  const auto gt = objects({{0, 0, 10, 10}, {50, 50, 10, 10}});
  std::vector<Detection> dets;
  for (const auto& o : gt) dets.push_back({o.cls, o.box, 0.9});
  const auto r = f1_score(dets, gt);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(f1_score({}, gt).f1, 0.0);
  EXPECT_DOUBLE_EQ(f1_score({}, {}).f1, 0.0);
}

TEST(F1, OneHitOneMissOneFalseAlarm) {
  const auto gt = objects({{0, 0, 10, 10}, {50, 50, 10, 10}});
  const std::vector<Detection> dets{{0, {0, 0, 10, 10}, 0.9}, {0, {200, 200, 10, 10}, 0.8}};
  const auto r = f1_score(dets, gt);
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.fp, 1);
  EXPECT_EQ(r.counts.fn, 1);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(F1, ClassMustMatchAndMatchingIsOneToOne) {
  const auto gt = objects({{0, 0, 10, 10}});
  EXPECT_EQ(f1_score({{1, {0, 0, 10, 10}, 0.9}}, gt).counts.tp, 0);
  const std::vector<Detection> twice{{0, {0, 0, 10, 10}, 0.9}, {0, {0, 0, 10, 10}, 0.8}};
  const auto r = f1_score(twice, gt);
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.fp, 1);
}

TEST(F1, ThresholdIsInclusive) {
  // IoU exactly 0.5: 10x10 vs 10x5 inside it.
  const auto gt = objects({{0, 0, 10, 10}});
  EXPECT_EQ(f1_score({{0, {0, 0, 10, 5}, 1.0}}, gt).counts.tp, 1);
}

TEST(Duplicates, SameObjectFromTwoBoxesCollapses) {
  const std::vector<Detection> dets{{0, {0, 0, 40, 40}, 0.7}, {0, {0, 0, 40, 36}, 0.9}, {1, {0, 0, 40, 40}, 0.5}};
  const auto out = merge_duplicate_detections(dets, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0].confidence, 0.9);  // input order kept, lower-confidence duplicate dropped
  EXPECT_EQ(out[1].cls, 1);
}
