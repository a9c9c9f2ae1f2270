#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "brickvision/metrics.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace brickvision;

namespace {

// Three axis-aligned rectangles: blue 1, green 2 and 3.
InstanceMask three_rects() {
  InstanceMask gt;
  oracle::paint_rect(gt, 10, 10, 90, 40, 1);
  oracle::paint_rect(gt, 200, 100, 230, 190, 2);
  oracle::paint_rect(gt, 400, 300, 460, 330, 3);
  gt.set_class(1, BrickClass::kBlue);
  gt.set_class(2, BrickClass::kGreen);
  gt.set_class(3, BrickClass::kGreen);
  return gt;
}

std::vector<RotatedBox> with_scores(std::vector<RotatedBox> boxes, std::vector<double> scores) {
  for (std::size_t i = 0; i < boxes.size(); ++i) boxes[i] = boxes[i].with_score(scores[i]);
  return boxes;
}

}  // namespace

TEST(PixelPrecision, ExactBoxIsOne) {
  InstanceMask gt;
  oracle::paint_rect(gt, 100, 100, 140, 120, 1);
  gt.set_class(1, BrickClass::kBlue);
  const std::vector<RotatedBox> boxes{mask_box(gt, 1)};
  EXPECT_EQ(pixel_precision(boxes, gt), 1.0);
}

TEST(PixelPrecision, DoubleAreaIsHalf) {
  InstanceMask gt;
  oracle::paint_rect(gt, 100, 100, 140, 120, 1);
  gt.set_class(1, BrickClass::kBlue);
  const std::vector<RotatedBox> boxes{RotatedBox(140, 110, 80, 20, 0)};
  EXPECT_DOUBLE_EQ(*pixel_precision(boxes, gt), 0.5);
}

TEST(PixelPrecision, WrongClassPixelsDoNotCount) {
  InstanceMask gt;
  oracle::paint_rect(gt, 100, 100, 140, 120, 1);
  gt.set_class(1, BrickClass::kGreen);
  const std::vector<RotatedBox> boxes{RotatedBox(120, 110, 40, 20, 0, BrickClass::kBlue)};
  EXPECT_DOUBLE_EQ(*pixel_precision(boxes, gt), 0.0);
}

TEST(PixelPrecision, EmptyPredictionIsUndefined) {
  EXPECT_FALSE(pixel_precision({}, three_rects()).has_value());
}

TEST(PixelPrecision, MatchesBruteForceCounts) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> jitter(-6, 6);
  std::bernoulli_distribution flip(0.2);
  for (int scene = 0; scene < 10; ++scene) {
    const InstanceMask gt = oracle::random_box_mask(rng, 8);
    std::vector<RotatedBox> boxes;
    for (const RotatedBox& b : ground_truth_boxes(gt)) {
      const BrickClass cls = flip(rng) ? BrickClass::kGreen : b.cls();
      boxes.emplace_back(b.cx() + jitter(rng), b.cy() + jitter(rng), b.w() + 4, b.h() + 2, b.theta() + 0.1, cls);
    }
    const PixelCounts got = pixel_counts(boxes, gt);
    const PixelCounts want = oracle::brute_pixel_counts(boxes, gt);
    EXPECT_EQ(got.object, want.object);
    EXPECT_EQ(got.total, want.total);
  }
}

TEST(DetectionRecall, Examples) {
  const InstanceMask gt = three_rects();
  EXPECT_DOUBLE_EQ(detection_recall(ground_truth_boxes(gt), gt), 1.0);
  EXPECT_DOUBLE_EQ(detection_recall({}, gt), 0.0);
  EXPECT_DOUBLE_EQ(detection_recall({}, InstanceMask{}), 1.0);

  InstanceMask five;
  for (int i = 0; i < 5; ++i) oracle::paint_rect(five, 20 + 100 * i, 50, 60 + 100 * i, 70, i + 1);
  for (std::uint16_t id = 1; id <= 5; ++id) five.set_class(id, BrickClass::kBlue);
  EXPECT_DOUBLE_EQ(detection_recall({}, five), 0.0);
}

TEST(DetectionRecall, MergedBoxDetectsOneOfTwo) {
  InstanceMask gt;
  oracle::paint_rect(gt, 100, 100, 140, 120, 1);
  oracle::paint_rect(gt, 140, 100, 180, 120, 2);
  gt.set_class(1, BrickClass::kGreen);
  gt.set_class(2, BrickClass::kGreen);
  const std::vector<RotatedBox> merged{RotatedBox(140, 110, 80, 20, 0, BrickClass::kGreen)};
  EXPECT_DOUBLE_EQ(detection_recall(merged, gt), 0.5);
  EXPECT_DOUBLE_EQ(detection_recall(merged, gt, MatchRule::iou(0.5)), 0.5);
}

TEST(DetectionRecall, ClassMustAgree) {
  const InstanceMask gt = three_rects();
  std::vector<RotatedBox> boxes = ground_truth_boxes(gt);
  for (RotatedBox& b : boxes) b = b.with_class(b.cls() == BrickClass::kBlue ? BrickClass::kGreen : BrickClass::kBlue);
  EXPECT_DOUBLE_EQ(detection_recall(boxes, gt), 0.0);
}

TEST(DetectionRecall, CenterRuleNoStricterThanIou) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> jitter(-10, 10), scale(0.6, 1.6);
  for (int scene = 0; scene < 20; ++scene) {
    const InstanceMask gt = oracle::random_box_mask(rng, 8);
    std::vector<RotatedBox> boxes;
    for (const RotatedBox& b : ground_truth_boxes(gt)) {
      boxes.emplace_back(b.cx() + jitter(rng), b.cy() + jitter(rng), b.w() * scale(rng), b.h() * scale(rng),
                         b.theta() + 0.2 * jitter(rng) / 10, b.cls());
    }
    const RecallCounts center = recall_counts(boxes, gt);
    const RecallCounts iou = recall_counts(boxes, gt, MatchRule::iou(0.5));
    EXPECT_GE(center.detected, iou.detected);
    EXPECT_LE(center.detected, center.total);
  }
}

TEST(AveragePrecision, HandComputedCurve) {
  // Ranked TP, FP, TP over two ground-truth objects: precision 1 up to recall
  // 0.5, then 2/3 up to recall 1.
  EXPECT_NEAR(interpolated_average_precision({true, false, true}, 2), 5.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(interpolated_average_precision({true, true}, 2), 1.0);
  EXPECT_DOUBLE_EQ(interpolated_average_precision({false, true}, 1), 0.5);
  EXPECT_DOUBLE_EQ(interpolated_average_precision({}, 3), 0.0);
}

TEST(MapScore, HandCaseThroughDetections) {
  InstanceMask gt;
  oracle::paint_rect(gt, 10, 10, 50, 30, 1);
  oracle::paint_rect(gt, 300, 200, 340, 260, 2);
  gt.set_class(1, BrickClass::kBlue);
  gt.set_class(2, BrickClass::kBlue);
  const std::vector<RotatedBox> boxes{
      RotatedBox(30, 20, 40, 20, 0, BrickClass::kBlue, 0.9),
      RotatedBox(500, 400, 30, 20, 0, BrickClass::kBlue, 0.8),
      RotatedBox(320, 230, 40, 60, 0, BrickClass::kBlue, 0.7),
  };
  EXPECT_NEAR(map_score(boxes, gt), 5.0 / 6.0, 1e-12);
}

TEST(MapScore, PerfectAndEmpty) {
  const InstanceMask gt = three_rects();
  std::vector<RotatedBox> perfect;
  for (std::uint16_t id : gt.instance_ids()) perfect.push_back(mask_upright_box(gt, id));
  EXPECT_DOUBLE_EQ(map_score(perfect, gt), 1.0);
  EXPECT_DOUBLE_EQ(map_score({}, gt), 0.0);
  EXPECT_DOUBLE_EQ(map_score({}, InstanceMask{}), 1.0);
}

TEST(MapScore, DetectionsOfAbsentClassScoreZero) {
  InstanceMask gt;
  oracle::paint_rect(gt, 10, 10, 50, 30, 1);
  gt.set_class(1, BrickClass::kBlue);
  const std::vector<RotatedBox> boxes{RotatedBox(30, 20, 40, 20, 0, BrickClass::kBlue, 0.9),
                                      RotatedBox(300, 200, 40, 20, 0, BrickClass::kGreen, 0.5)};
  EXPECT_DOUBLE_EQ(map_score(boxes, gt), 0.5);
}

TEST(MapScore, InvariantUnderScoreScaling) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> score(0.05, 1.0), jitter(-8, 8);
  for (int scene = 0; scene < 10; ++scene) {
    const InstanceMask gt = oracle::random_box_mask(rng, 8);
    std::vector<RotatedBox> boxes;
    for (std::uint16_t id : gt.instance_ids()) {
      const RotatedBox b = mask_upright_box(gt, id);
      boxes.emplace_back(b.cx() + jitter(rng), b.cy() + jitter(rng), b.w(), b.h(), b.theta(), b.cls(), score(rng));
    }
    std::vector<RotatedBox> scaled;
    for (const RotatedBox& b : boxes) scaled.push_back(b.with_score(0.5 * b.score()));
    EXPECT_DOUBLE_EQ(map_score(boxes, gt), map_score(scaled, gt));
  }
}

TEST(MapScore, RequiresUprightBoxes) {
  const std::vector<RotatedBox> boxes{RotatedBox(30, 20, 40, 20, 0.3)};
  EXPECT_ERROR_CODE(map_score(boxes, three_rects()), ErrorCode::kInvalidArgument);
}

TEST(Evaluate, PerfectAndEmptyDetections) {
  const InstanceMask gt = three_rects();
  const std::vector<SceneDetections> perfect{{ground_truth_boxes(gt), gt}};
  const EvalReport rotated = evaluate(perfect, BoxMode::kRotated);
  EXPECT_EQ(rotated.precision, 1.0);
  EXPECT_EQ(rotated.recall, 1.0);
  EXPECT_FALSE(rotated.map.has_value());
  EXPECT_EQ(rotated.bricks.total, 3u);
  EXPECT_EQ(rotated.per_class[1].bricks.total, 2u);

  const EvalReport upright = evaluate(perfect, BoxMode::kUpright);
  EXPECT_EQ(upright.map, 1.0);

  const std::vector<SceneDetections> none{{{}, gt}};
  const EvalReport empty = evaluate(none, BoxMode::kUpright);
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.map, 0.0);
  EXPECT_FALSE(empty.precision.has_value());
}

TEST(Evaluate, UprightModeScoresHulls) {
  InstanceMask gt;
  oracle::paint_box(gt, RotatedBox(200, 200, 120, 20, std::numbers::pi / 4), 1);
  gt.set_class(1, BrickClass::kBlue);
  const std::vector<SceneDetections> scenes{{ground_truth_boxes(gt), gt}};
  const EvalReport rotated = evaluate(scenes, BoxMode::kRotated);
  const EvalReport upright = evaluate(scenes, BoxMode::kUpright);
  EXPECT_GT(*rotated.precision, *upright.precision);
  EXPECT_EQ(upright.recall, 1.0);
}

TEST(CompareRotatedVsUpright, AxisAlignedScenesTie) {
  const std::vector<InstanceMask> scenes{three_rects()};
  const std::vector<PrecisionPair> pairs = compare_rotated_vs_upright(scenes);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].rotated, pairs[0].upright);
}

TEST(CompareRotatedVsUpright, TiltedScenesFavourRotated) {
  InstanceMask gt;
  for (int i = 0; i < 4; ++i) {
    oracle::paint_box(gt, RotatedBox(100 + 130 * i, 240, 100, 30, std::numbers::pi / 4), i + 1);
    gt.set_class(i + 1, BrickClass::kBlue);
  }
  const std::vector<InstanceMask> scenes{gt};
  const PrecisionPair p = compare_rotated_vs_upright(scenes)[0];
  EXPECT_GT(*p.rotated, *p.upright);
}

TEST(CompareRotatedVsUpright, RandomScenesNeverFavourUpright) {
  std::mt19937_64 rng(24);
  std::vector<InstanceMask> scenes;
  for (int i = 0; i < 20; ++i) scenes.push_back(oracle::random_box_mask(rng, 6));
  for (const PrecisionPair& p : compare_rotated_vs_upright(scenes)) EXPECT_GE(*p.rotated, *p.upright);
}
