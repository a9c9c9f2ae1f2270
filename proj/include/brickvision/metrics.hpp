#pragma once

// Detection metrics against instance-mask ground truth.
//
// Pixel precision is NO / TP where NO counts pixels inside the predicted
// boxes that belong to an instance of the box's class and TP counts every
// pixel inside the boxes. A pixel is inside a box when its center is.
// Recall is DB / TB: detected ground-truth bricks over all bricks.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "brickvision/geom.hpp"

namespace brickvision {

struct PixelCounts {
  std::size_t object = 0;  // NO
  std::size_t total = 0;   // TP

  std::optional<double> precision() const;
  PixelCounts& operator+=(const PixelCounts& o) {
    object += o.object;
    total += o.total;
    return *this;
  }
};

struct MatchRule {
  enum class Kind { kCenterInBox, kIoU };
  Kind kind = Kind::kCenterInBox;
  double iou_threshold = 0.5;

  static MatchRule center_in_box() { return {}; }
  static MatchRule iou(double tau) { return {Kind::kIoU, tau}; }
};

struct RecallCounts {
  std::size_t detected = 0;  // DB
  std::size_t total = 0;     // TB

  /// 1.0 when there is nothing to detect.
  double recall() const;
  RecallCounts& operator+=(const RecallCounts& o) {
    detected += o.detected;
    total += o.total;
    return *this;
  }
};

struct ClassReport {
  std::optional<double> precision;
  double recall = 1.0;
  std::optional<double> average_precision;
  PixelCounts pixels;
  RecallCounts bricks;
};

struct EvalReport {
  std::optional<double> precision;  // None when nothing was predicted
  double recall = 1.0;
  std::optional<double> map;  // upright mode only
  std::array<ClassReport, kNumClasses> per_class{};
  PixelCounts pixels;
  RecallCounts bricks;
};

/// Predictions and ground truth of one frame.
struct SceneDetections {
  std::vector<RotatedBox> boxes;
  InstanceMask gt;
};

PixelCounts pixel_counts(std::span<const RotatedBox> boxes, const InstanceMask& gt);
std::optional<double> pixel_precision(std::span<const RotatedBox> boxes, const InstanceMask& gt);

/// Greedy matching in descending score order; every box detects at most one
/// ground-truth instance of its own class and every instance is detected at
/// most once. Among eligible instances the one with the highest IoU against
/// its mask rectangle is taken.
RecallCounts recall_counts(std::span<const RotatedBox> boxes, const InstanceMask& gt,
                           MatchRule rule = MatchRule::center_in_box());
double detection_recall(std::span<const RotatedBox> boxes, const InstanceMask& gt,
                        MatchRule rule = MatchRule::center_in_box());

/// Area under the monotone precision envelope of a P-R curve.
/// `is_tp` is ordered by descending score.
double interpolated_average_precision(const std::vector<bool>& is_tp, std::size_t num_gt);

/// VOC-style mean AP over classes with ground truth, accumulated over all
/// scenes. Boxes must be upright; ground truth is each instance's axis-aligned
/// pixel bounding box. Classes with detections but no ground truth score 0.
double map_score(std::span<const SceneDetections> scenes, double iou_threshold = 0.5);
double map_score(std::span<const RotatedBox> boxes, const InstanceMask& gt, double iou_threshold = 0.5);

enum class BoxMode { kRotated, kUpright };

/// Full report. In upright mode predictions are replaced by their upright
/// hulls before scoring and mAP is filled in.
EvalReport evaluate(std::span<const SceneDetections> scenes, BoxMode mode,
                    MatchRule rule = MatchRule::center_in_box(), double map_iou_threshold = 0.5);

struct PrecisionPair {
  std::optional<double> rotated;
  std::optional<double> upright;
};

/// Ground-truth rotated boxes of each mask versus their upright hulls.
std::vector<PrecisionPair> compare_rotated_vs_upright(std::span<const InstanceMask> scenes);

/// Rotated boxes of every instance in the mask (ideal detections).
std::vector<RotatedBox> ground_truth_boxes(const InstanceMask& gt);

}  // namespace brickvision
