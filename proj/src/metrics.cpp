#include "brickvision/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brickvision/error.hpp"

namespace brickvision {

std::optional<double> PixelCounts::precision() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(object) / static_cast<double>(total);
}

double RecallCounts::recall() const {
  if (total == 0) return 1.0;
  return static_cast<double>(detected) / static_cast<double>(total);
}

namespace {

std::size_t class_index(BrickClass c) { return static_cast<std::size_t>(c); }

std::vector<std::size_t> by_descending_score(std::span<const RotatedBox> boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return boxes[i].score() > boxes[j].score(); });
  return order;
}

struct GtInstance {
  std::uint16_t id;
  RotatedBox box;
};

std::vector<GtInstance> gt_instances(const InstanceMask& gt) {
  std::vector<GtInstance> out;
  for (std::uint16_t id : gt.instance_ids()) out.push_back({id, mask_box(gt, id)});
  return out;
}

std::array<RecallCounts, kNumClasses> recall_per_class(std::span<const RotatedBox> boxes, const InstanceMask& gt,
                                                       MatchRule rule) {
  const std::vector<GtInstance> instances = gt_instances(gt);
  std::array<RecallCounts, kNumClasses> counts{};
  for (const GtInstance& g : instances) ++counts[class_index(g.box.cls())].total;

  std::vector<bool> matched(instances.size(), false);
  for (std::size_t bi : by_descending_score(boxes)) {
    const RotatedBox& box = boxes[bi];
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t gi = 0; gi < instances.size(); ++gi) {
      if (matched[gi] || instances[gi].box.cls() != box.cls()) continue;
      const double iou = rotated_iou(box, instances[gi].box);
      const bool eligible = rule.kind == MatchRule::Kind::kCenterInBox ? box.contains(instances[gi].box.center())
                                                                       : iou >= rule.iou_threshold;
      if (eligible && iou > best_iou) {
        best = gi;
        best_iou = iou;
      }
    }
    if (best) {
      matched[*best] = true;
      ++counts[class_index(box.cls())].detected;
    }
  }
  return counts;
}

void require_upright(std::span<const RotatedBox> boxes) {
  for (const RotatedBox& b : boxes) {
    if (!is_upright(b, 1e-9)) throw Error(ErrorCode::kInvalidArgument, "mAP needs upright boxes");
  }
}

// Per-class AP; nullopt for classes with neither ground truth nor detections.
std::array<std::optional<double>, kNumClasses> average_precision_per_class(std::span<const SceneDetections> scenes,
                                                                           double iou_threshold) {
  struct Detection {
    double score;
    std::size_t scene;
    std::size_t box;
  };
  std::array<std::optional<double>, kNumClasses> out{};
  std::vector<std::vector<RotatedBox>> gt_boxes(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    require_upright(scenes[s].boxes);
    for (std::uint16_t id : scenes[s].gt.instance_ids()) gt_boxes[s].push_back(mask_upright_box(scenes[s].gt, id));
  }

  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<BrickClass>(c);
    std::size_t num_gt = 0;
    for (const auto& g : gt_boxes) {
      num_gt += static_cast<std::size_t>(
          std::count_if(g.begin(), g.end(), [&](const RotatedBox& b) { return b.cls() == cls; }));
    }

    std::vector<Detection> dets;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (std::size_t b = 0; b < scenes[s].boxes.size(); ++b) {
        if (scenes[s].boxes[b].cls() == cls) dets.push_back({scenes[s].boxes[b].score(), s, b});
      }
    }
    if (num_gt == 0 && dets.empty()) continue;
    if (num_gt == 0) {
      out[c] = 0.0;
      continue;
    }
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });

    std::vector<std::vector<bool>> used(scenes.size());
    for (std::size_t s = 0; s < scenes.size(); ++s) used[s].assign(gt_boxes[s].size(), false);
    std::vector<bool> is_tp;
    is_tp.reserve(dets.size());
    for (const Detection& d : dets) {
      const RotatedBox& box = scenes[d.scene].boxes[d.box];
      double best_iou = 0.0;
      std::optional<std::size_t> best;
      for (std::size_t g = 0; g < gt_boxes[d.scene].size(); ++g) {
        if (gt_boxes[d.scene][g].cls() != cls) continue;
        const double iou = rotated_iou(box, gt_boxes[d.scene][g]);
        if (iou > best_iou) {
          best_iou = iou;
          best = g;
        }
      }
      // VOC rule: a detection whose best match is already taken is a false positive.
      const bool tp = best && best_iou >= iou_threshold && !used[d.scene][*best];
      if (tp) used[d.scene][*best] = true;
      is_tp.push_back(tp);
    }
    out[c] = interpolated_average_precision(is_tp, num_gt);
  }
  return out;
}

double mean_of(const std::array<std::optional<double>, kNumClasses>& aps) {
  double sum = 0.0;
  int n = 0;
  for (const auto& ap : aps) {
    if (ap) {
      sum += *ap;
      ++n;
    }
  }
  return n == 0 ? 1.0 : sum / n;
}

}  // namespace

PixelCounts pixel_counts(std::span<const RotatedBox> boxes, const InstanceMask& gt) {
  PixelCounts counts;
  for (const RotatedBox& box : boxes) {
    const ConvexPolygon poly = box_corners(box);
    Point2 lo = poly.vertices().front(), hi = lo;
    for (const Point2& p : poly.vertices()) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const int u0 = std::max(0, static_cast<int>(std::floor(lo.x() - 0.5)));
    const int v0 = std::max(0, static_cast<int>(std::floor(lo.y() - 0.5)));
    const int u1 = std::min(gt.width() - 1, static_cast<int>(std::ceil(hi.x())));
    const int v1 = std::min(gt.height() - 1, static_cast<int>(std::ceil(hi.y())));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        if (!box.contains({u + 0.5, v + 0.5})) continue;
        ++counts.total;
        const std::uint16_t id = gt.at(u, v);
        if (id != 0 && gt.class_of(id) == box.cls()) ++counts.object;
      }
    }
  }
  return counts;
}

std::optional<double> pixel_precision(std::span<const RotatedBox> boxes, const InstanceMask& gt) {
  return pixel_counts(boxes, gt).precision();
}

RecallCounts recall_counts(std::span<const RotatedBox> boxes, const InstanceMask& gt, MatchRule rule) {
  RecallCounts total;
  for (const RecallCounts& c : recall_per_class(boxes, gt, rule)) total += c;
  return total;
}

double detection_recall(std::span<const RotatedBox> boxes, const InstanceMask& gt, MatchRule rule) {
  return recall_counts(boxes, gt, rule).recall();
}

double interpolated_average_precision(const std::vector<bool>& is_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double map_score(std::span<const SceneDetections> scenes, double iou_threshold) {
  return mean_of(average_precision_per_class(scenes, iou_threshold));
}

double map_score(std::span<const RotatedBox> boxes, const InstanceMask& gt, double iou_threshold) {
  const SceneDetections scene{std::vector<RotatedBox>(boxes.begin(), boxes.end()), gt};
  return map_score(std::span<const SceneDetections>(&scene, 1), iou_threshold);
}

EvalReport evaluate(std::span<const SceneDetections> scenes, BoxMode mode, MatchRule rule, double map_iou_threshold) {
  EvalReport report;
  std::vector<SceneDetections> scored;
  scored.reserve(scenes.size());
  for (const SceneDetections& s : scenes) {
    SceneDetections copy{{}, s.gt};
    for (const RotatedBox& b : s.boxes) copy.boxes.push_back(mode == BoxMode::kUpright ? upright_bbox(b) : b);
    scored.push_back(std::move(copy));
  }

  for (const SceneDetections& s : scored) {
    s.gt.validate();
    for (int c = 0; c < kNumClasses; ++c) {
      std::vector<RotatedBox> of_class;
      std::copy_if(s.boxes.begin(), s.boxes.end(), std::back_inserter(of_class),
                   [&](const RotatedBox& b) { return b.cls() == static_cast<BrickClass>(c); });
      report.per_class[c].pixels += pixel_counts(of_class, s.gt);
    }
    const auto recalls = recall_per_class(s.boxes, s.gt, rule);
    for (int c = 0; c < kNumClasses; ++c) report.per_class[c].bricks += recalls[c];
  }
  for (auto& pc : report.per_class) {
    pc.precision = pc.pixels.precision();
    pc.recall = pc.bricks.recall();
    report.pixels += pc.pixels;
    report.bricks += pc.bricks;
  }
  report.precision = report.pixels.precision();
  report.recall = report.bricks.recall();

  if (mode == BoxMode::kUpright) {
    const auto aps = average_precision_per_class(scored, map_iou_threshold);
    for (int c = 0; c < kNumClasses; ++c) report.per_class[c].average_precision = aps[c];
    report.map = mean_of(aps);
  }
  return report;
}

std::vector<RotatedBox> ground_truth_boxes(const InstanceMask& gt) {
  std::vector<RotatedBox> boxes;
  for (std::uint16_t id : gt.instance_ids()) boxes.push_back(mask_box(gt, id));
  return boxes;
}

std::vector<PrecisionPair> compare_rotated_vs_upright(std::span<const InstanceMask> scenes) {
  std::vector<PrecisionPair> out;
  out.reserve(scenes.size());
  for (const InstanceMask& gt : scenes) {
    const std::vector<RotatedBox> rotated = ground_truth_boxes(gt);
    std::vector<RotatedBox> upright;
    upright.reserve(rotated.size());
    for (const RotatedBox& b : rotated) upright.push_back(upright_bbox(b));
    out.push_back({pixel_precision(rotated, gt), pixel_precision(upright, gt)});
  }
  return out;
}

}  // namespace brickvision
