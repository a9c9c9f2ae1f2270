#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "brickvision/geom.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace brickvision;
using std::numbers::pi;

namespace {

bool has_vertex(const ConvexPolygon& poly, const Point2& p, double tol = 1e-9) {
  return std::any_of(poly.vertices().begin(), poly.vertices().end(),
                     [&](const Point2& v) { return (v - p).norm() < tol; });
}

}  // namespace

TEST(RotatedBox, CanonicalizesSwappedSides) {
  const RotatedBox b(10, 20, 2, 4, 0.0);
  EXPECT_DOUBLE_EQ(b.w(), 4);
  EXPECT_DOUBLE_EQ(b.h(), 2);
  EXPECT_NEAR(b.theta(), pi / 2, 1e-12);
  EXPECT_EQ(b, RotatedBox(10, 20, 4, 2, pi / 2));
  EXPECT_EQ(RotatedBox(0, 0, 5, 3, -0.25), RotatedBox(0, 0, 5, 3, pi - 0.25));
  EXPECT_EQ(RotatedBox(0, 0, 5, 3, 0.25 + 3 * pi), RotatedBox(0, 0, 5, 3, 0.25));
}

TEST(RotatedBox, SquareFoldsIntoQuarterTurn) {
  const RotatedBox b(0, 0, 3, 3, 2.0);
  EXPECT_GE(b.theta(), 0.0);
  EXPECT_LT(b.theta(), pi / 2);
  EXPECT_NEAR(b.theta(), 2.0 - pi / 2, 1e-12);
}

TEST(RotatedBox, RejectsInvalidParameters) {
  EXPECT_ERROR_CODE(RotatedBox(0, 0, 0, 1, 0), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(RotatedBox(0, 0, 1, -1, 0), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(RotatedBox(0, 0, 1, 1, NAN), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(RotatedBox(0, 0, 1, 1, 0, BrickClass::kBlue, 1.5), ErrorCode::kInvalidArgument);
}

TEST(BoxCorners, AxisAlignedSquare) {
  const ConvexPolygon c = box_corners(RotatedBox(0, 0, 2, 2, 0));
  ASSERT_EQ(c.size(), 4u);
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) EXPECT_TRUE(has_vertex(c, {sx, sy}));
  }
  EXPECT_NEAR(c.area(), 4.0, 1e-12);
}

TEST(BoxCorners, DiamondAtQuarterPi) {
  const ConvexPolygon c = box_corners(RotatedBox(0, 0, 2, 2, pi / 4));
  const double r = std::sqrt(2.0);
  EXPECT_TRUE(has_vertex(c, {r, 0}, 1e-9));
  EXPECT_TRUE(has_vertex(c, {-r, 0}, 1e-9));
  EXPECT_TRUE(has_vertex(c, {0, r}, 1e-9));
  EXPECT_TRUE(has_vertex(c, {0, -r}, 1e-9));
}

TEST(BoxCorners, DistanceMatrixMatchesSides) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const RotatedBox b = oracle::random_box(rng);
    const ConvexPolygon c = box_corners(b);
    ASSERT_EQ(c.size(), 4u);
    std::vector<double> d;
    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) d.push_back((c.vertices()[p] - c.vertices()[q]).norm());
    }
    std::sort(d.begin(), d.end());
    const double diag = std::hypot(b.w(), b.h());
    EXPECT_NEAR(d[0], b.h(), 1e-9);
    EXPECT_NEAR(d[1], b.h(), 1e-9);
    EXPECT_NEAR(d[2], b.w(), 1e-9);
    EXPECT_NEAR(d[3], b.w(), 1e-9);
    EXPECT_NEAR(d[4], diag, 1e-9);
    EXPECT_NEAR(d[5], diag, 1e-9);
    EXPECT_LT((c.centroid() - b.center()).norm(), 1e-6);
    EXPECT_GT(c.area(), 0.0);  // counter-clockwise
  }
}

TEST(ConvexPolygon, NormalizesInput) {
  // Clockwise with a repeated and a collinear vertex.
  const ConvexPolygon p({{0, 0}, {0, 2}, {0, 2}, {2, 2}, {2, 1}, {2, 0}});
  EXPECT_EQ(p.size(), 4u);
  EXPECT_NEAR(p.area(), 4.0, 1e-12);
  EXPECT_TRUE(p.contains({1, 1}));
  EXPECT_FALSE(p.contains({3, 1}));
}

TEST(ConvexPolygon, RejectsDegenerateAndConcave) {
  EXPECT_ERROR_CODE(ConvexPolygon({{0, 0}, {1, 1}, {2, 2}}), ErrorCode::kDegenerateInput);
  EXPECT_ERROR_CODE(ConvexPolygon({{0, 0}, {4, 0}, {1, 1}, {0, 4}}), ErrorCode::kInvalidArgument);
}

TEST(RotatedIou, Examples) {
  const RotatedBox a(50, 50, 30, 10, 0.3);
  EXPECT_NEAR(rotated_iou(a, a), 1.0, 1e-12);
  EXPECT_EQ(rotated_iou(RotatedBox(0, 0, 2, 2, 0), RotatedBox(100, 0, 2, 2, 0)), 0.0);
  EXPECT_NEAR(rotated_iou(RotatedBox(0.5, 0.5, 1, 1, 0), RotatedBox(1.0, 0.5, 1, 1, 0)), 1.0 / 3.0, 1e-12);
}

TEST(RotatedIou, SymmetricBoundedReflexive) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> jitter(-30, 30);
  for (int i = 0; i < 10000; ++i) {
    const RotatedBox a = oracle::random_box(rng, 200, 200, 2, 60);
    const RotatedBox b0 = oracle::random_box(rng, 200, 200, 2, 60);
    const RotatedBox b(a.cx() + jitter(rng), a.cy() + jitter(rng), b0.w(), b0.h(), b0.theta());
    const double ab = rotated_iou(a, b);
    ASSERT_NEAR(ab, rotated_iou(b, a), 1e-12);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0 + 1e-12);
    ASSERT_NEAR(rotated_iou(a, a), 1.0, 1e-9);
  }
}

TEST(RotatedIou, InvariantUnderRigidMotion) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0, 2 * pi), shift(-100, 100), jitter(-20, 20);
  for (int i = 0; i < 500; ++i) {
    const RotatedBox a = oracle::random_box(rng, 200, 200, 5, 60);
    const RotatedBox b0 = oracle::random_box(rng, 200, 200, 5, 60);
    const RotatedBox b(a.cx() + jitter(rng), a.cy() + jitter(rng), b0.w(), b0.h(), b0.theta());
    const double phi = angle(rng), tx = shift(rng), ty = shift(rng);
    const auto move = [&](const RotatedBox& r) {
      const double x = std::cos(phi) * r.cx() - std::sin(phi) * r.cy() + tx;
      const double y = std::sin(phi) * r.cx() + std::cos(phi) * r.cy() + ty;
      return RotatedBox(x, y, r.w(), r.h(), r.theta() + phi);
    };
    EXPECT_NEAR(rotated_iou(a, b), rotated_iou(move(a), move(b)), 1e-6);
  }
}

TEST(RotatedIou, MatchesRasterOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> jitter(-25, 25);
  for (int i = 0; i < 20; ++i) {
    const RotatedBox a = oracle::random_box(rng, 200, 200, 10, 80);
    const RotatedBox b0 = oracle::random_box(rng, 200, 200, 10, 80);
    const RotatedBox b(a.cx() + jitter(rng), a.cy() + jitter(rng), b0.w(), b0.h(), b0.theta());
    EXPECT_NEAR(rotated_iou(a, b), oracle::raster_iou(a, b, 600), 0.01);
  }
}

TEST(RotatedNms, EmptyInput) { EXPECT_TRUE(rotated_nms({}, 0.5).empty()); }

TEST(RotatedNms, KeepsHigherScoredDuplicate) {
  const std::vector<RotatedBox> boxes{RotatedBox(50, 50, 20, 10, 0.2, BrickClass::kBlue, 0.8),
                                      RotatedBox(50, 50, 20, 10, 0.2, BrickClass::kBlue, 0.9)};
  const std::vector<RotatedBox> kept = rotated_nms(boxes, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].score(), 0.9);
}

TEST(RotatedNms, TiltedNeighboursSurvive) {
  // Two parallel bricks at 45 degrees, side by side.
  const double off = 11.0 / std::sqrt(2.0);
  const RotatedBox a(200 - off, 200 + off, 140, 20, pi / 4, BrickClass::kBlue, 0.9);
  const RotatedBox b(200 + off, 200 - off, 140, 20, pi / 4, BrickClass::kBlue, 0.8);
  ASSERT_LT(rotated_iou(a, b), 0.1);
  ASSERT_GT(rotated_iou(upright_bbox(a), upright_bbox(b)), 0.5);
  EXPECT_EQ(rotated_nms(std::vector<RotatedBox>{a, b}, 0.5).size(), 2u);
  const std::vector<RotatedBox> hulls{upright_bbox(a), upright_bbox(b)};
  EXPECT_EQ(rotated_nms(hulls, 0.5).size(), 1u);
}

TEST(RotatedNms, SubsetOrderIndependentAndSeparated) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-15, 15);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<RotatedBox> boxes;
    for (int i = 0; i < 25; ++i) {
      const RotatedBox r = oracle::random_box(rng, 200, 200, 10, 50);
      boxes.emplace_back(100 + jitter(rng), 100 + jitter(rng), r.w(), r.h(), r.theta(), BrickClass::kBlue,
                         (i + 1) / 26.0);
    }
    const std::vector<RotatedBox> kept = rotated_nms(boxes, 0.4);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_NE(std::find(boxes.begin(), boxes.end(), kept[i]), boxes.end());
      if (i > 0) EXPECT_GT(kept[i - 1].score(), kept[i].score());
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LE(rotated_iou(kept[i], kept[j]), 0.4);
    }
    std::shuffle(boxes.begin(), boxes.end(), rng);
    EXPECT_EQ(rotated_nms(boxes, 0.4), kept);
  }
}

TEST(RotatedNms, RejectsThresholdOutsideUnitInterval) {
  const std::vector<RotatedBox> boxes{RotatedBox(0, 0, 2, 1, 0)};
  EXPECT_ERROR_CODE(rotated_nms(boxes, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(rotated_nms(boxes, 1.0), ErrorCode::kInvalidArgument);
}

TEST(ConvexHull, DropsInteriorAndCollinearPoints) {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}, {0, 1}};
  const std::vector<Point2> hull = convex_hull(pts);
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_NEAR(ConvexPolygon(hull).area(), 4.0, 1e-12);
}

TEST(MinAreaRect, AxisAlignedCorners) {
  const std::vector<Point2> pts{{10, 20}, {50, 20}, {50, 30}, {10, 30}};
  const RotatedBox r = min_area_rect(pts);
  EXPECT_NEAR(r.cx(), 30, 1e-9);
  EXPECT_NEAR(r.cy(), 25, 1e-9);
  EXPECT_NEAR(r.w(), 40, 1e-9);
  EXPECT_NEAR(r.h(), 10, 1e-9);
  EXPECT_NEAR(r.theta(), 0.0, 1e-9);
}

TEST(MinAreaRect, RotatedCorners) {
  const double t = pi / 6;
  const RotatedBox truth(100, 80, 40, 10, t);
  const RotatedBox r = min_area_rect(box_corners(truth).vertices());
  EXPECT_NEAR(r.w(), 40, 1e-9);
  EXPECT_NEAR(r.h(), 10, 1e-9);
  EXPECT_NEAR(r.theta(), t, 1e-6);
  EXPECT_NEAR(r.cx(), 100, 1e-9);
  EXPECT_NEAR(r.cy(), 80, 1e-9);
}

TEST(MinAreaRect, CollinearPointsAreDegenerate) {
  const std::vector<Point2> pts{{0, 0}, {1, 1}, {2, 2}, {5, 5}};
  EXPECT_ERROR_CODE(min_area_rect(pts), ErrorCode::kDegenerateInput);
}

TEST(MinAreaRect, OptimalAgainstExhaustiveOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> coord(-50, 50);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < 25; ++k) pts.emplace_back(coord(rng), 0.3 * coord(rng));
    const RotatedBox r = min_area_rect(pts);
    const double best = oracle::brute_min_rect_area(pts);
    EXPECT_NEAR(r.area(), best, 1e-9 * best);
    EXPECT_LE(r.area(), upright_bbox(r).area() + 1e-9);
    for (const Point2& p : pts) EXPECT_TRUE(r.contains(p, 1e-7));
  }
}

TEST(MinAreaRect, NeverLargerThanUprightBounds) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(0, 100);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < 12; ++k) pts.emplace_back(coord(rng), coord(rng));
    double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
    for (const Point2& p : pts) {
      x0 = std::min(x0, p.x());
      x1 = std::max(x1, p.x());
      y0 = std::min(y0, p.y());
      y1 = std::max(y1, p.y());
    }
    EXPECT_LE(min_area_rect(pts).area(), (x1 - x0) * (y1 - y0) * (1 + 1e-12));
  }
}

TEST(UprightBbox, Examples) {
  const RotatedBox flat(10, 10, 8, 4, 0.0);
  EXPECT_EQ(upright_bbox(flat), flat);
  const RotatedBox diamond = upright_bbox(RotatedBox(0, 0, 2, 2, pi / 4));
  EXPECT_NEAR(diamond.w(), 2 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(diamond.h(), 2 * std::sqrt(2.0), 1e-9);
  EXPECT_TRUE(is_upright(diamond));
}

TEST(UprightBbox, ContainsCornersAndIsNotSmaller) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const RotatedBox b = oracle::random_box(rng);
    const RotatedBox u = upright_bbox(b);
    EXPECT_TRUE(is_upright(u));
    EXPECT_GE(u.area(), b.area() - 1e-9);
    const ConvexPolygon corners = box_corners(b);
    for (const Point2& c : corners.vertices()) EXPECT_TRUE(u.contains(c, 1e-7));
  }
}

TEST(InstanceMask, ClassLookupAndValidation) {
  InstanceMask m(8, 6);
  m.set(1, 1, 3);
  m.set(2, 1, 3);
  EXPECT_ERROR_CODE(m.validate(), ErrorCode::kInvalidArgument);
  m.set_class(3, BrickClass::kGreen);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.class_of(3), BrickClass::kGreen);
  EXPECT_EQ(m.instance_ids(), std::vector<std::uint16_t>{3});
  EXPECT_EQ(m.pixel_count(3), 2u);
  EXPECT_ERROR_CODE(m.class_of(4), ErrorCode::kInvalidArgument);
}

TEST(MaskBox, AxisAlignedRectangleCoversPixels) {
  InstanceMask m;
  oracle::paint_rect(m, 10, 20, 30, 25, 1);
  m.set_class(1, BrickClass::kGreen);
  const RotatedBox b = mask_box(m, 1);
  EXPECT_NEAR(b.cx(), 20, 1e-9);
  EXPECT_NEAR(b.cy(), 22.5, 1e-9);
  EXPECT_NEAR(b.w(), 20, 1e-9);
  EXPECT_NEAR(b.h(), 5, 1e-9);
  EXPECT_NEAR(b.theta(), 0, 1e-9);
  EXPECT_EQ(b.cls(), BrickClass::kGreen);
  EXPECT_EQ(mask_upright_box(m, 1), b);
  EXPECT_ERROR_CODE(mask_box(m, 2), ErrorCode::kDegenerateInput);
}

TEST(MaskBox, TiltedMaskInsideBox) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    InstanceMask m;
    oracle::paint_box(m, oracle::random_box(rng, 640, 480, 8, 100), 1);
    m.set_class(1, BrickClass::kBlue);
    if (m.pixel_count(1) == 0) continue;
    const RotatedBox b = mask_box(m, 1);
    const RotatedBox up = mask_upright_box(m, 1);
    EXPECT_LE(b.area(), up.area() + 1e-9);
    for (int v = 0; v < m.height(); ++v) {
      for (int u = 0; u < m.width(); ++u) {
        if (m.at(u, v) == 1) ASSERT_TRUE(b.contains({u + 0.5, v + 0.5}, 1e-7));
      }
    }
  }
}

TEST(WrapAngle, IntoHalfOpenRange) {
  EXPECT_NEAR(wrap_angle(-0.5, pi), pi - 0.5, 1e-12);
  EXPECT_NEAR(wrap_angle(3 * pi + 0.25, pi), 0.25, 1e-12);
  EXPECT_GE(wrap_angle(-1e-18, pi), 0.0);
  EXPECT_LT(wrap_angle(-1e-18, pi), pi);
}
