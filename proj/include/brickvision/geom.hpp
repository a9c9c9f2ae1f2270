#pragma once

// Image-plane geometry for rotated boxes.
//
// Coordinates are continuous pixel coordinates: pixel (u, v) covers the
// square [u, u+1) x [v, v+1) and its center is (u + 0.5, v + 0.5). Angles are
// radians measured from the image +x axis.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace brickvision {

using Point2 = Eigen::Vector2d;

enum class BrickClass : std::uint8_t { kBlue = 0, kGreen = 1 };

inline constexpr int kNumClasses = 2;

/// Rotated rectangle in canonical form: w >= h and theta in [0, pi).
///
/// The constructor normalizes any (w, h, theta) triple describing the same
/// rectangle to the canonical one, so two boxes compare equal iff they cover
/// the same region. Squares additionally fold theta into [0, pi/2).
class RotatedBox {
 public:
  RotatedBox(double cx, double cy, double w, double h, double theta,
             BrickClass cls = BrickClass::kBlue, double score = 1.0);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double theta() const { return theta_; }
  BrickClass cls() const { return cls_; }
  double score() const { return score_; }
  Point2 center() const { return {cx_, cy_}; }
  double area() const { return w_ * h_; }

  RotatedBox with_score(double score) const;
  RotatedBox with_class(BrickClass cls) const;

  // Unit vectors along the w side and the h side.
  Point2 major_axis() const;
  Point2 minor_axis() const;

  bool contains(const Point2& p, double eps = 1e-9) const;

  friend bool operator==(const RotatedBox&, const RotatedBox&) = default;

 private:
  double cx_, cy_, w_, h_, theta_;
  BrickClass cls_;
  double score_;
};

/// Counter-clockwise (positive shoelace area) strictly convex polygon.
class ConvexPolygon {
 public:
  /// Sorts out orientation, drops repeated (within 1e-9) and collinear
  /// vertices. Throws DegenerateInput when fewer than 3 vertices remain.
  explicit ConvexPolygon(std::vector<Point2> vertices);

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  double area() const;
  Point2 centroid() const;
  bool contains(const Point2& p, double eps = 1e-9) const;

 private:
  std::vector<Point2> vertices_;
};

/// Per-pixel instance labels; 0 is background.
class InstanceMask {
 public:
  InstanceMask(int width = 640, int height = 480);
  InstanceMask(int width, int height, std::vector<std::uint16_t> labels,
               std::map<std::uint16_t, BrickClass> class_of);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint16_t at(int u, int v) const { return labels_[static_cast<std::size_t>(v) * width_ + u]; }
  void set(int u, int v, std::uint16_t id) { labels_[static_cast<std::size_t>(v) * width_ + u] = id; }
  const std::vector<std::uint16_t>& labels() const { return labels_; }

  const std::map<std::uint16_t, BrickClass>& class_map() const { return class_of_; }
  void set_class(std::uint16_t id, BrickClass cls) { class_of_[id] = cls; }
  // Throws InvalidArgument for ids without a class entry.
  BrickClass class_of(std::uint16_t id) const;

  /// Ids with at least one pixel, ascending.
  std::vector<std::uint16_t> instance_ids() const;
  std::size_t pixel_count(std::uint16_t id) const;
  /// Checks that every nonzero label has a class entry.
  void validate() const;

 private:
  int width_, height_;
  std::vector<std::uint16_t> labels_;
  std::map<std::uint16_t, BrickClass> class_of_;
};

ConvexPolygon box_corners(const RotatedBox& b);

/// Exact IoU by convex clipping. Degenerate overlaps give 0.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

/// Area of the intersection of two convex polygons.
double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b);

/// Greedy suppression in descending score order (stable for equal scores).
std::vector<RotatedBox> rotated_nms(std::span<const RotatedBox> boxes, double iou_threshold = 0.5);

/// Andrew's monotone chain; returns CCW hull without collinear points.
std::vector<Point2> convex_hull(std::span<const Point2> points);

/// Smallest-area enclosing rectangle via rotating calipers over the hull.
/// Throws DegenerateInput when all points are collinear.
RotatedBox min_area_rect(std::span<const Point2> points);

/// Tightest axis-aligned box around the corners of `b`. Since the result is
/// canonical, a box taller than wide carries theta = pi/2.
RotatedBox upright_bbox(const RotatedBox& b);

/// theta is 0 or pi/2 within `tol`.
bool is_upright(const RotatedBox& b, double tol = 1e-9);

/// Rotated box around every pixel square of instance `id`, class from the mask.
RotatedBox mask_box(const InstanceMask& mask, std::uint16_t id);

/// Axis-aligned pixel bounding box of instance `id`.
RotatedBox mask_upright_box(const InstanceMask& mask, std::uint16_t id);

/// Wrap an angle into [0, period).
double wrap_angle(double angle, double period);

}  // namespace brickvision
