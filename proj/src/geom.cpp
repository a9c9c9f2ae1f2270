#include "brickvision/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "brickvision/error.hpp"

namespace brickvision {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * twice;
}

// Sutherland-Hodgman: keep the part of `subject` left of the directed edge a->b.
std::vector<Point2> clip_half_plane(const std::vector<Point2>& subject, const Point2& a, const Point2& b) {
  std::vector<Point2> out;
  out.reserve(subject.size() + 1);
  const Point2 edge = b - a;
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = subject[i];
    const Point2& nxt = subject[(i + 1) % n];
    const double side_cur = cross(edge, cur - a);
    const double side_nxt = cross(edge, nxt - a);
    if (side_cur >= 0.0) out.push_back(cur);
    if ((side_cur >= 0.0) != (side_nxt >= 0.0)) {
      const double t = side_cur / (side_cur - side_nxt);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

}  // namespace

double wrap_angle(double angle, double period) {
  double r = std::fmod(angle, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// RotatedBox

RotatedBox::RotatedBox(double cx, double cy, double w, double h, double theta, BrickClass cls, double score)
    : cx_(cx), cy_(cy), w_(w), h_(h), theta_(theta), cls_(cls), score_(score) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h) ||
      !std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "rotated box parameters must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rotated box needs w > 0 and h > 0");
  }
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "score must lie in [0, 1]");
  }
  if (w_ < h_) {
    std::swap(w_, h_);
    theta_ += kPi / 2.0;
  }
  theta_ = wrap_angle(theta_, w_ == h_ ? kPi / 2.0 : kPi);
}

RotatedBox RotatedBox::with_score(double score) const { return {cx_, cy_, w_, h_, theta_, cls_, score}; }

RotatedBox RotatedBox::with_class(BrickClass cls) const { return {cx_, cy_, w_, h_, theta_, cls, score_}; }

Point2 RotatedBox::major_axis() const { return {std::cos(theta_), std::sin(theta_)}; }

Point2 RotatedBox::minor_axis() const { return {-std::sin(theta_), std::cos(theta_)}; }

bool RotatedBox::contains(const Point2& p, double eps) const {
  const Point2 d = p - center();
  return std::abs(d.dot(major_axis())) <= 0.5 * w_ + eps && std::abs(d.dot(minor_axis())) <= 0.5 * h_ + eps;
}

// ---------------------------------------------------------------------------
// ConvexPolygon

ConvexPolygon::ConvexPolygon(std::vector<Point2> vertices) {
  std::vector<Point2> unique;
  unique.reserve(vertices.size());
  for (const Point2& v : vertices) {
    if (unique.empty() || (v - unique.back()).norm() > 1e-9) unique.push_back(v);
  }
  while (unique.size() > 1 && (unique.front() - unique.back()).norm() <= 1e-9) unique.pop_back();
  if (unique.size() >= 3 && signed_area(unique) < 0.0) std::reverse(unique.begin(), unique.end());

  // Drop vertices lying on the segment between their neighbours.
  bool changed = true;
  while (changed && unique.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < unique.size(); ++i) {
      const std::size_t n = unique.size();
      const Point2& prev = unique[(i + n - 1) % n];
      const Point2& next = unique[(i + 1) % n];
      const Point2 a = unique[i] - prev;
      const Point2 b = next - unique[i];
      if (std::abs(cross(a, b)) <= 1e-12 * a.norm() * b.norm()) {
        unique.erase(unique.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (unique.size() < 3) {
    throw Error(ErrorCode::kDegenerateInput, "polygon needs at least 3 non-collinear vertices");
  }
  for (std::size_t i = 0, n = unique.size(); i < n; ++i) {
    const Point2 a = unique[(i + 1) % n] - unique[i];
    const Point2 b = unique[(i + 2) % n] - unique[(i + 1) % n];
    if (cross(a, b) <= 0.0) throw Error(ErrorCode::kInvalidArgument, "polygon is not convex");
  }
  vertices_ = std::move(unique);
}

double ConvexPolygon::area() const { return signed_area(vertices_); }

Point2 ConvexPolygon::centroid() const {
  Point2 acc = Point2::Zero();
  double twice_area = 0.0;
  for (std::size_t i = 0, n = vertices_.size(); i < n; ++i) {
    const Point2& p = vertices_[i];
    const Point2& q = vertices_[(i + 1) % n];
    const double c = cross(p, q);
    acc += c * (p + q);
    twice_area += c;
  }
  return acc / (3.0 * twice_area);
}

bool ConvexPolygon::contains(const Point2& p, double eps) const {
  for (std::size_t i = 0, n = vertices_.size(); i < n; ++i) {
    const Point2 edge = vertices_[(i + 1) % n] - vertices_[i];
    if (cross(edge, p - vertices_[i]) < -eps * edge.norm()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// InstanceMask

InstanceMask::InstanceMask(int width, int height)
    : width_(width), height_(height), labels_(static_cast<std::size_t>(width) * height, 0) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "mask dimensions must be positive");
}

InstanceMask::InstanceMask(int width, int height, std::vector<std::uint16_t> labels,
                           std::map<std::uint16_t, BrickClass> class_of)
    : width_(width), height_(height), labels_(std::move(labels)), class_of_(std::move(class_of)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "mask dimensions must be positive");
  if (labels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "label buffer does not match mask dimensions");
  }
}

BrickClass InstanceMask::class_of(std::uint16_t id) const {
  auto it = class_of_.find(id);
  if (it == class_of_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "instance " + std::to_string(id) + " has no class entry");
  }
  return it->second;
}

std::vector<std::uint16_t> InstanceMask::instance_ids() const {
  std::vector<bool> seen(65536, false);
  for (std::uint16_t l : labels_) seen[l] = true;
  std::vector<std::uint16_t> ids;
  for (std::size_t id = 1; id < seen.size(); ++id) {
    if (seen[id]) ids.push_back(static_cast<std::uint16_t>(id));
  }
  return ids;
}

std::size_t InstanceMask::pixel_count(std::uint16_t id) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), id));
}

void InstanceMask::validate() const {
  for (std::uint16_t id : instance_ids()) (void)class_of(id);
}

// ---------------------------------------------------------------------------
// Operations

ConvexPolygon box_corners(const RotatedBox& b) {
  const Point2 c = b.center();
  const Point2 u = 0.5 * b.w() * b.major_axis();
  const Point2 v = 0.5 * b.h() * b.minor_axis();
  return ConvexPolygon({c - u - v, c + u - v, c + u + v, c - u + v});
}

double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b) {
  std::vector<Point2> clipped = a.vertices();
  const auto& clip = b.vertices();
  for (std::size_t i = 0, n = clip.size(); i < n && clipped.size() >= 3; ++i) {
    clipped = clip_half_plane(clipped, clip[i], clip[(i + 1) % n]);
  }
  if (clipped.size() < 3) return 0.0;
  return std::max(0.0, signed_area(clipped));
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const ConvexPolygon pa = box_corners(a);
  const ConvexPolygon pb = box_corners(b);
  const double inter = intersection_area(pa, pb);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0) || !(inter > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<RotatedBox> rotated_nms(std::span<const RotatedBox> boxes, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "NMS threshold must lie in (0, 1)");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return boxes[i].score() > boxes[j].score(); });
  std::vector<RotatedBox> kept;
  for (std::size_t idx : order) {
    const RotatedBox& candidate = boxes[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const RotatedBox& k) {
      return rotated_iou(k, candidate) > iou_threshold;
    });
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point2& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

RotatedBox min_area_rect(std::span<const Point2> points) {
  const std::vector<Point2> hull = convex_hull(points);
  if (hull.size() < 3) throw Error(ErrorCode::kDegenerateInput, "points are collinear");
  const std::size_t n = hull.size();

  auto edge_dir = [&](std::size_t i) -> Point2 { return (hull[(i + 1) % n] - hull[i]).normalized(); };

  // Calipers: `right` maximizes the projection on the edge direction, `top`
  // the projection on the inward normal, `left` minimizes the edge projection.
  std::size_t right = 0, top = 0, left = 0;
  {
    const Point2 e = edge_dir(0);
    const Point2 nrm(-e.y(), e.x());
    for (std::size_t j = 1; j < n; ++j) {
      if (hull[j].dot(e) > hull[right].dot(e)) right = j;
      if (hull[j].dot(nrm) > hull[top].dot(nrm)) top = j;
      if (hull[j].dot(e) < hull[left].dot(e)) left = j;
    }
  }

  double best_area = std::numeric_limits<double>::infinity();
  RotatedBox best(0.0, 0.0, 1.0, 1.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = edge_dir(i);
    const Point2 nrm(-e.y(), e.x());
    auto advance = [&](std::size_t& idx, const Point2& axis, double sign) {
      for (std::size_t guard = 0; guard < n; ++guard) {
        const std::size_t nxt = (idx + 1) % n;
        if (sign * hull[nxt].dot(axis) > sign * hull[idx].dot(axis)) {
          idx = nxt;
        } else {
          break;
        }
      }
    };
    advance(right, e, 1.0);
    advance(top, nrm, 1.0);
    advance(left, e, -1.0);

    const Point2& origin = hull[i];
    const double max_e = (hull[right] - origin).dot(e);
    const double min_e = (hull[left] - origin).dot(e);
    const double max_n = (hull[top] - origin).dot(nrm);
    const double area = (max_e - min_e) * max_n;
    if (area < best_area) {
      best_area = area;
      const Point2 c = origin + 0.5 * (max_e + min_e) * e + 0.5 * max_n * nrm;
      best = RotatedBox(c.x(), c.y(), max_e - min_e, max_n, std::atan2(e.y(), e.x()));
    }
  }
  return best;
}

RotatedBox upright_bbox(const RotatedBox& b) {
  const ConvexPolygon poly = box_corners(b);
  Point2 lo = poly.vertices().front(), hi = lo;
  for (const Point2& p : poly.vertices()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 c = 0.5 * (lo + hi);
  return RotatedBox(c.x(), c.y(), hi.x() - lo.x(), hi.y() - lo.y(), 0.0, b.cls(), b.score());
}

bool is_upright(const RotatedBox& b, double tol) {
  const double t = b.theta();
  return t <= tol || std::abs(t - kPi / 2.0) <= tol || kPi - t <= tol;
}

namespace {

// Leftmost and rightmost pixel per row span the hull of the instance's squares.
std::vector<Point2> instance_outline(const InstanceMask& mask, std::uint16_t id) {
  std::vector<Point2> pts;
  for (int v = 0; v < mask.height(); ++v) {
    int lo = -1, hi = -1;
    for (int u = 0; u < mask.width(); ++u) {
      if (mask.at(u, v) == id) {
        if (lo < 0) lo = u;
        hi = u;
      }
    }
    if (lo < 0) continue;
    pts.emplace_back(lo, v);
    pts.emplace_back(lo, v + 1);
    pts.emplace_back(hi + 1, v);
    pts.emplace_back(hi + 1, v + 1);
  }
  return pts;
}

}  // namespace

RotatedBox mask_box(const InstanceMask& mask, std::uint16_t id) {
  const std::vector<Point2> pts = instance_outline(mask, id);
  if (pts.empty()) {
    throw Error(ErrorCode::kDegenerateInput, "instance " + std::to_string(id) + " has no pixels");
  }
  return min_area_rect(pts).with_class(mask.class_of(id));
}

RotatedBox mask_upright_box(const InstanceMask& mask, std::uint16_t id) {
  const std::vector<Point2> pts = instance_outline(mask, id);
  if (pts.empty()) {
    throw Error(ErrorCode::kDegenerateInput, "instance " + std::to_string(id) + " has no pixels");
  }
  Point2 lo = pts.front(), hi = lo;
  for (const Point2& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 c = 0.5 * (lo + hi);
  return RotatedBox(c.x(), c.y(), hi.x() - lo.x(), hi.y() - lo.y(), 0.0, mask.class_of(id));
}

}  // namespace brickvision
