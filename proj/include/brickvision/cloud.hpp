#pragma once

// Planar-patch geometry on brick point clouds: RANSAC plane, patch pose,
// boundary points, RANSAC lines, corners and edges. Lengths are meters in the
// camera frame (x right, y down, z forward).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace brickvision {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct PixelCoord {
  std::uint16_t u = 0;
  std::uint16_t v = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// 3D points, optionally registered to image pixels (one pixel per point).
struct PointCloud {
  std::vector<Point3> points;
  std::vector<PixelCoord> pixels;  // empty, or one entry per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool registered() const { return !pixels.empty(); }
  /// Throws InvalidArgument on non-finite points or a pixel list of the wrong size.
  void validate() const;
  PointCloud subset(std::span<const std::size_t> indices) const;
};

struct RansacParams {
  int iterations = 500;
  double threshold = 0.005;
  std::size_t min_inliers = 30;
  std::uint64_t seed = 0x5eedu;

  void validate() const;
};

inline RansacParams default_line_params() { return {500, 0.005, 10, 0x5eedu}; }

/// n.p + d = 0 with |n| = 1 and n facing the camera.
struct PlaneModel {
  Vector3 normal = Vector3::UnitZ();
  double offset = 0.0;
  std::vector<std::size_t> inliers;

  double distance(const Point3& p) const { return normal.dot(p) + offset; }
  Point3 project(const Point3& p) const { return p - distance(p) * normal; }
  /// Orthonormal in-plane basis (u, v) with u x v = normal.
  std::pair<Vector3, Vector3> basis() const;
};

/// Patch frame: e1 major axis, e2 minor axis, e3 plane normal (right-handed).
struct SurfacePose {
  Point3 centroid = Point3::Zero();
  Vector3 major = Vector3::UnitX();
  Vector3 minor = Vector3::UnitY();
  Vector3 normal = Vector3::UnitZ();
  /// Principal in-plane variances, largest first.
  double major_variance = 0.0;
  double minor_variance = 0.0;

  Matrix3 axes() const;
};

struct Line3 {
  Point3 anchor = Point3::Zero();
  Vector3 direction = Vector3::UnitX();
  std::vector<std::size_t> inliers;  // indices into the source cloud

  double distance(const Point3& p) const;
};

struct Corner {
  Point3 point;
  std::size_t line_a;
  std::size_t line_b;
};

struct Edge {
  std::size_t corner_a;
  std::size_t corner_b;
  std::size_t line;
  double length;
};

/// Best plane over sampled triples, refit to its inliers by least squares.
/// Throws InsufficientInliers when fewer than `min_inliers` support it.
PlaneModel ransac_plane(const PointCloud& cloud, const RansacParams& params = {});

/// Least-squares plane through the given points (normal facing the camera).
PlaneModel fit_plane(const PointCloud& cloud, std::span<const std::size_t> indices);

/// Centroid and principal in-plane axes of the plane inliers. e1 is signed so
/// that it has a non-negative camera-x component. Throws DegenerateScatter when
/// the two in-plane variances are within 1%.
SurfacePose surface_pose(const PointCloud& cloud, const PlaneModel& plane);

/// Inlier indices whose k nearest in-plane neighbours leave an angular gap
/// larger than `gap`. Throws TooSparse when there are not more than k inliers.
std::vector<std::size_t> boundary_points(const PointCloud& cloud, const PlaneModel& plane, int k = 10,
                                         double gap = 1.5707963267948966);

/// Sequential RANSAC on in-plane projections of `indices`. After each line is
/// accepted, points within three thresholds of it are no longer considered.
std::vector<Line3> ransac_lines(const PointCloud& cloud, std::span<const std::size_t> indices,
                                const PlaneModel& plane, const RansacParams& params = default_line_params(),
                                std::size_t max_lines = 8);

/// In-plane intersections of non-parallel line pairs (|sin angle| >= min_sine)
/// lying within `max_gap` of some inlier of both lines.
std::vector<Corner> corner_points(const PointCloud& cloud, std::span<const Line3> lines, const PlaneModel& plane,
                                  double max_gap = 0.02, double min_sine = 0.1);

/// Two corners form an edge when they share a generating line; each line
/// contributes at most its closest pair of corners.
std::vector<Edge> pair_corners_to_edges(std::span<const Corner> corners, std::span<const Line3> lines);

}  // namespace brickvision
