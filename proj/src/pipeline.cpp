#include "brickvision/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "brickvision/error.hpp"
#include "brickvision/synth.hpp"

namespace brickvision {

namespace {

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

// Re-estimates the plane with an inlier band sized from the robust residual
// scale. Noise-free faces get a tight band, which keeps the rim of neighbouring
// faces out of the fit; noisy faces get a wider one so the patch has no holes.
PlaneModel tighten_plane(const PointCloud& cloud, PlaneModel plane, double max_threshold) {
  for (int round = 0; round < 10; ++round) {
    std::vector<double> res;
    res.reserve(plane.inliers.size());
    for (std::size_t i : plane.inliers) res.push_back(std::abs(plane.distance(cloud.points[i])));
    const auto mid = res.begin() + static_cast<std::ptrdiff_t>(res.size() / 2);
    std::nth_element(res.begin(), mid, res.end());
    const double thr = std::clamp(3.5 * 1.4826 * *mid, 5e-4, max_threshold);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (std::abs(plane.distance(cloud.points[i])) <= thr) keep.push_back(i);
    }
    if (keep.size() < 3) break;
    const bool settled = keep == plane.inliers;
    plane = fit_plane(cloud, keep);
    if (settled) break;
  }
  return plane;
}

// Moves every plane inlier along its viewing ray (through the camera origin)
// onto the plane. Range noise acts along those rays, so this removes it.
PointCloud snap_to_plane(const PointCloud& cloud, const PlaneModel& plane) {
  PointCloud out = cloud;
  for (std::size_t i : plane.inliers) {
    const Point3& p = cloud.points[i];
    const double along = plane.normal.dot(p);
    if (std::abs(along) < 1e-12) continue;
    out.points[i] = (-plane.offset / along) * p;
  }
  return out;
}

// Patch frame from the minimum-area rectangle around the projected inliers:
// the long side gives the major axis and the rectangle center the face center.
SurfacePose rectangle_surface(const PointCloud& cloud, const PlaneModel& plane, const SurfacePose& pca) {
  const auto [u, v] = plane.basis();
  std::vector<Point2> flat;
  flat.reserve(plane.inliers.size());
  for (std::size_t i : plane.inliers) {
    const Point3 p = plane.project(cloud.points[i]);
    flat.emplace_back(p.dot(u), p.dot(v));
  }
  const RotatedBox rect = min_area_rect(flat);
  const Point2 axis = rect.major_axis();
  SurfacePose out = pca;
  Vector3 major = (axis.x() * u + axis.y() * v).normalized();
  if (major.x() < 0.0 || (std::abs(major.x()) < 1e-12 && major.y() < 0.0)) major = -major;
  out.major = major;
  out.minor = plane.normal.cross(major);
  out.normal = plane.normal;
  out.centroid = plane.project(rect.cx() * u + rect.cy() * v);
  return out;
}

}  // namespace

PipelineResult estimate_brick_pose(PointCloud brick_cloud, const BrickDims& dims, const PipelineParams& params) {
  PipelineResult r;
  r.crop = std::move(brick_cloud);
  r.plane = run_stage("plane", [&] {
    return tighten_plane(r.crop, ransac_plane(r.crop, params.plane), 2.0 * params.plane.threshold);
  });
  r.surface_cloud = snap_to_plane(r.crop, r.plane);
  const PointCloud& sc = r.surface_cloud;
  r.surface = run_stage("surface", [&] { return surface_pose(sc, r.plane); });
  r.boundary = run_stage("boundary",
                         [&] { return boundary_points(sc, r.plane, params.boundary_k, params.boundary_gap); });
  r.lines = run_stage("lines", [&] { return ransac_lines(sc, r.boundary, r.plane, params.line, params.max_lines); });
  r.corners = run_stage("corners", [&] {
    return corner_points(sc, r.lines, r.plane, params.corner_max_gap, params.corner_min_sine);
  });
  r.edges = run_stage("edges", [&] { return pair_corners_to_edges(r.corners, r.lines); });
  r.face = run_stage("identify", [&] {
    if (r.edges.size() < 2) throw Error(ErrorCode::kNoMatch, "need at least two adjacent edges");
    std::vector<double> lengths;
    for (const Edge& e : r.edges) lengths.push_back(e.length);
    return identify_surface(lengths, dims, params.face_tol);
  });
  r.refined_surface = run_stage("pose", [&] { return rectangle_surface(sc, r.plane, r.surface); });
  r.pose = run_stage("pose", [&] { return brick_pose_from_surface(r.refined_surface, r.face, dims); });
  return r;
}

PipelineResult estimate_brick_pose(const PointCloud& cloud, const RotatedBox& box, const BrickDims& dims,
                                   const PipelineParams& params) {
  PointCloud crop = run_stage("crop", [&] { return crop_brick_cloud(cloud, box); });
  return estimate_brick_pose(std::move(crop), dims, params);
}

}  // namespace brickvision
