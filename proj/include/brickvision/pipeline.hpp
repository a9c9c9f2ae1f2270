#pragma once

// Brick pose from a registered cloud and one rotated box:
// crop -> plane -> surface pose -> boundary -> lines -> corners -> edges ->
// face identification -> brick pose.

#include <numbers>
#include <vector>

#include "brickvision/cloud.hpp"
#include "brickvision/geom.hpp"
#include "brickvision/pose.hpp"

namespace brickvision {

struct PipelineParams {
  RansacParams plane{500, 0.005, 30, 0x5eedu};
  RansacParams line = default_line_params();
  int boundary_k = 10;
  double boundary_gap = std::numbers::pi / 2.0;
  std::size_t max_lines = 8;
  double corner_max_gap = 0.02;
  double corner_min_sine = 0.1;
  double face_tol = 0.012;
};

struct PipelineResult {
  PointCloud crop;
  PlaneModel plane;
  PointCloud surface_cloud;     // crop with plane inliers slid along their rays onto the plane
  SurfacePose surface;          // inlier centroid and principal axes
  std::vector<std::size_t> boundary;  // indices into `crop`
  std::vector<Line3> lines;
  std::vector<Corner> corners;
  std::vector<Edge> edges;
  FaceType face = FaceType::kLW;
  SurfacePose refined_surface;  // frame of the minimum-area rectangle around the inliers
  BrickPose pose;
};

/// Runs every stage. Everything after the plane works on `surface_cloud`;
/// index lists are valid for both clouds. Errors are re-thrown with the failing stage name
/// ("crop", "plane", "surface", "boundary", "lines", "corners", "edges",
/// "identify", "pose").
PipelineResult estimate_brick_pose(const PointCloud& cloud, const RotatedBox& box, const BrickDims& dims,
                                   const PipelineParams& params = {});

/// Same, starting from an already cropped brick cloud.
PipelineResult estimate_brick_pose(PointCloud brick_cloud, const BrickDims& dims, const PipelineParams& params = {});

}  // namespace brickvision
