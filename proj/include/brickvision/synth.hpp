#pragma once

// Synthetic ground truth: cuboid bricks rendered by z-buffering under a
// pinhole camera.
//
// The camera uses the usual convention that pixel (i, j) is centered on image
// coordinates (i, j). Masks and boxes use continuous coordinates where the
// same pixel covers [i, i+1) x [j, j+1), so box coordinates equal camera
// coordinates plus 0.5.

#include <cstdint>
#include <random>
#include <vector>

#include "brickvision/cloud.hpp"
#include "brickvision/geom.hpp"
#include "brickvision/pose.hpp"

namespace brickvision {

struct CameraModel {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  void validate() const;
  /// Image coordinates of a point in front of the camera.
  Point2 project(const Point3& p) const;
  /// Viewing ray through image coordinates (u, v), scaled to unit depth.
  Vector3 ray(double u, double v) const;
  Point3 back_project(double u, double v, double depth) const;
};

struct SceneBrick {
  BrickPose pose;
  BrickDims dims;
  BrickClass cls = BrickClass::kBlue;
};

struct SceneSpec {
  std::vector<SceneBrick> bricks;
  CameraModel camera;
  double sigma = 0.0;  // depth noise along the viewing ray, meters
};

struct LabeledBox {
  std::uint16_t instance;  // brick index + 1
  RotatedBox box;
};

struct RenderedScene {
  PointCloud cloud;  // registered: one point per covered pixel, row-major
  InstanceMask mask;
  std::vector<LabeledBox> boxes;  // visible instances only, ascending id
  std::vector<BrickPose> poses;   // every brick, in spec order
};

/// Z-buffered render. Throws InvalidArgument when a brick center is not in
/// front of the camera or sigma is negative.
RenderedScene render_scene(const SceneSpec& spec, std::uint64_t seed);

/// Points whose pixel center falls inside `box`. Throws EmptyCrop.
PointCloud crop_brick_cloud(const PointCloud& cloud, const RotatedBox& box);

/// Uniformly distributed rotation.
Matrix3 random_rotation(std::mt19937_64& rng);

/// One brick in free orientation roughly 0.5-0.7 m in front of the camera.
SceneSpec random_single_brick_scene(const BrickDims& dims, double sigma, std::mt19937_64& rng);

/// A pile of bricks resting near a ground plane 0.9 m below a downward-looking
/// camera, tilted up to 35 degrees, with centers at least max(dims)/2 apart.
SceneSpec random_clutter_scene(int num_bricks, const BrickDims& dims, double sigma, std::mt19937_64& rng);

/// Single brick on the optical axis showing its LW face squarely at `depth`.
SceneSpec frontal_brick_scene(const BrickDims& dims, double depth = 0.7, BrickClass cls = BrickClass::kBlue);

}  // namespace brickvision
