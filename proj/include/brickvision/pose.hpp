#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "brickvision/cloud.hpp"

namespace brickvision {

/// Brick extents with L >= W >= H > 0 (meters). Brick frame: x along L,
/// y along W, z along H, origin at the centroid.
class BrickDims {
 public:
  BrickDims(double length = 0.20, double width = 0.09, double height = 0.06);

  double length() const { return length_; }
  double width() const { return width_; }
  double height() const { return height_; }
  /// Consecutive dims differ by less than 5%, so faces may be confused.
  bool ambiguous() const;

 private:
  double length_, width_, height_;
};

enum class FaceType : std::uint8_t { kLW, kLH, kWH };

std::string_view to_string(FaceType face);
FaceType face_from_string(std::string_view name);

/// Edge lengths (long, short) of a face type.
std::pair<double, double> face_edges(FaceType face, const BrickDims& dims);
/// Extent of the brick along the face normal.
double face_thickness(FaceType face, const BrickDims& dims);

/// Rigid transform camera <- brick.
struct BrickPose {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  bool valid(double tol = 1e-9) const;
};

/// Groups lengths into at most two clusters and matches the cluster medians
/// against the three face types. Throws NoMatch or Ambiguous.
FaceType identify_surface(std::span<const double> edge_lengths, const BrickDims& dims, double tol = 0.012);

/// Places the brick behind the observed face: the face's outward normal
/// follows sp.normal and its long edge follows sp.major.
/// Throws InvalidFrame when the surface axes are not a right-handed frame.
BrickPose brick_pose_from_surface(const SurfacePose& sp, FaceType face, const BrickDims& dims);

/// Index of the pose with the largest height along `up`; lowest index on ties.
std::size_t select_topmost(std::span<const BrickPose> poses, const Vector3& up);

/// Intrinsic X-Y-Z Euler angles (radians) of R = Rx(a) Ry(b) Rz(c).
Vector3 euler_xyz(const Matrix3& rotation);

struct PlacementCriteria {
  double max_centroid_dist = 0.1;  // meters, in the ground plane
  double max_euler_deg = 15.0;     // per axis
};

struct PlacementReport {
  bool success = false;
  double centroid_err = 0.0;                // meters
  Vector3 euler_err_deg = Vector3::Zero();  // absolute, per axis
};

PlacementReport placement_check(const BrickPose& pose, const BrickPose& reference,
                                const PlacementCriteria& criteria = {},
                                const Vector3& ground_normal = Vector3::UnitZ());

/// Rotations that map a cuboid onto itself: identity and half turns about
/// each brick axis.
std::array<Matrix3, 4> cuboid_symmetries();

struct PoseError {
  double translation = 0.0;                 // meters
  Vector3 euler_deg = Vector3::Zero();      // absolute, per axis
  double max_euler_deg() const { return euler_deg.maxCoeff(); }
};

/// Error of `estimate` against `truth` minimized over the cuboid symmetries.
PoseError pose_error(const BrickPose& estimate, const BrickPose& truth);

struct NoiseModel {
  double sigma_t = 0.0;  // meters per axis and placement
  double sigma_r = 0.0;  // radians per axis and placement
};

struct WallConfig {
  int rounds = 25;
  int layers = 6;
  NoiseModel noise;
  std::uint64_t seed = 0x5eedu;
  PlacementCriteria criteria;
  BrickDims dims;
};

struct WallResult {
  /// successes[i] counts rounds whose placements held through layer i + 2
  /// (layer 1 is placed by hand).
  std::vector<int> successes;
};

/// Error-chaining simulation: each layer is placed relative to the realized
/// pose of the layer below, perturbed by the noise model, and judged against
/// the hand-placed first brick. A failed layer ends the round.
WallResult simulate_wall(const WallConfig& config);

}  // namespace brickvision
