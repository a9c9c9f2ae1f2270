#include "brickvision/pose.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "brickvision/error.hpp"
#include "brickvision/random.hpp"

namespace brickvision {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Vector3 abs_euler_deg(const Matrix3& r) { return euler_xyz(r).cwiseAbs() * kRadToDeg; }

}  // namespace

BrickDims::BrickDims(double length, double width, double height) : length_(length), width_(width), height_(height) {
  if (!(height > 0.0) || !(width >= height) || !(length >= width) || !std::isfinite(length)) {
    throw Error(ErrorCode::kInvalidArgument, "brick dims need L >= W >= H > 0");
  }
}

bool BrickDims::ambiguous() const { return length_ / width_ <= 1.05 || width_ / height_ <= 1.05; }

std::string_view to_string(FaceType face) {
  switch (face) {
    case FaceType::kLW: return "LW";
    case FaceType::kLH: return "LH";
    case FaceType::kWH: return "WH";
  }
  return "?";
}

FaceType face_from_string(std::string_view name) {
  if (name == "LW") return FaceType::kLW;
  if (name == "LH") return FaceType::kLH;
  if (name == "WH") return FaceType::kWH;
  throw Error(ErrorCode::kFormatError, "unknown face type '" + std::string(name) + "'");
}

std::pair<double, double> face_edges(FaceType face, const BrickDims& dims) {
  switch (face) {
    case FaceType::kLW: return {dims.length(), dims.width()};
    case FaceType::kLH: return {dims.length(), dims.height()};
    case FaceType::kWH: return {dims.width(), dims.height()};
  }
  return {0.0, 0.0};
}

double face_thickness(FaceType face, const BrickDims& dims) {
  switch (face) {
    case FaceType::kLW: return dims.height();
    case FaceType::kLH: return dims.width();
    case FaceType::kWH: return dims.length();
  }
  return 0.0;
}

bool BrickPose::valid(double tol) const {
  return (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
}

FaceType identify_surface(std::span<const double> edge_lengths, const BrickDims& dims, double tol) {
  if (edge_lengths.empty()) throw Error(ErrorCode::kNoMatch, "no edges to identify the surface from");
  std::vector<double> sorted(edge_lengths.begin(), edge_lengths.end());
  std::sort(sorted.begin(), sorted.end());

  std::size_t split = 0;  // first index of the upper group, 0 for a single group
  double widest = tol;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] > widest) {
      widest = sorted[i] - sorted[i - 1];
      split = i;
    }
  }

  constexpr std::array<FaceType, 3> kFaces{FaceType::kLW, FaceType::kLH, FaceType::kWH};
  std::vector<std::pair<double, FaceType>> matches;
  if (split == 0) {
    const double m = median(sorted);
    for (FaceType f : kFaces) {
      const auto [a, b] = face_edges(f, dims);
      const double dev = std::min(std::abs(m - a), std::abs(m - b));
      if (dev <= tol) matches.emplace_back(dev, f);
    }
  } else {
    const double small = median({sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(split)});
    const double big = median({sorted.begin() + static_cast<std::ptrdiff_t>(split), sorted.end()});
    for (FaceType f : kFaces) {
      const auto [a, b] = face_edges(f, dims);
      const double dev = std::max(std::abs(big - a), std::abs(small - b));
      if (dev <= tol) matches.emplace_back(dev, f);
    }
  }
  std::string listed;
  for (double l : sorted) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%.4f", listed.empty() ? "" : " ", l);
    listed += buf;
  }
  if (matches.empty()) throw Error(ErrorCode::kNoMatch, "edge lengths [" + listed + "] match no face of the brick");
  if (matches.size() > 1) {
    std::string names;
    for (const auto& m : matches) names += std::string(names.empty() ? "" : ", ") + std::string(to_string(m.second));
    throw Error(ErrorCode::kAmbiguous, "edge lengths [" + listed + "] match several faces (" + names + ")");
  }
  return matches.front().second;
}

BrickPose brick_pose_from_surface(const SurfacePose& sp, FaceType face, const BrickDims& dims) {
  const Matrix3 axes = sp.axes();
  if ((axes.transpose() * axes - Matrix3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      axes.determinant() < 1.0 - 1e-6) {
    throw Error(ErrorCode::kInvalidFrame, "surface axes are not a right-handed orthonormal frame");
  }
  BrickPose pose;
  switch (face) {
    case FaceType::kLW:  // x <- major, y <- minor, z <- normal
      pose.rotation << sp.major, sp.minor, sp.normal;
      break;
    case FaceType::kLH:  // x <- major, y <- normal, z <- -minor
      pose.rotation << sp.major, sp.normal, -sp.minor;
      break;
    case FaceType::kWH:  // x <- normal, y <- major, z <- minor
      pose.rotation << sp.normal, sp.major, sp.minor;
      break;
  }
  pose.translation = sp.centroid - 0.5 * face_thickness(face, dims) * sp.normal;
  return pose;
}

std::size_t select_topmost(std::span<const BrickPose> poses, const Vector3& up) {
  if (poses.empty()) throw Error(ErrorCode::kEmptyInput, "no poses to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].translation.dot(up) > poses[best].translation.dot(up)) best = i;
  }
  return best;
}

Vector3 euler_xyz(const Matrix3& r) {
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  if (std::abs(sb) > 1.0 - 1e-12) {
    // Gimbal lock: only a + c (or a - c) is observable; put it all in a.
    return {std::atan2(r(1, 0), r(1, 1)), b, 0.0};
  }
  return {std::atan2(-r(1, 2), r(2, 2)), b, std::atan2(-r(0, 1), r(0, 0))};
}

PlacementReport placement_check(const BrickPose& pose, const BrickPose& reference, const PlacementCriteria& criteria,
                                const Vector3& ground_normal) {
  const Vector3 n = ground_normal.normalized();
  const Vector3 d = pose.translation - reference.translation;
  PlacementReport report;
  report.centroid_err = (d - d.dot(n) * n).norm();
  report.euler_err_deg = abs_euler_deg(reference.rotation.transpose() * pose.rotation);
  report.success = report.centroid_err < criteria.max_centroid_dist &&
                   (report.euler_err_deg.array() < criteria.max_euler_deg).all();
  return report;
}

std::array<Matrix3, 4> cuboid_symmetries() {
  return {Matrix3::Identity(), Matrix3(Eigen::Vector3d(1, -1, -1).asDiagonal()),
          Matrix3(Eigen::Vector3d(-1, 1, -1).asDiagonal()), Matrix3(Eigen::Vector3d(-1, -1, 1).asDiagonal())};
}

PoseError pose_error(const BrickPose& estimate, const BrickPose& truth) {
  PoseError best;
  best.translation = (estimate.translation - truth.translation).norm();
  bool first = true;
  for (const Matrix3& s : cuboid_symmetries()) {
    const Vector3 e = abs_euler_deg((truth.rotation * s).transpose() * estimate.rotation);
    if (first || e.maxCoeff() < best.euler_deg.maxCoeff()) {
      best.euler_deg = e;
      first = false;
    }
  }
  return best;
}

WallResult simulate_wall(const WallConfig& config) {
  if (config.rounds < 0 || config.layers < 1) throw Error(ErrorCode::kInvalidArgument, "bad wall configuration");
  if (config.noise.sigma_t < 0.0 || config.noise.sigma_r < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "noise deviations must be non-negative");
  }
  WallResult result;
  result.successes.assign(static_cast<std::size_t>(std::max(config.layers - 1, 0)), 0);
  const Vector3 up = Vector3::UnitZ();
  const double h = config.dims.height();

  BrickPose manual;
  manual.translation = 0.5 * h * up;

  for (int round = 0; round < config.rounds; ++round) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(round)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    BrickPose previous = manual;
    for (int layer = 2; layer <= config.layers; ++layer) {
      // Target: one brick height above the realized pose of the layer below.
      BrickPose placed;
      placed.translation = previous.translation + previous.rotation * (h * up);
      placed.rotation = previous.rotation;

      const Vector3 dt(config.noise.sigma_t * gauss(rng), config.noise.sigma_t * gauss(rng),
                       config.noise.sigma_t * gauss(rng));
      const Vector3 dr(config.noise.sigma_r * gauss(rng), config.noise.sigma_r * gauss(rng),
                       config.noise.sigma_r * gauss(rng));
      placed.translation += dt;
      if (dr.norm() > 0.0) placed.rotation = placed.rotation * Eigen::AngleAxisd(dr.norm(), dr.normalized()).toRotationMatrix();

      if (!placement_check(placed, manual, config.criteria, up).success) break;
      ++result.successes[static_cast<std::size_t>(layer - 2)];
      previous = placed;
    }
  }
  return result;
}

}  // namespace brickvision
