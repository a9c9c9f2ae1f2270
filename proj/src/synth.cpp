#include "brickvision/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "brickvision/error.hpp"

namespace brickvision {

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  if (cx < 0.0 || cy < 0.0 || cx >= width || cy >= height) {
    throw Error(ErrorCode::kInvalidArgument, "principal point must lie inside the image");
  }
}

Point2 CameraModel::project(const Point3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }

Vector3 CameraModel::ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

Point3 CameraModel::back_project(double u, double v, double depth) const { return depth * ray(u, v); }

namespace {

struct BrickFrame {
  Matrix3 rt;           // brick <- camera rotation
  Vector3 origin;       // camera origin in the brick frame
  Vector3 half;         // half extents
};

// Entry depth of the ray (scaled to unit z) into the box, or +inf.
double ray_entry(const BrickFrame& b, const Vector3& ray) {
  const Vector3 d = b.rt * ray;
  double near = -std::numeric_limits<double>::infinity();
  double far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (std::abs(b.origin[i]) > b.half[i]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t1 = (-b.half[i] - b.origin[i]) / d[i];
    double t2 = (b.half[i] - b.origin[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    near = std::max(near, t1);
    far = std::min(far, t2);
  }
  if (near > far || near <= 0.0) return std::numeric_limits<double>::infinity();
  return near;
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, std::uint64_t seed) {
  const CameraModel& cam = spec.camera;
  cam.validate();
  if (spec.sigma < 0.0) throw Error(ErrorCode::kInvalidArgument, "noise sigma must be non-negative");
  if (spec.bricks.size() >= 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "too many bricks");

  std::vector<BrickFrame> frames;
  std::vector<std::array<int, 4>> extents;  // u0, v0, u1, v1 (inclusive)
  for (const SceneBrick& b : spec.bricks) {
    if (!(b.pose.translation.z() > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "brick center must be in front of the camera");
    }
    const Vector3 half(0.5 * b.dims.length(), 0.5 * b.dims.width(), 0.5 * b.dims.height());
    frames.push_back({b.pose.rotation.transpose(), -b.pose.rotation.transpose() * b.pose.translation, half});

    std::array<int, 4> box{0, 0, cam.width - 1, cam.height - 1};
    bool all_in_front = true;
    double u0 = std::numeric_limits<double>::infinity(), v0 = u0, u1 = -u0, v1 = -u0;
    for (int corner = 0; corner < 8; ++corner) {
      const Vector3 local((corner & 1 ? 1 : -1) * half.x(), (corner & 2 ? 1 : -1) * half.y(),
                          (corner & 4 ? 1 : -1) * half.z());
      const Point3 p = b.pose.apply(local);
      if (p.z() <= 1e-6) {
        all_in_front = false;
        break;
      }
      const Point2 q = cam.project(p);
      u0 = std::min(u0, q.x());
      v0 = std::min(v0, q.y());
      u1 = std::max(u1, q.x());
      v1 = std::max(v1, q.y());
    }
    if (all_in_front) {
      box = {std::max(0, static_cast<int>(std::floor(u0)) - 1), std::max(0, static_cast<int>(std::floor(v0)) - 1),
             std::min(cam.width - 1, static_cast<int>(std::ceil(u1)) + 1),
             std::min(cam.height - 1, static_cast<int>(std::ceil(v1)) + 1)};
    }
    extents.push_back(box);
  }

  const std::size_t npx = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<double> depth(npx, std::numeric_limits<double>::infinity());
  std::vector<std::uint16_t> label(npx, 0);
  for (std::size_t bi = 0; bi < frames.size(); ++bi) {
    const auto& [u0, v0, u1, v1] = extents[bi];
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const double t = ray_entry(frames[bi], cam.ray(u, v));
        const std::size_t idx = static_cast<std::size_t>(v) * cam.width + u;
        if (t < depth[idx]) {
          depth[idx] = t;
          label[idx] = static_cast<std::uint16_t>(bi + 1);
        }
      }
    }
  }

  RenderedScene out{{}, InstanceMask(cam.width, cam.height), {}, {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * cam.width + u;
      if (label[idx] == 0) continue;
      const Vector3 r = cam.ray(u, v);
      Point3 p = depth[idx] * r;
      if (spec.sigma > 0.0) p += spec.sigma * noise(rng) * r.normalized();
      out.cloud.points.push_back(p);
      out.cloud.pixels.push_back({static_cast<std::uint16_t>(u), static_cast<std::uint16_t>(v)});
      out.mask.set(u, v, label[idx]);
    }
  }
  for (std::size_t bi = 0; bi < spec.bricks.size(); ++bi) {
    out.mask.set_class(static_cast<std::uint16_t>(bi + 1), spec.bricks[bi].cls);
    out.poses.push_back(spec.bricks[bi].pose);
  }
  for (std::uint16_t id : out.mask.instance_ids()) out.boxes.push_back({id, mask_box(out.mask, id)});
  return out;
}

PointCloud crop_brick_cloud(const PointCloud& cloud, const RotatedBox& box) {
  if (!cloud.registered()) throw Error(ErrorCode::kInvalidArgument, "cropping needs a pixel-registered cloud");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (box.contains({cloud.pixels[i].u + 0.5, cloud.pixels[i].v + 0.5})) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorCode::kEmptyCrop, "no points fall inside the box");
  return cloud.subset(keep);
}

Matrix3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng));
  } while (q.norm() < 1e-6);
  return q.normalized().toRotationMatrix();
}

SceneSpec random_single_brick_scene(const BrickDims& dims, double sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lateral(-0.05, 0.05);
  std::uniform_real_distribution<double> range(0.5, 0.7);
  std::bernoulli_distribution green(0.5);
  SceneSpec spec;
  spec.sigma = sigma;
  SceneBrick brick{{}, dims, BrickClass::kBlue};
  brick.pose.rotation = random_rotation(rng);
  brick.pose.translation = Vector3(lateral(rng), lateral(rng), range(rng));
  brick.cls = green(rng) ? BrickClass::kGreen : BrickClass::kBlue;
  spec.bricks.push_back(brick);
  return spec;
}

SceneSpec random_clutter_scene(int num_bricks, const BrickDims& dims, double sigma, std::mt19937_64& rng) {
  constexpr double kGround = 0.9;
  constexpr double kMaxTilt = 35.0 * std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> ux(-0.28, 0.28);
  std::uniform_real_distribution<double> uy(-0.2, 0.2);
  std::uniform_real_distribution<double> yaw(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> tilt(-kMaxTilt, kMaxTilt);
  std::uniform_real_distribution<double> lift(0.0, 0.08);
  std::uniform_int_distribution<int> resting_face(0, 2);
  std::bernoulli_distribution green(0.5);

  SceneSpec spec;
  spec.sigma = sigma;
  const double min_sep = 0.5 * dims.length();
  for (int i = 0, attempts = 0; i < num_bricks && attempts < 10000; ++attempts) {
    // Camera looks down (+z toward the ground); brick "up" is camera -z.
    Matrix3 rest;
    switch (resting_face(rng)) {
      case 0: rest = Eigen::AngleAxisd(std::numbers::pi, Vector3::UnitX()).toRotationMatrix(); break;  // LW up
      case 1: rest = Eigen::AngleAxisd(std::numbers::pi / 2, Vector3::UnitX()).toRotationMatrix(); break;  // LH up
      default: rest = Eigen::AngleAxisd(-std::numbers::pi / 2, Vector3::UnitY()).toRotationMatrix(); break;  // WH up
    }
    const Matrix3 r = Eigen::AngleAxisd(yaw(rng), Vector3::UnitZ()).toRotationMatrix() *
                      Eigen::AngleAxisd(tilt(rng), Vector3::UnitX()).toRotationMatrix() *
                      Eigen::AngleAxisd(tilt(rng), Vector3::UnitY()).toRotationMatrix() * rest;
    // Lowest point of the brick along the camera z axis sits on or above the ground.
    const Vector3 half(0.5 * dims.length(), 0.5 * dims.width(), 0.5 * dims.height());
    const double reach = (r.cwiseAbs() * half).z();
    const Vector3 t(ux(rng), uy(rng), kGround - reach - lift(rng));
    const bool crowded = std::any_of(spec.bricks.begin(), spec.bricks.end(), [&](const SceneBrick& b) {
      return (b.pose.translation - t).norm() < min_sep;
    });
    if (crowded) continue;
    SceneBrick brick{{r, t}, dims, green(rng) ? BrickClass::kGreen : BrickClass::kBlue};
    spec.bricks.push_back(brick);
    ++i;
  }
  return spec;
}

SceneSpec frontal_brick_scene(const BrickDims& dims, double depth, BrickClass cls) {
  SceneSpec spec;
  SceneBrick brick{{}, dims, cls};
  // Brick +z (the LW face normal) points back at the camera.
  brick.pose.rotation = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  brick.pose.translation = Vector3(0.0, 0.0, depth + 0.5 * dims.height());
  spec.bricks.push_back(brick);
  return spec;
}

}  // namespace brickvision
