#include "brickvision/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "brickvision/error.hpp"

namespace brickvision {

using Vec2 = Eigen::Vector2d;

void PointCloud::validate() const {
  for (const Point3& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "point cloud contains non-finite coordinates");
  }
  if (!pixels.empty() && pixels.size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pixel registration does not match the point count");
  }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(points.at(i));
  if (registered()) {
    out.pixels.reserve(indices.size());
    for (std::size_t i : indices) out.pixels.push_back(pixels.at(i));
  }
  return out;
}

void RansacParams::validate() const {
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "RANSAC needs at least one iteration");
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RANSAC threshold must be positive");
}

std::pair<Vector3, Vector3> PlaneModel::basis() const {
  Eigen::Index axis = 0;
  normal.cwiseAbs().minCoeff(&axis);
  Vector3 seed = Vector3::Zero();
  seed[axis] = 1.0;
  const Vector3 u = (seed - seed.dot(normal) * normal).normalized();
  return {u, normal.cross(u)};
}

Matrix3 SurfacePose::axes() const {
  Matrix3 m;
  m.col(0) = major;
  m.col(1) = minor;
  m.col(2) = normal;
  return m;
}

double Line3::distance(const Point3& p) const {
  const Vector3 d = p - anchor;
  return (d - d.dot(direction) * direction).norm();
}

namespace {

std::vector<Vec2> project_to_plane(const PointCloud& cloud, std::span<const std::size_t> indices,
                                   const PlaneModel& plane) {
  const auto [u, v] = plane.basis();
  std::vector<Vec2> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const Point3& p = cloud.points[i];
    out.emplace_back(p.dot(u), p.dot(v));
  }
  return out;
}

Point3 lift(const Vec2& q, const PlaneModel& plane) {
  const auto [u, v] = plane.basis();
  return -plane.offset * plane.normal + q.x() * u + q.y() * v;
}

std::vector<std::size_t> plane_inliers(const PointCloud& cloud, const Vector3& n, double d, double threshold) {
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(n.dot(cloud.points[i]) + d) <= threshold) in.push_back(i);
  }
  return in;
}

// Uniform grid over 2D points for k-nearest-neighbour queries.
class GridIndex {
 public:
  GridIndex(const std::vector<Vec2>& pts, int k) : pts_(pts) {
    lo_ = hi_ = pts.front();
    for (const Vec2& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const Vec2 extent = (hi_ - lo_).cwiseMax(1e-9);
    const double area = std::max(extent.x() * extent.y(), 1e-18);
    cell_ = std::max(std::sqrt(area * k / static_cast<double>(pts.size())), 1e-9);
    nx_ = static_cast<long>(extent.x() / cell_) + 1;
    ny_ = static_cast<long>(extent.y() / cell_) + 1;
    for (std::size_t i = 0; i < pts.size(); ++i) buckets_[key(cell_of(pts[i]))].push_back(i);
  }

  // k nearest neighbours of point `self`, excluding itself, nearest first.
  std::vector<std::size_t> knn(std::size_t self, int k) const {
    const Vec2& q = pts_[self];
    const auto [cx, cy] = cell_of(q);
    std::vector<std::pair<double, std::size_t>> found;
    const long max_ring = std::max(nx_, ny_);
    for (long r = 0; r <= max_ring; ++r) {
      for (long gx = cx - r; gx <= cx + r; ++gx) {
        for (long gy = cy - r; gy <= cy + r; ++gy) {
          if (std::max(std::abs(gx - cx), std::abs(gy - cy)) != r) continue;
          auto it = buckets_.find(key({gx, gy}));
          if (it == buckets_.end()) continue;
          for (std::size_t j : it->second) {
            if (j != self) found.emplace_back((pts_[j] - q).squaredNorm(), j);
          }
        }
      }
      if (static_cast<int>(found.size()) >= k) {
        std::nth_element(found.begin(), found.begin() + (k - 1), found.end());
        const double kth = found[static_cast<std::size_t>(k - 1)].first;
        const double covered = static_cast<double>(r) * cell_;
        if (kth <= covered * covered) break;
      }
    }
    std::sort(found.begin(), found.end());
    found.resize(std::min<std::size_t>(found.size(), static_cast<std::size_t>(k)));
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& f : found) out.push_back(f.second);
    return out;
  }

 private:
  std::pair<long, long> cell_of(const Vec2& p) const {
    return {static_cast<long>(std::floor((p.x() - lo_.x()) / cell_)),
            static_cast<long>(std::floor((p.y() - lo_.y()) / cell_))};
  }
  static long long key(std::pair<long, long> c) { return (static_cast<long long>(c.first) << 32) ^ (c.second & 0xffffffffLL); }

  const std::vector<Vec2>& pts_;
  Vec2 lo_, hi_;
  double cell_ = 1.0;
  long nx_ = 1, ny_ = 1;
  std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

// Principal direction of 2D points; returns mean and unit direction.
std::pair<Vec2, Vec2> principal_line(const std::vector<Vec2>& pts, std::span<const std::size_t> which) {
  Vec2 mean = Vec2::Zero();
  for (std::size_t i : which) mean += pts[i];
  mean /= static_cast<double>(which.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i : which) {
    const Vec2 d = pts[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  return {mean, eig.eigenvectors().col(1).normalized()};
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

PlaneModel fit_plane(const PointCloud& cloud, std::span<const std::size_t> indices) {
  if (indices.size() < 3) throw Error(ErrorCode::kDegenerateInput, "plane fit needs at least 3 points");
  Point3 mean = Point3::Zero();
  for (std::size_t i : indices) mean += cloud.points[i];
  mean /= static_cast<double>(indices.size());
  Matrix3 cov = Matrix3::Zero();
  for (std::size_t i : indices) {
    const Vector3 d = cloud.points[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  Vector3 n = eig.eigenvectors().col(0).normalized();
  if (n.dot(mean) > 0.0) n = -n;
  PlaneModel plane;
  plane.normal = n;
  plane.offset = -n.dot(mean);
  plane.inliers.assign(indices.begin(), indices.end());
  return plane;
}

PlaneModel ransac_plane(const PointCloud& cloud, const RansacParams& params) {
  params.validate();
  const std::size_t n = cloud.size();
  if (n < 3) throw Error(ErrorCode::kDegenerateInput, "plane RANSAC needs at least 3 points");

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Vector3 best_n = Vector3::UnitZ();
  double best_d = 0.0;
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const Vector3 cr = (cloud.points[j] - cloud.points[i]).cross(cloud.points[k] - cloud.points[i]);
    const double len = cr.norm();
    if (len < 1e-12) continue;
    const Vector3 nrm = cr / len;
    const double d = -nrm.dot(cloud.points[i]);
    std::size_t count = 0;
    for (const Point3& p : cloud.points) {
      if (std::abs(nrm.dot(p) + d) <= params.threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_n = nrm;
      best_d = d;
    }
  }
  if (best_count < std::max<std::size_t>(params.min_inliers, 3)) {
    throw Error(ErrorCode::kInsufficientInliers,
                "best plane has " + std::to_string(best_count) + " inliers, need " + std::to_string(params.min_inliers));
  }

  const std::vector<std::size_t> coarse = plane_inliers(cloud, best_n, best_d, params.threshold);
  PlaneModel refined = fit_plane(cloud, coarse);
  std::vector<std::size_t> fine = plane_inliers(cloud, refined.normal, refined.offset, params.threshold);
  if (fine.size() >= coarse.size()) {
    refined = fit_plane(cloud, fine);
    refined.inliers = std::move(fine);
  }
  if (refined.inliers.size() < params.min_inliers) {
    throw Error(ErrorCode::kInsufficientInliers, "refit plane lost its support");
  }
  return refined;
}

SurfacePose surface_pose(const PointCloud& cloud, const PlaneModel& plane) {
  if (plane.inliers.size() < 3) throw Error(ErrorCode::kDegenerateInput, "surface pose needs at least 3 inliers");
  Point3 mean = Point3::Zero();
  for (std::size_t i : plane.inliers) mean += cloud.points[i];
  mean /= static_cast<double>(plane.inliers.size());

  const std::vector<Vec2> flat = project_to_plane(cloud, plane.inliers, plane);
  Vec2 mean2 = Vec2::Zero();
  for (const Vec2& q : flat) mean2 += q;
  mean2 /= static_cast<double>(flat.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& q : flat) cov += (q - mean2) * (q - mean2).transpose();
  cov /= static_cast<double>(flat.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double big = eig.eigenvalues()(1);
  const double small = eig.eigenvalues()(0);
  if (!(big > 0.0)) throw Error(ErrorCode::kDegenerateInput, "inliers have no in-plane extent");
  if (small >= 0.99 * big) {
    throw Error(ErrorCode::kDegenerateScatter, "in-plane principal variances are within 1%");
  }

  const auto [u, v] = plane.basis();
  const Vec2 dir = eig.eigenvectors().col(1);
  Vector3 e1 = (dir.x() * u + dir.y() * v).normalized();
  if (e1.x() < 0.0 || (std::abs(e1.x()) < 1e-12 && e1.y() < 0.0)) e1 = -e1;

  SurfacePose sp;
  sp.centroid = mean;
  sp.normal = plane.normal;
  sp.major = e1;
  sp.minor = plane.normal.cross(e1);
  sp.major_variance = big;
  sp.minor_variance = small;
  return sp;
}

std::vector<std::size_t> boundary_points(const PointCloud& cloud, const PlaneModel& plane, int k, double gap) {
  if (k < 4) throw Error(ErrorCode::kInvalidArgument, "boundary test needs k >= 4");
  if (plane.inliers.size() <= static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooSparse, "fewer than k neighbours available for the boundary test");
  }
  const std::vector<Vec2> flat = project_to_plane(cloud, plane.inliers, plane);
  const GridIndex index(flat, k);

  std::vector<std::size_t> boundary;
  std::vector<double> angles;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    angles.clear();
    for (std::size_t j : index.knn(i, k)) {
      const Vec2 d = flat[j] - flat[i];
      if (d.squaredNorm() > 0.0) angles.push_back(std::atan2(d.y(), d.x()));
    }
    bool is_boundary = angles.empty();
    if (!is_boundary) {
      std::sort(angles.begin(), angles.end());
      double widest = angles.front() + 2.0 * std::numbers::pi - angles.back();
      for (std::size_t a = 1; a < angles.size(); ++a) widest = std::max(widest, angles[a] - angles[a - 1]);
      is_boundary = widest > gap;
    }
    if (is_boundary) boundary.push_back(plane.inliers[i]);
  }
  return boundary;
}

constexpr double kLineClearBand = 3.0;
constexpr int kLineRefitRounds = 10;

std::vector<Line3> ransac_lines(const PointCloud& cloud, std::span<const std::size_t> indices,
                                const PlaneModel& plane, const RansacParams& params, std::size_t max_lines) {
  params.validate();
  std::vector<Line3> lines;
  if (indices.size() < 2) return lines;

  const std::vector<Vec2> flat = project_to_plane(cloud, indices, plane);
  std::vector<std::size_t> remaining(flat.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  const std::size_t min_support = std::max<std::size_t>(params.min_inliers, 2);
  std::mt19937_64 rng(params.seed);

  auto support = [&](const Vec2& anchor, const Vec2& dir) {
    std::vector<std::size_t> in;
    for (std::size_t r : remaining) {
      if (std::abs(cross2(dir, flat[r] - anchor)) <= params.threshold) in.push_back(r);
    }
    return in;
  };

  while (lines.size() < max_lines && remaining.size() >= min_support) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    std::size_t best_count = 0;
    Vec2 best_anchor = Vec2::Zero(), best_dir = Vec2::UnitX();
    for (int it = 0; it < params.iterations; ++it) {
      const std::size_t a = remaining[pick(rng)], b = remaining[pick(rng)];
      const Vec2 d = flat[b] - flat[a];
      if (a == b || d.norm() < 1e-12) continue;
      const Vec2 dir = d.normalized();
      std::size_t count = 0;
      for (std::size_t r : remaining) {
        if (std::abs(cross2(dir, flat[r] - flat[a])) <= params.threshold) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_anchor = flat[a];
        best_dir = dir;
      }
    }
    if (best_count < min_support) break;

    // Least-squares refit until the inlier set settles. The refit may lose a
    // few count-inliers that only a slightly tilted hypothesis could reach.
    std::vector<std::size_t> in = support(best_anchor, best_dir);
    Vec2 anchor = best_anchor, direction = best_dir;
    for (int round = 0; round < kLineRefitRounds; ++round) {
      const auto [mean, dir] = principal_line(flat, in);
      std::vector<std::size_t> refit = support(mean, dir);
      if (refit.size() < min_support) break;
      anchor = mean;
      direction = dir;
      if (refit == in) break;
      in = std::move(refit);
    }

    Line3 line;
    line.anchor = lift(anchor, plane);
    const auto [u, v] = plane.basis();
    line.direction = (direction.x() * u + direction.y() * v).normalized();
    for (std::size_t r : in) line.inliers.push_back(indices[r]);
    lines.push_back(std::move(line));

    // Clear a wider band than the inlier band so that ragged edges do not come
    // back as weaker parallel copies of the same line.
    std::erase_if(remaining, [&](std::size_t r) {
      return std::abs(cross2(direction, flat[r] - anchor)) <= kLineClearBand * params.threshold;
    });
  }
  return lines;
}

std::vector<Corner> corner_points(const PointCloud& cloud, std::span<const Line3> lines, const PlaneModel& plane,
                                  double max_gap, double min_sine) {
  const auto [u, v] = plane.basis();
  auto to2 = [&](const Point3& p) { return Vec2(p.dot(u), p.dot(v)); };
  auto dir2 = [&](const Vector3& d) { return Vec2(d.dot(u), d.dot(v)).normalized(); };
  auto near_inliers = [&](const Line3& line, const Vec2& x) {
    for (std::size_t i : line.inliers) {
      if ((to2(cloud.points[i]) - x).norm() <= max_gap) return true;
    }
    return false;
  };

  std::vector<Corner> corners;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const Vec2 ai = to2(lines[i].anchor), aj = to2(lines[j].anchor);
      const Vec2 di = dir2(lines[i].direction), dj = dir2(lines[j].direction);
      const double sine = cross2(di, dj);
      if (std::abs(sine) < min_sine) continue;
      const double s = cross2(aj - ai, dj) / sine;
      const Vec2 x = ai + s * di;
      if (!near_inliers(lines[i], x) || !near_inliers(lines[j], x)) continue;
      corners.push_back({lift(x, plane), i, j});
    }
  }
  return corners;
}

std::vector<Edge> pair_corners_to_edges(std::span<const Corner> corners, std::span<const Line3> lines) {
  std::vector<Edge> edges;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    std::vector<std::size_t> on_line;
    for (std::size_t c = 0; c < corners.size(); ++c) {
      if (corners[c].line_a == l || corners[c].line_b == l) on_line.push_back(c);
    }
    std::optional<Edge> best;
    for (std::size_t a = 0; a < on_line.size(); ++a) {
      for (std::size_t b = a + 1; b < on_line.size(); ++b) {
        const double len = (corners[on_line[a]].point - corners[on_line[b]].point).norm();
        if (!best || len < best->length) best = Edge{on_line[a], on_line[b], l, len};
      }
    }
    if (best) edges.push_back(*best);
  }
  return edges;
}

}  // namespace brickvision
