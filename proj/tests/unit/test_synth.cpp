#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "brickvision/random.hpp"
#include "brickvision/synth.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace brickvision;

TEST(CameraModel, ProjectionRoundTrip) {
  const CameraModel cam;
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0, 640), v(0, 480), z(0.3, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double pu = u(rng), pv = v(rng), depth = z(rng);
    const Point3 p = cam.back_project(pu, pv, depth);
    EXPECT_NEAR(p.z(), depth, 1e-12);
    const Point2 q = cam.project(p);
    EXPECT_NEAR(q.x(), pu, 1e-9);
    EXPECT_NEAR(q.y(), pv, 1e-9);
  }
  EXPECT_NEAR((cam.project(Point3(0, 0, 1)) - Point2(319.5, 239.5)).norm(), 0.0, 1e-12);
  CameraModel bad;
  bad.fx = 0;
  EXPECT_ERROR_CODE(bad.validate(), ErrorCode::kInvalidArgument);
}

TEST(RenderScene, FrontalBrickIsPlanarAndRectangular) {
  const BrickDims dims;
  const RenderedScene scene = render_scene(frontal_brick_scene(dims), 7);
  ASSERT_FALSE(scene.cloud.empty());
  EXPECT_TRUE(scene.cloud.registered());
  for (const Point3& p : scene.cloud.points) EXPECT_NEAR(p.z(), 0.7, 1e-9);
  ASSERT_EQ(scene.boxes.size(), 1u);
  const RotatedBox& b = scene.boxes[0].box;
  EXPECT_NEAR(b.cx(), 320.0, 0.5);
  EXPECT_NEAR(b.cy(), 240.0, 0.5);
  EXPECT_NEAR(b.w(), 525.0 * dims.length() / 0.7, 2.0);
  EXPECT_NEAR(b.h(), 525.0 * dims.width() / 0.7, 2.0);
  EXPECT_EQ(scene.mask.pixel_count(1), scene.cloud.size());
}

TEST(RenderScene, PointsLieOnBrickSurfaces) {
  std::mt19937_64 rng(52);
  const BrickDims dims;
  for (int i = 0; i < 5; ++i) {
    const SceneSpec spec = random_clutter_scene(6, dims, 0.0, rng);
    const RenderedScene scene = render_scene(spec, 1);
    for (std::size_t k = 0; k < scene.cloud.size(); k += 7) {
      const PixelCoord px = scene.cloud.pixels[k];
      const std::uint16_t id = scene.mask.at(px.u, px.v);
      ASSERT_GT(id, 0);
      EXPECT_LT(oracle::distance_to_brick_surface(scene.cloud.points[k], scene.poses[id - 1], dims), 1e-9);
    }
  }
}

TEST(RenderScene, NearerBrickOccludes) {
  SceneSpec spec;
  SceneBrick far, near;
  far.pose.translation = Vector3(0, 0, 1.0);
  near.pose.translation = Vector3(0.05, 0, 0.6);
  near.cls = BrickClass::kGreen;
  spec.bricks = {far, near};
  const RenderedScene scene = render_scene(spec, 1);
  const Point2 c = spec.camera.project(near.pose.translation);
  EXPECT_EQ(scene.mask.at(static_cast<int>(c.x()), static_cast<int>(c.y())), 2);
  EXPECT_EQ(scene.mask.class_of(2), BrickClass::kGreen);
  ASSERT_EQ(scene.boxes.size(), 2u);
  EXPECT_EQ(scene.boxes[0].instance, 1);
}

TEST(RenderScene, NoiseMovesPointsAlongRays) {
  SceneSpec spec = frontal_brick_scene(BrickDims{});
  const RenderedScene clean = render_scene(spec, 3);
  spec.sigma = 0.002;
  const RenderedScene noisy = render_scene(spec, 3);
  ASSERT_EQ(clean.cloud.size(), noisy.cloud.size());
  double sq = 0;
  for (std::size_t i = 0; i < clean.cloud.size(); ++i) {
    const Point3 &a = clean.cloud.points[i], &b = noisy.cloud.points[i];
    EXPECT_NEAR(a.normalized().cross(b.normalized()).norm(), 0.0, 1e-9);
    sq += (a - b).squaredNorm();
  }
  EXPECT_NEAR(std::sqrt(sq / clean.cloud.size()), 0.002, 0.0003);
}

TEST(RenderScene, DeterministicForSeed) {
  std::mt19937_64 r1(53), r2(53);
  const SceneSpec a = random_clutter_scene(5, BrickDims{}, 0.001, r1);
  const SceneSpec b = random_clutter_scene(5, BrickDims{}, 0.001, r2);
  const RenderedScene x = render_scene(a, 9), y = render_scene(b, 9);
  EXPECT_EQ(x.cloud.points, y.cloud.points);
  EXPECT_EQ(x.mask.labels(), y.mask.labels());
}

TEST(RenderScene, RejectsBadSpecs) {
  SceneSpec spec = frontal_brick_scene(BrickDims{});
  spec.sigma = -1;
  EXPECT_ERROR_CODE(render_scene(spec, 1), ErrorCode::kInvalidArgument);
  spec.sigma = 0;
  spec.bricks[0].pose.translation.z() = -0.5;
  EXPECT_ERROR_CODE(render_scene(spec, 1), ErrorCode::kInvalidArgument);
}

TEST(RandomScenes, ClutterRespectsSpacing) {
  std::mt19937_64 rng(54);
  const BrickDims dims;
  for (int i = 0; i < 10; ++i) {
    const SceneSpec spec = random_clutter_scene(8, dims, 0.0, rng);
    ASSERT_EQ(spec.bricks.size(), 8u);
    for (std::size_t a = 0; a < spec.bricks.size(); ++a) {
      EXPECT_TRUE(spec.bricks[a].pose.valid());
      for (std::size_t b = a + 1; b < spec.bricks.size(); ++b) {
        const double d = (spec.bricks[a].pose.translation - spec.bricks[b].pose.translation).norm();
        EXPECT_GE(d, dims.length() / 2 - 1e-12);
      }
    }
  }
}

TEST(RandomScenes, SingleBrickInFront) {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 20; ++i) {
    const SceneSpec spec = random_single_brick_scene(BrickDims{}, 0.0, rng);
    ASSERT_EQ(spec.bricks.size(), 1u);
    const double z = spec.bricks[0].pose.translation.z();
    EXPECT_GE(z, 0.45);
    EXPECT_LE(z, 0.75);
  }
}

TEST(RandomRotation, IsProperRotation) {
  std::mt19937_64 rng(56);
  Matrix3 mean = Matrix3::Zero();
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const Matrix3 r = random_rotation(rng);
    EXPECT_NEAR((r.transpose() * r - Matrix3::Identity()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    mean += r / n;
  }
  // Haar-uniform rotations average to zero.
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.05);
}

TEST(CropBrickCloud, Examples) {
  const RenderedScene scene = render_scene(frontal_brick_scene(BrickDims{}), 1);
  const PointCloud all = crop_brick_cloud(scene.cloud, RotatedBox(320, 240, 640, 480, 0));
  EXPECT_EQ(all.size(), scene.cloud.size());
  const PointCloud part = crop_brick_cloud(scene.cloud, RotatedBox(320, 240, 20, 10, 0));
  EXPECT_EQ(part.size(), 200u);
  for (const PixelCoord& px : part.pixels) {
    EXPECT_GE(px.u, 310);
    EXPECT_LT(px.u, 330);
  }
  EXPECT_ERROR_CODE(crop_brick_cloud(scene.cloud, RotatedBox(20, 20, 10, 10, 0)), ErrorCode::kEmptyCrop);
  EXPECT_ERROR_CODE(crop_brick_cloud(PointCloud{}, RotatedBox(320, 240, 10, 10, 0)), ErrorCode::kInvalidArgument);
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  static_assert(splitmix64(0) == 0xe220a8397b1dcdafULL);
}
