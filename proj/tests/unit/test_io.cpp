#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "brickvision/io.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace brickvision;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("brickvision_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path dir;
};

}  // namespace

TEST(JsonNumber, NineSignificantDigits) {
  EXPECT_EQ(json_number(0.123456789123), 0.123456789);
  EXPECT_EQ(json_number(123456.789123), 123456.789);
  EXPECT_EQ(json_number(0.0), 0.0);
  EXPECT_EQ(json_number(-2.5), -2.5);
}

TEST(BoxJson, RoundTrip) {
  const RotatedBox b(12.5, 40.25, 30, 10, 0.75, BrickClass::kGreen, 0.5);
  const RotatedBox back = box_from_json(to_json(b));
  EXPECT_EQ(back.cx(), 12.5);
  EXPECT_EQ(back.theta(), 0.75);
  EXPECT_EQ(back.cls(), BrickClass::kGreen);
  EXPECT_EQ(back.score(), 0.5);
}

TEST(BoxJson, AcceptsListShapes) {
  const Json one = to_json(RotatedBox(1, 2, 3, 2, 0));
  EXPECT_EQ(boxes_from_json(one).size(), 1u);
  EXPECT_EQ(boxes_from_json(Json::array({one, one})).size(), 2u);
  EXPECT_EQ(boxes_from_json(Json{{"boxes", Json::array({one})}}).size(), 1u);
}

TEST(BoxJson, MalformedInput) {
  EXPECT_ERROR_CODE(box_from_json(Json(3)), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(box_from_json(Json{{"cx", 1}}), ErrorCode::kFormatError);
  Json bad = to_json(RotatedBox(1, 2, 3, 2, 0));
  bad["class"] = "red";
  EXPECT_ERROR_CODE(box_from_json(bad), ErrorCode::kFormatError);
  bad["class"] = "blue";
  bad["w"] = "wide";
  EXPECT_ERROR_CODE(box_from_json(bad), ErrorCode::kFormatError);
}

TEST(PoseJson, RoundTrip) {
  BrickPose p;
  p.rotation = Eigen::AngleAxisd(0.5, Vector3(1, 1, 0).normalized()).toRotationMatrix();
  p.translation = Vector3(0.1, -0.2, 0.7);
  const Json j = to_json(p, FaceType::kLH);
  EXPECT_EQ(j.at("face"), "LH");
  const BrickPose back = pose_from_json(j);
  EXPECT_NEAR((back.rotation - p.rotation).norm(), 0.0, 1e-8);
  EXPECT_NEAR((back.translation - p.translation).norm(), 0.0, 1e-9);
  EXPECT_ERROR_CODE(pose_from_json(Json{{"R", 1}}), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(pose_from_json(Json{{"R", Json::array({1, 2})}, {"t", Json::array({0, 0, 0})}}),
                    ErrorCode::kFormatError);
}

TEST(SceneSpecJson, RoundTrip) {
  std::mt19937_64 rng(61);
  const SceneSpec spec = random_clutter_scene(3, BrickDims{}, 0.001, rng);
  const SceneSpec back = scene_spec_from_json(to_json(spec));
  ASSERT_EQ(back.bricks.size(), 3u);
  EXPECT_EQ(back.sigma, 0.001);
  EXPECT_EQ(back.camera.fx, spec.camera.fx);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.bricks[i].cls, spec.bricks[i].cls);
    EXPECT_NEAR((back.bricks[i].pose.translation - spec.bricks[i].pose.translation).norm(), 0.0, 1e-8);
  }
}

TEST(Ply, RoundTrip) {
  PointCloud c;
  c.points = {Point3(0.1, 0.2, 0.3), Point3(-1, 0, 2.5)};
  c.pixels = {{10, 20}, {639, 479}};
  const PointCloud back = parse_ply(ply_string(c));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.pixels, c.pixels);
  EXPECT_NEAR((back.points[1] - c.points[1]).norm(), 0.0, 1e-6);

  PointCloud plain;
  plain.points = {Point3(1, 2, 3)};
  EXPECT_FALSE(parse_ply(ply_string(plain)).registered());
  EXPECT_TRUE(parse_ply(ply_string(PointCloud{})).empty());
}

TEST(Ply, MalformedInput) {
  EXPECT_ERROR_CODE(parse_ply(""), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(
      parse_ply("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
                "end_header\n1 2 3\n"),
      ErrorCode::kFormatError);
}

TEST(Pgm, RoundTrip) {
  std::mt19937_64 rng(62);
  const InstanceMask m = oracle::random_box_mask(rng, 5, 64, 48);
  const InstanceMask back = parse_pgm(pgm_string(m));
  EXPECT_EQ(back.width(), 64);
  EXPECT_EQ(back.height(), 48);
  EXPECT_EQ(back.labels(), m.labels());
  EXPECT_EQ(pgm_string(m).substr(0, 2), "P5");
}

TEST(Pgm, MalformedInput) {
  EXPECT_ERROR_CODE(parse_pgm("P2\n2 2\n65535\n"), ErrorCode::kFormatError);
  EXPECT_ERROR_CODE(parse_pgm("P5\n2 2\n65535\n\x01"), ErrorCode::kFormatError);
}

TEST_F(TempDir, SceneBundleRoundTrip) {
  std::mt19937_64 rng(63);
  const SceneSpec spec = random_clutter_scene(4, BrickDims{}, 0.0, rng);
  const RenderedScene scene = render_scene(spec, 5);
  const std::vector<std::string> files = write_scene_bundle(dir, spec, scene);
  ASSERT_EQ(files.size(), 5u);
  for (const std::string& f : files) EXPECT_TRUE(fs::exists(dir / f)) << f;

  const InstanceMask mask = read_bundle_mask(dir);
  EXPECT_EQ(mask.labels(), scene.mask.labels());
  EXPECT_EQ(mask.class_map(), scene.mask.class_map());
  EXPECT_EQ(read_ply(dir / SceneBundle::kCloud).size(), scene.cloud.size());
  EXPECT_EQ(boxes_from_json(read_json(dir / SceneBundle::kBoxes)).size(), scene.boxes.size());
}

TEST_F(TempDir, FileErrors) {
  EXPECT_ERROR_CODE(read_text(dir / "missing.json"), ErrorCode::kIoError);
  write_text(dir / "bad.json", "{\"cx\": ");
  EXPECT_ERROR_CODE(read_json(dir / "bad.json"), ErrorCode::kFormatError);
}
