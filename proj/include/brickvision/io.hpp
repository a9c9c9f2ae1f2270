#pragma once

// File formats: JSON records, ASCII PLY clouds, 16-bit PGM instance masks and
// scene bundle directories.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "brickvision/cloud.hpp"
#include "brickvision/geom.hpp"
#include "brickvision/metrics.hpp"
#include "brickvision/pose.hpp"
#include "brickvision/synth.hpp"

namespace brickvision {

using Json = nlohmann::json;

/// Rounds to 9 significant digits so that emitted JSON is stable and short.
double json_number(double v);
/// Pretty-printed with a trailing newline.
std::string dump_json(const Json& j);

std::string to_string(BrickClass cls);
BrickClass class_from_string(const std::string& name);

Json to_json(const RotatedBox& box);
RotatedBox box_from_json(const Json& j);
/// Accepts a single box object, an array of boxes or {"boxes": [...]}.
std::vector<RotatedBox> boxes_from_json(const Json& j);

Json to_json(const BrickPose& pose, std::optional<FaceType> face = std::nullopt);
BrickPose pose_from_json(const Json& j);

Json to_json(const EvalReport& report);
Json to_json(const PlacementReport& report);
Json to_json(const CameraModel& camera);
CameraModel camera_from_json(const Json& j);
Json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const Json& j);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Throws FormatError on malformed JSON.
Json read_json(const std::filesystem::path& path);

/// ASCII PLY with float x y z and, for registered clouds, ushort u v.
std::string ply_string(const PointCloud& cloud);
PointCloud parse_ply(const std::string& text);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

/// Binary 16-bit PGM (big-endian samples) of instance ids.
std::string pgm_string(const InstanceMask& mask);
/// Labels only; classes are attached separately.
InstanceMask parse_pgm(const std::string& bytes);
void write_pgm(const std::filesystem::path& path, const InstanceMask& mask);
InstanceMask read_pgm(const std::filesystem::path& path);

/// File names inside a scene bundle directory.
struct SceneBundle {
  static constexpr const char* kCloud = "cloud.ply";
  static constexpr const char* kMask = "mask.pgm";
  static constexpr const char* kBoxes = "boxes.json";
  static constexpr const char* kPoses = "poses.json";
  static constexpr const char* kSpec = "spec.json";
};

/// Writes the five bundle files and returns their names in a fixed order.
std::vector<std::string> write_scene_bundle(const std::filesystem::path& dir, const SceneSpec& spec,
                                            const RenderedScene& scene);
/// Mask with the class map taken from spec.json.
InstanceMask read_bundle_mask(const std::filesystem::path& dir);

}  // namespace brickvision
