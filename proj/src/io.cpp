#include "brickvision/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "brickvision/error.hpp"

namespace brickvision {

namespace {

Json matrix_json(const Matrix3& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({json_number(m(r, 0)), json_number(m(r, 1)), json_number(m(r, 2))});
  return rows;
}

Json vector_json(const Vector3& v) { return {json_number(v.x()), json_number(v.y()), json_number(v.z())}; }

Json optional_json(const std::optional<double>& v) { return v ? Json(json_number(*v)) : Json(nullptr); }

double number_at(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorCode::kFormatError, std::string("expected numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

Vector3 vector_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kFormatError, "expected a 3-vector");
  Vector3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kFormatError, "expected a 3-vector of numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace

double json_number(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;  // no negative zero in output
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string to_string(BrickClass cls) { return cls == BrickClass::kGreen ? "green" : "blue"; }

BrickClass class_from_string(const std::string& name) {
  if (name == "blue") return BrickClass::kBlue;
  if (name == "green") return BrickClass::kGreen;
  throw Error(ErrorCode::kFormatError, "unknown class '" + name + "'");
}

Json to_json(const RotatedBox& box) {
  return Json{{"cx", json_number(box.cx())},     {"cy", json_number(box.cy())},
              {"w", json_number(box.w())},       {"h", json_number(box.h())},
              {"theta", json_number(box.theta())}, {"class", to_string(box.cls())},
              {"score", json_number(box.score())}};
}

RotatedBox box_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kFormatError, "box must be a JSON object");
  BrickClass cls = BrickClass::kBlue;
  if (j.contains("class")) {
    if (!j.at("class").is_string()) throw Error(ErrorCode::kFormatError, "box class must be a string");
    cls = class_from_string(j.at("class").get<std::string>());
  }
  const double score = j.contains("score") ? number_at(j, "score") : 1.0;
  try {
    return RotatedBox(number_at(j, "cx"), number_at(j, "cy"), number_at(j, "w"), number_at(j, "h"),
                      number_at(j, "theta"), cls, score);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kFormatError) throw;
    throw Error(ErrorCode::kFormatError, e.message());
  }
}

std::vector<RotatedBox> boxes_from_json(const Json& j) {
  const Json* list = &j;
  if (j.is_object() && j.contains("boxes")) list = &j.at("boxes");
  std::vector<RotatedBox> out;
  if (list->is_object()) {
    out.push_back(box_from_json(*list));
  } else if (list->is_array()) {
    for (const Json& b : *list) out.push_back(box_from_json(b));
  } else {
    throw Error(ErrorCode::kFormatError, "expected a box or a list of boxes");
  }
  return out;
}

Json to_json(const BrickPose& pose, std::optional<FaceType> face) {
  Json j{{"R", matrix_json(pose.rotation)}, {"t", vector_json(pose.translation)}};
  if (face) j["face"] = std::string(to_string(*face));
  return j;
}

BrickPose pose_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("R") || !j.contains("t")) {
    throw Error(ErrorCode::kFormatError, "pose needs 'R' and 't'");
  }
  const Json& r = j.at("R");
  if (!r.is_array() || r.size() != 3) throw Error(ErrorCode::kFormatError, "'R' must be 3x3");
  BrickPose pose;
  for (int row = 0; row < 3; ++row) pose.rotation.row(row) = vector_from_json(r[row]).transpose();
  pose.translation = vector_from_json(j.at("t"));
  return pose;
}

Json to_json(const EvalReport& report) {
  Json per_class = Json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassReport& pc = report.per_class[c];
    Json entry{{"precision", optional_json(pc.precision)},
               {"recall", json_number(pc.recall)},
               {"counts",
                {{"NO", pc.pixels.object}, {"TP", pc.pixels.total}, {"DB", pc.bricks.detected},
                 {"TB", pc.bricks.total}}}};
    if (report.map) entry["ap"] = optional_json(pc.average_precision);
    per_class[to_string(static_cast<BrickClass>(c))] = entry;
  }
  return Json{{"precision", optional_json(report.precision)},
              {"recall", json_number(report.recall)},
              {"map", optional_json(report.map)},
              {"counts",
               {{"NO", report.pixels.object}, {"TP", report.pixels.total}, {"DB", report.bricks.detected},
                {"TB", report.bricks.total}}},
              {"per_class", per_class}};
}

Json to_json(const PlacementReport& report) {
  return Json{{"success", report.success},
              {"centroid_err", json_number(report.centroid_err)},
              {"euler_err_deg", vector_json(report.euler_err_deg)}};
}

Json to_json(const CameraModel& c) {
  return Json{{"fx", json_number(c.fx)}, {"fy", json_number(c.fy)},   {"cx", json_number(c.cx)},
              {"cy", json_number(c.cy)}, {"width", c.width}, {"height", c.height}};
}

CameraModel camera_from_json(const Json& j) {
  CameraModel c;
  c.fx = number_at(j, "fx");
  c.fy = number_at(j, "fy");
  c.cx = number_at(j, "cx");
  c.cy = number_at(j, "cy");
  c.width = static_cast<int>(number_at(j, "width"));
  c.height = static_cast<int>(number_at(j, "height"));
  return c;
}

Json to_json(const SceneSpec& spec) {
  Json bricks = Json::array();
  for (std::size_t i = 0; i < spec.bricks.size(); ++i) {
    const SceneBrick& b = spec.bricks[i];
    Json entry = to_json(b.pose);
    entry["instance"] = i + 1;
    entry["class"] = to_string(b.cls);
    entry["dims"] = {json_number(b.dims.length()), json_number(b.dims.width()), json_number(b.dims.height())};
    bricks.push_back(entry);
  }
  return Json{{"camera", to_json(spec.camera)}, {"sigma", json_number(spec.sigma)}, {"bricks", bricks}};
}

SceneSpec scene_spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("camera") || !j.contains("bricks")) {
    throw Error(ErrorCode::kFormatError, "scene spec needs 'camera' and 'bricks'");
  }
  SceneSpec spec;
  spec.camera = camera_from_json(j.at("camera"));
  spec.sigma = j.contains("sigma") ? number_at(j, "sigma") : 0.0;
  for (const Json& b : j.at("bricks")) {
    const Vector3 d = vector_from_json(b.at("dims"));
    SceneBrick brick{pose_from_json(b), BrickDims(d.x(), d.y(), d.z()),
                     class_from_string(b.at("class").get<std::string>())};
    spec.bricks.push_back(brick);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
}

std::string ply_string(const PointCloud& cloud) {
  cloud.validate();
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n";
  if (cloud.registered()) out += "property ushort u\nproperty ushort v\n";
  out += "end_header\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    int n = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", static_cast<double>(static_cast<float>(p.x())),
                          static_cast<double>(static_cast<float>(p.y())),
                          static_cast<double>(static_cast<float>(p.z())));
    out.append(buf, static_cast<std::size_t>(n));
    if (cloud.registered()) {
      n = std::snprintf(buf, sizeof(buf), " %u %u", static_cast<unsigned>(cloud.pixels[i].u),
                        static_cast<unsigned>(cloud.pixels[i].v));
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

PointCloud parse_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw Error(ErrorCode::kFormatError, "missing 'ply' magic");
  std::size_t count = 0;
  bool in_vertex = false, ascii = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (!in_vertex) throw Error(ErrorCode::kFormatError, "only vertex elements are supported");
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    }
  }
  if (!ascii) throw Error(ErrorCode::kFormatError, "only ASCII PLY is supported");
  auto find = [&](const char* name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ix = find("x"), iy = find("y"), iz = find("z"), iu = find("u"), iv = find("v");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::kFormatError, "PLY lacks x/y/z properties");
  const bool registered = iu >= 0 && iv >= 0;

  PointCloud cloud;
  cloud.points.reserve(count);
  std::vector<double> values(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (double& v : values) {
      if (!(in >> v)) throw Error(ErrorCode::kFormatError, "PLY vertex data truncated");
    }
    cloud.points.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                              values[static_cast<std::size_t>(iz)]);
    if (registered) {
      const double u = values[static_cast<std::size_t>(iu)], v = values[static_cast<std::size_t>(iv)];
      if (u < 0 || v < 0 || u > 65535 || v > 65535) throw Error(ErrorCode::kFormatError, "pixel out of range");
      cloud.pixels.push_back({static_cast<std::uint16_t>(u), static_cast<std::uint16_t>(v)});
    }
  }
  return cloud;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) { write_text(path, ply_string(cloud)); }

PointCloud read_ply(const std::filesystem::path& path) { return parse_ply(read_text(path)); }

std::string pgm_string(const InstanceMask& mask) {
  std::string out =
      "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n65535\n";
  out.reserve(out.size() + mask.labels().size() * 2);
  for (std::uint16_t l : mask.labels()) {
    out.push_back(static_cast<char>(l >> 8));
    out.push_back(static_cast<char>(l & 0xFF));
  }
  return out;
}

InstanceMask parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw Error(ErrorCode::kFormatError, "expected a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormatError, "malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw Error(ErrorCode::kFormatError, "bad PGM header values");
  ++pos;  // single whitespace before the raster
  const std::size_t sample = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n * sample) throw Error(ErrorCode::kFormatError, "PGM raster truncated");
  std::vector<std::uint16_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * sample);
    labels[i] = sample == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
  }
  return InstanceMask(w, h, std::move(labels), {});
}

void write_pgm(const std::filesystem::path& path, const InstanceMask& mask) { write_text(path, pgm_string(mask)); }

InstanceMask read_pgm(const std::filesystem::path& path) { return parse_pgm(read_text(path)); }

std::vector<std::string> write_scene_bundle(const std::filesystem::path& dir, const SceneSpec& spec,
                                            const RenderedScene& scene) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  write_ply(dir / SceneBundle::kCloud, scene.cloud);
  write_pgm(dir / SceneBundle::kMask, scene.mask);

  Json boxes = Json::array();
  for (const LabeledBox& lb : scene.boxes) {
    Json b = to_json(lb.box);
    b["instance"] = lb.instance;
    boxes.push_back(b);
  }
  write_text(dir / SceneBundle::kBoxes, dump_json(boxes));

  Json poses = Json::array();
  for (std::size_t i = 0; i < scene.poses.size(); ++i) {
    Json p = to_json(scene.poses[i]);
    p["instance"] = i + 1;
    poses.push_back(p);
  }
  write_text(dir / SceneBundle::kPoses, dump_json(poses));
  write_text(dir / SceneBundle::kSpec, dump_json(to_json(spec)));
  return {SceneBundle::kCloud, SceneBundle::kMask, SceneBundle::kBoxes, SceneBundle::kPoses, SceneBundle::kSpec};
}

InstanceMask read_bundle_mask(const std::filesystem::path& dir) {
  InstanceMask mask = read_pgm(dir / SceneBundle::kMask);
  const Json spec = read_json(dir / SceneBundle::kSpec);
  if (!spec.contains("bricks") || !spec.at("bricks").is_array()) {
    throw Error(ErrorCode::kFormatError, "spec.json lacks a bricks list");
  }
  for (const Json& b : spec.at("bricks")) {
    if (!b.contains("instance") || !b.contains("class")) {
      throw Error(ErrorCode::kFormatError, "brick entry needs 'instance' and 'class'");
    }
    mask.set_class(b.at("instance").get<std::uint16_t>(), class_from_string(b.at("class").get<std::string>()));
  }
  mask.validate();
  return mask;
}

}  // namespace brickvision
