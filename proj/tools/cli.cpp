#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "brickvision/codec.hpp"
#include "brickvision/error.hpp"
#include "brickvision/io.hpp"
#include "brickvision/metrics.hpp"
#include "brickvision/pipeline.hpp"
#include "brickvision/random.hpp"
#include "brickvision/synth.hpp"

namespace brickvision::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 20220713;

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::vector<double> dims{0.20, 0.09, 0.06};
  std::vector<double> up{0.0, 0.0, -1.0};
  std::string out;
};

BrickDims make_dims(const std::vector<double>& d) { return BrickDims(d.at(0), d.at(1), d.at(2)); }

Vector3 make_vec(const std::vector<double>& v) {
  const Vector3 out(v.at(0), v.at(1), v.at(2));
  if (!(out.norm() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "vector must be non-zero");
  return out.normalized();
}

void emit(const Json& j, const std::string& path, std::ostream& out) {
  const std::string text = dump_json(j);
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_dims(CLI::App* cmd, Common& c) {
  cmd->add_option("--dims", c.dims, "Brick dimensions L,W,H in meters")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
}

void add_out(CLI::App* cmd, Common& c, const char* what) { cmd->add_option("-o,--out", c.out, what); }

// ---------------------------------------------------------------------------

struct SynthArgs {
  int scenes = 1;
  int bricks = 1;
  double sigma = 0.0;
  std::string layout = "clutter";
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  if (a.scenes < 0 || a.bricks < 0) throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
  const BrickDims dims = make_dims(c.dims);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + a.out_dir + ": " + ec.message());

  Json scenes = Json::array();
  for (int i = 0; i < a.scenes; ++i) {
    const std::uint64_t scene_seed = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(scene_seed);
    SceneSpec spec;
    if (a.layout == "clutter") {
      spec = random_clutter_scene(a.bricks, dims, a.sigma, rng);
    } else if (a.layout == "single") {
      spec = random_single_brick_scene(dims, a.sigma, rng);
    } else {
      spec = frontal_brick_scene(dims);
      spec.sigma = a.sigma;
    }
    const RenderedScene scene = render_scene(spec, derive_seed(scene_seed, 1));
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    const std::vector<std::string> files = write_scene_bundle(fs::path(a.out_dir) / name, spec, scene);
    Json listed = Json::array();
    for (const std::string& f : files) listed.push_back(std::string(name) + "/" + f);
    scenes.push_back({{"dir", name}, {"files", listed}, {"bricks", spec.bricks.size()}});
  }
  const Json manifest{{"seed", c.seed}, {"layout", a.layout}, {"sigma", json_number(a.sigma)}, {"scenes", scenes}};
  write_text(fs::path(a.out_dir) / "manifest.json", dump_json(manifest));
  out << dump_json(manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct PoseArgs {
  std::string cloud;
  std::string box;
  std::size_t box_index = 0;
  int ransac_iters = 500;
  double ransac_thresh = 0.005;
  double face_tol = 0.012;
  std::string debug_dir;
};

Json lines_json(const PipelineResult& r) {
  Json lines = Json::array();
  for (const Line3& l : r.lines) {
    lines.push_back({{"anchor", {json_number(l.anchor.x()), json_number(l.anchor.y()), json_number(l.anchor.z())}},
                     {"direction",
                      {json_number(l.direction.x()), json_number(l.direction.y()), json_number(l.direction.z())}},
                     {"inliers", l.inliers.size()}});
  }
  return lines;
}

void write_stage_dumps(const fs::path& dir, const PipelineResult& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  write_ply(dir / "crop.ply", r.crop);
  write_ply(dir / "inliers.ply", r.crop.subset(r.plane.inliers));
  write_ply(dir / "boundary.ply", r.surface_cloud.subset(r.boundary));
  std::vector<std::size_t> on_lines;
  for (const Line3& l : r.lines) on_lines.insert(on_lines.end(), l.inliers.begin(), l.inliers.end());
  write_ply(dir / "lines.ply", r.surface_cloud.subset(on_lines));
  PointCloud corners;
  for (const Corner& c : r.corners) corners.points.push_back(c.point);
  write_ply(dir / "corners.ply", corners);

  Json corner_list = Json::array();
  for (const Corner& c : r.corners) {
    corner_list.push_back({{"point", {json_number(c.point.x()), json_number(c.point.y()), json_number(c.point.z())}},
                           {"lines", {c.line_a, c.line_b}}});
  }
  Json edge_list = Json::array();
  for (const Edge& e : r.edges) {
    edge_list.push_back({{"corners", {e.corner_a, e.corner_b}}, {"line", e.line}, {"length", json_number(e.length)}});
  }
  const Json stages{{"plane",
                     {{"normal", {json_number(r.plane.normal.x()), json_number(r.plane.normal.y()),
                                  json_number(r.plane.normal.z())}},
                      {"offset", json_number(r.plane.offset)},
                      {"inliers", r.plane.inliers.size()}}},
                    {"crop_points", r.crop.size()},
                    {"boundary_points", r.boundary.size()},
                    {"lines", lines_json(r)},
                    {"corners", corner_list},
                    {"edges", edge_list},
                    {"face", std::string(to_string(r.face))}};
  write_text(dir / "stages.json", dump_json(stages));
}

int cmd_pose(const PoseArgs& a, const Common& c, std::ostream& out) {
  const PointCloud cloud = read_ply(a.cloud);
  const std::vector<RotatedBox> boxes = boxes_from_json(read_json(a.box));
  if (a.box_index >= boxes.size()) throw Error(ErrorCode::kInvalidArgument, "box index out of range");

  PipelineParams params;
  params.plane.iterations = a.ransac_iters;
  params.plane.threshold = a.ransac_thresh;
  params.plane.seed = c.seed;
  params.line.iterations = a.ransac_iters;
  params.line.threshold = a.ransac_thresh;
  params.line.seed = derive_seed(c.seed, 1);
  params.face_tol = a.face_tol;

  const PipelineResult result = estimate_brick_pose(cloud, boxes[a.box_index], make_dims(c.dims), params);
  if (!a.debug_dir.empty()) write_stage_dumps(a.debug_dir, result);
  emit(to_json(result.pose, result.face), c.out, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string mode = "rotated";
  std::string match = "center";
  double iou_thresh = 0.5;
};

int cmd_eval(const EvalArgs& a, const Common& c, std::ostream& out) {
  const std::vector<RotatedBox> boxes = boxes_from_json(read_json(a.pred));
  const InstanceMask gt = read_bundle_mask(a.gt);
  const SceneDetections scene{boxes, gt};
  const MatchRule rule = a.match == "iou" ? MatchRule::iou(a.iou_thresh) : MatchRule::center_in_box();
  const BoxMode mode = a.mode == "upright" ? BoxMode::kUpright : BoxMode::kRotated;
  const EvalReport report = evaluate(std::span<const SceneDetections>(&scene, 1), mode, rule, a.iou_thresh);
  Json j = to_json(report);
  j["mode"] = a.mode;
  j["match"] = a.match;
  emit(j, c.out, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct CodecArgs {
  std::string scene;
  std::string tensor;
  int cell = 16;
  double conf_thresh = 0.5;
  double iou_thresh = 0.5;
  bool nms = false;
};

EncodingConfig make_config(const CodecArgs& a) {
  EncodingConfig cfg;
  cfg.cell = a.cell;
  cfg.conf_threshold = a.conf_thresh;
  cfg.validate();
  return cfg;
}

int cmd_encode(const CodecArgs& a, const Common& c, std::ostream& out) {
  const EncodingConfig cfg = make_config(a);
  const InstanceMask mask = read_bundle_mask(a.scene);
  const std::vector<CellTarget> targets = assign_targets(mask, cfg);
  write_tensor(encode_targets(targets, cfg), a.tensor);
  Json cells = Json::array();
  for (const CellTarget& t : targets) {
    cells.push_back({{"row", t.row}, {"col", t.col}, {"instance", t.instance},
                     {"mask_fraction", json_number(t.mask_fraction)}, {"box", to_json(t.box)}});
  }
  emit(Json{{"rows", cfg.rows()}, {"cols", cfg.cols()}, {"targets", cells}}, c.out, out);
  return 0;
}

int cmd_decode(const CodecArgs& a, const Common& c, std::ostream& out) {
  const EncodingConfig cfg = make_config(a);
  std::vector<RotatedBox> boxes = decode(read_tensor(a.tensor, cfg), cfg);
  if (a.nms) boxes = rotated_nms(boxes, a.iou_thresh);
  Json list = Json::array();
  for (const RotatedBox& b : boxes) list.push_back(to_json(b));
  emit(list, c.out, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  int rounds = 25;
  int layers = 6;
  double sigma_t = 0.0;
  double sigma_r = 0.0;
};

int cmd_simulate(const SimArgs& a, const Common& c, std::ostream& out) {
  WallConfig cfg;
  cfg.rounds = a.rounds;
  cfg.layers = a.layers;
  cfg.noise = {a.sigma_t, a.sigma_r};
  cfg.seed = c.seed;
  cfg.dims = make_dims(c.dims);
  const WallResult r = simulate_wall(cfg);
  Json header = Json::array();
  for (int layer = 2; layer <= a.layers; ++layer) header.push_back("layer-" + std::to_string(layer));
  emit(Json{{"rounds", a.rounds},
            {"layers", header},
            {"successful_rounds", r.successes},
            {"sigma_t", json_number(a.sigma_t)},
            {"sigma_r", json_number(a.sigma_r)},
            {"seed", c.seed}},
       c.out, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct PlaceArgs {
  std::string pose;
  std::string reference;
  double max_dist = 0.1;
  double max_euler = 15.0;
};

int cmd_place(const PlaceArgs& a, const Common& c, std::ostream& out) {
  const BrickPose pose = pose_from_json(read_json(a.pose));
  const BrickPose ref = pose_from_json(read_json(a.reference));
  const PlacementReport r = placement_check(pose, ref, {a.max_dist, a.max_euler}, make_vec(c.up));
  emit(to_json(r), c.out, out);
  return 0;
}

int cmd_topmost(const std::string& poses_path, const Common& c, std::ostream& out) {
  const Json j = read_json(poses_path);
  if (!j.is_array()) throw Error(ErrorCode::kFormatError, "expected an array of poses");
  std::vector<BrickPose> poses;
  for (const Json& p : j) poses.push_back(pose_from_json(p));
  const std::size_t idx = select_topmost(poses, make_vec(c.up));
  emit(Json{{"index", idx}, {"pose", to_json(poses[idx])}}, c.out, out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotated-box brick detection targets, metrics and point-cloud pose estimation"};
  app.name(args.empty() ? "brickvision" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  Common common;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic scene bundles");
  c_synth->add_option("-n,--scenes", synth.scenes, "Number of scenes")->capture_default_str();
  c_synth->add_option("-b,--bricks", synth.bricks, "Bricks per clutter scene")->capture_default_str();
  c_synth->add_option("--sigma", synth.sigma, "Depth noise along the ray (m)")->capture_default_str();
  c_synth->add_option("--layout", synth.layout, "clutter | single | frontal")
      ->check(CLI::IsMember({"clutter", "single", "frontal"}))
      ->capture_default_str();
  c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  add_seed(c_synth, common);
  add_dims(c_synth, common);

  PoseArgs pose;
  auto* c_pose = app.add_subcommand("pose", "Estimate a brick pose from a registered cloud and a rotated box");
  c_pose->add_option("--cloud", pose.cloud, "Registered ASCII PLY")->required()->check(CLI::ExistingFile);
  c_pose->add_option("--box", pose.box, "Rotated box JSON")->required()->check(CLI::ExistingFile);
  c_pose->add_option("--box-index", pose.box_index, "Box to use when the file holds a list")->capture_default_str();
  c_pose->add_option("--ransac-iters", pose.ransac_iters, "RANSAC iterations")->capture_default_str();
  c_pose->add_option("--ransac-thresh", pose.ransac_thresh, "RANSAC inlier distance (m)")->capture_default_str();
  c_pose->add_option("--face-tol", pose.face_tol, "Edge length tolerance for face identification (m)")
      ->capture_default_str();
  c_pose->add_option("--debug-dir", pose.debug_dir, "Directory for per-stage dumps");
  add_seed(c_pose, common);
  add_dims(c_pose, common);
  add_out(c_pose, common, "Pose JSON output (stdout if omitted)");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Pixel precision, recall and mAP against a scene bundle");
  c_eval->add_option("--pred", eval.pred, "Predicted boxes JSON")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gt", eval.gt, "Scene bundle directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--mode", eval.mode, "rotated | upright")
      ->check(CLI::IsMember({"rotated", "upright"}))
      ->capture_default_str();
  c_eval->add_option("--match", eval.match, "center | iou")->check(CLI::IsMember({"center", "iou"}))->capture_default_str();
  c_eval->add_option("--iou-thresh", eval.iou_thresh, "IoU threshold for matching and mAP")->capture_default_str();
  add_seed(c_eval, common);
  add_out(c_eval, common, "Report JSON output (stdout if omitted)");

  CodecArgs codec;
  auto* c_encode = app.add_subcommand("encode", "Encode a scene bundle's mask into a grid tensor");
  c_encode->add_option("--scene", codec.scene, "Scene bundle directory")->required()->check(CLI::ExistingDirectory);
  c_encode->add_option("--tensor", codec.tensor, "Output tensor file")->required();
  c_encode->add_option("--cell-size", codec.cell, "Grid cell size (px)")->capture_default_str();
  add_seed(c_encode, common);
  add_out(c_encode, common, "Target summary JSON output (stdout if omitted)");

  auto* c_decode = app.add_subcommand("decode", "Decode a grid tensor into rotated boxes");
  c_decode->add_option("--tensor", codec.tensor, "Tensor file")->required()->check(CLI::ExistingFile);
  c_decode->add_option("--cell-size", codec.cell, "Grid cell size (px)")->capture_default_str();
  c_decode->add_option("--conf-thresh", codec.conf_thresh, "Detection confidence threshold")->capture_default_str();
  c_decode->add_flag("--nms", codec.nms, "Apply rotated NMS to the decoded boxes");
  c_decode->add_option("--iou-thresh", codec.iou_thresh, "NMS IoU threshold")->capture_default_str();
  add_seed(c_decode, common);
  add_out(c_decode, common, "Boxes JSON output (stdout if omitted)");

  SimArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Wall-building placement simulation with error chaining");
  c_sim->add_option("--rounds", sim.rounds, "Rounds")->capture_default_str();
  c_sim->add_option("--layers", sim.layers, "Layers per round, including the hand-placed first one")
      ->capture_default_str();
  c_sim->add_option("--sigma-t", sim.sigma_t, "Translation noise per axis and placement (m)")->capture_default_str();
  c_sim->add_option("--sigma-r", sim.sigma_r, "Rotation noise per axis and placement (rad)")->capture_default_str();
  add_seed(c_sim, common);
  add_dims(c_sim, common);
  add_out(c_sim, common, "Table JSON output (stdout if omitted)");

  PlaceArgs place;
  auto* c_place = app.add_subcommand("place", "Check a placed pose against its reference");
  c_place->add_option("--pose", place.pose, "Placed brick pose JSON")->required()->check(CLI::ExistingFile);
  c_place->add_option("--reference", place.reference, "Reference pose JSON")->required()->check(CLI::ExistingFile);
  c_place->add_option("--max-dist", place.max_dist, "Ground-plane centroid threshold (m)")->capture_default_str();
  c_place->add_option("--max-euler", place.max_euler, "Per-axis Euler threshold (deg)")->capture_default_str();
  c_place->add_option("--up", common.up, "Ground normal x,y,z")->delimiter(',')->expected(3)->capture_default_str();
  add_out(c_place, common, "Report JSON output (stdout if omitted)");

  std::string poses_path;
  auto* c_top = app.add_subcommand("topmost", "Pick the highest pose along the up vector");
  c_top->add_option("--poses", poses_path, "JSON array of poses")->required()->check(CLI::ExistingFile);
  c_top->add_option("--up", common.up, "Up vector x,y,z in the pose frame")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  add_out(c_top, common, "Result JSON output (stdout if omitted)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("brickvision");
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, common, out);
    if (c_pose->parsed()) return cmd_pose(pose, common, out);
    if (c_eval->parsed()) return cmd_eval(eval, common, out);
    if (c_encode->parsed()) return cmd_encode(codec, common, out);
    if (c_decode->parsed()) return cmd_decode(codec, common, out);
    if (c_sim->parsed()) return cmd_simulate(sim, common, out);
    if (c_place->parsed()) return cmd_place(place, common, out);
    if (c_top->parsed()) return cmd_topmost(poses_path, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace brickvision::cli
