#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "brickvision/codec.hpp"
#include "brickvision/error.hpp"
#include "brickvision/geom.hpp"
#include "brickvision/io.hpp"
#include "brickvision/metrics.hpp"
#include "brickvision/pipeline.hpp"
#include "brickvision/pose.hpp"
#include "brickvision/random.hpp"
#include "brickvision/synth.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace brickvision;

namespace {

using Dims = std::array<double, 3>;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using MaskArray = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;

BrickDims make_dims(const Dims& d) { return BrickDims(d[0], d[1], d[2]); }

InstanceMask make_mask(const MaskArray& labels, const std::map<int, std::string>& classes) {
  if (labels.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "mask must be a 2-D array");
  const int h = static_cast<int>(labels.shape(0)), w = static_cast<int>(labels.shape(1));
  std::vector<std::uint16_t> data(labels.data(), labels.data() + labels.size());
  std::map<std::uint16_t, BrickClass> class_of;
  for (const auto& [id, name] : classes) class_of[static_cast<std::uint16_t>(id)] = class_from_string(name);
  InstanceMask mask(w, h, std::move(data), std::move(class_of));
  mask.validate();
  return mask;
}

MaskArray mask_array(const InstanceMask& mask) {
  MaskArray out({mask.height(), mask.width()});
  std::memcpy(out.mutable_data(), mask.labels().data(), mask.labels().size() * sizeof(std::uint16_t));
  return out;
}

std::map<int, std::string> class_dict(const InstanceMask& mask) {
  std::map<int, std::string> out;
  for (const auto& [id, cls] : mask.class_map()) out[id] = to_string(cls);
  return out;
}

PointCloud make_cloud(const Points3& points, const std::optional<Points2>& pixels) {
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) cloud.points.push_back(points.row(i).transpose());
  if (pixels) {
    if (pixels->rows() != points.rows()) throw Error(ErrorCode::kInvalidArgument, "need one pixel per point");
    for (Eigen::Index i = 0; i < pixels->rows(); ++i) {
      cloud.pixels.push_back({static_cast<std::uint16_t>((*pixels)(i, 0)), static_cast<std::uint16_t>((*pixels)(i, 1))});
    }
  }
  cloud.validate();
  return cloud;
}

py::dict pose_dict(const BrickPose& pose) {
  py::dict d;
  d["R"] = Eigen::Matrix3d(pose.rotation);
  d["t"] = Eigen::Vector3d(pose.translation);
  return d;
}

BrickPose pose_from(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  BrickPose p;
  p.rotation = r;
  p.translation = t;
  return p;
}

py::dict scene_dict(const SceneSpec& spec, const RenderedScene& scene) {
  Points3 points(static_cast<Eigen::Index>(scene.cloud.size()), 3);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 2, Eigen::RowMajor> pixels(points.rows(), 2);
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    points.row(static_cast<Eigen::Index>(i)) = scene.cloud.points[i].transpose();
    pixels(static_cast<Eigen::Index>(i), 0) = scene.cloud.pixels[i].u;
    pixels(static_cast<Eigen::Index>(i), 1) = scene.cloud.pixels[i].v;
  }
  py::list boxes, poses;
  for (const LabeledBox& lb : scene.boxes) boxes.append(py::make_tuple(lb.instance, lb.box));
  for (const BrickPose& p : scene.poses) poses.append(pose_dict(p));
  py::dict d;
  d["points"] = points;
  d["pixels"] = pixels;
  d["mask"] = mask_array(scene.mask);
  d["classes"] = class_dict(scene.mask);
  d["boxes"] = boxes;
  d["poses"] = poses;
  d["sigma"] = spec.sigma;
  return d;
}

MatchRule match_rule(const std::string& match, double iou_threshold) {
  if (match == "center") return MatchRule::center_in_box();
  if (match == "iou") return MatchRule::iou(iou_threshold);
  throw Error(ErrorCode::kInvalidArgument, "match must be 'center' or 'iou'");
}

EncodingConfig codec_config(int cell, double conf_threshold) {
  EncodingConfig cfg;
  cfg.cell = cell;
  cfg.conf_threshold = conf_threshold;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rotated-box brick detection targets, metrics and point-cloud pose estimation";

  static py::handle error_type = PyErr_NewException("brickvision.BrickVisionError", PyExc_RuntimeError, nullptr);
  m.attr("BrickVisionError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("stage") = e.stage().empty() ? py::object(py::none()) : py::object(py::str(e.stage()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // geometry
  py::class_<RotatedBox>(m, "RotatedBox")
      .def(py::init([](double cx, double cy, double w, double h, double theta, const std::string& cls, double score) {
             return RotatedBox(cx, cy, w, h, theta, class_from_string(cls), score);
           }),
           "cx"_a, "cy"_a, "w"_a, "h"_a, "theta"_a = 0.0, "cls"_a = "blue", "score"_a = 1.0)
      .def_property_readonly("cx", &RotatedBox::cx)
      .def_property_readonly("cy", &RotatedBox::cy)
      .def_property_readonly("w", &RotatedBox::w)
      .def_property_readonly("h", &RotatedBox::h)
      .def_property_readonly("theta", &RotatedBox::theta)
      .def_property_readonly("cls", [](const RotatedBox& b) { return to_string(b.cls()); })
      .def_property_readonly("score", &RotatedBox::score)
      .def_property_readonly("area", &RotatedBox::area)
      .def("corners",
           [](const RotatedBox& b) {
             const ConvexPolygon poly = box_corners(b);
             Points2 out(static_cast<Eigen::Index>(poly.size()), 2);
             for (std::size_t i = 0; i < poly.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = poly.vertices()[i];
             return out;
           })
      .def("contains", [](const RotatedBox& b, double x, double y) { return b.contains(Point2(x, y)); }, "x"_a, "y"_a)
      .def("to_dict", [](const RotatedBox& b) { return py::module_::import("json").attr("loads")(to_json(b).dump()); })
      .def("__eq__", [](const RotatedBox& a, const RotatedBox& b) { return a == b; })
      .def("__repr__", [](const RotatedBox& b) {
        return "RotatedBox(cx=" + std::to_string(b.cx()) + ", cy=" + std::to_string(b.cy()) + ", w=" +
               std::to_string(b.w()) + ", h=" + std::to_string(b.h()) + ", theta=" + std::to_string(b.theta()) +
               ", cls='" + to_string(b.cls()) + "')";
      });

  m.def("rotated_iou", &rotated_iou, "a"_a, "b"_a);
  m.def(
      "rotated_nms", [](const std::vector<RotatedBox>& boxes, double t) { return rotated_nms(boxes, t); }, "boxes"_a,
      "iou_threshold"_a = 0.5);
  m.def(
      "min_area_rect",
      [](const Points2& pts) {
        std::vector<Point2> v;
        for (Eigen::Index i = 0; i < pts.rows(); ++i) v.push_back(pts.row(i).transpose());
        return min_area_rect(v);
      },
      "points"_a);
  m.def("upright_bbox", &upright_bbox, "box"_a);
  m.def(
      "mask_box", [](const MaskArray& mask, const std::map<int, std::string>& classes, int id) {
        return mask_box(make_mask(mask, classes), static_cast<std::uint16_t>(id));
      },
      "mask"_a, "classes"_a, "instance"_a);

  // codec
  m.def(
      "encode",
      [](const MaskArray& mask, const std::map<int, std::string>& classes, int cell) {
        const EncodingConfig cfg = codec_config(cell, 0.5);
        const GridTensor t = encode(make_mask(mask, classes), cfg);
        py::array_t<double> out({t.rows(), t.cols(), t.channels()});
        std::memcpy(out.mutable_data(), t.data().data(), t.data().size() * sizeof(double));
        return out;
      },
      "mask"_a, "classes"_a, "cell"_a = 16);
  m.def(
      "decode",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& tensor, int cell,
         double conf_threshold) {
        const EncodingConfig cfg = codec_config(cell, conf_threshold);
        if (tensor.ndim() != 3 || tensor.shape(0) != cfg.rows() || tensor.shape(1) != cfg.cols() ||
            tensor.shape(2) != kGridChannels) {
          throw Error(ErrorCode::kInvalidArgument, "tensor shape does not match the grid");
        }
        GridTensor t(cfg.rows(), cfg.cols());
        std::memcpy(t.data().data(), tensor.data(), t.data().size() * sizeof(double));
        return decode(t, cfg);
      },
      "tensor"_a, "cell"_a = 16, "conf_threshold"_a = 0.5);

  // metrics
  m.def(
      "pixel_precision",
      [](const std::vector<RotatedBox>& boxes, const MaskArray& mask, const std::map<int, std::string>& classes) {
        return pixel_precision(boxes, make_mask(mask, classes));
      },
      "boxes"_a, "mask"_a, "classes"_a);
  m.def(
      "detection_recall",
      [](const std::vector<RotatedBox>& boxes, const MaskArray& mask, const std::map<int, std::string>& classes,
         const std::string& match, double iou_threshold) {
        return detection_recall(boxes, make_mask(mask, classes), match_rule(match, iou_threshold));
      },
      "boxes"_a, "mask"_a, "classes"_a, "match"_a = "center", "iou_threshold"_a = 0.5);
  m.def(
      "map_score",
      [](const std::vector<RotatedBox>& boxes, const MaskArray& mask, const std::map<int, std::string>& classes,
         double iou_threshold) { return map_score(boxes, make_mask(mask, classes), iou_threshold); },
      "boxes"_a, "mask"_a, "classes"_a, "iou_threshold"_a = 0.5);
  m.def(
      "ground_truth_boxes",
      [](const MaskArray& mask, const std::map<int, std::string>& classes) {
        return ground_truth_boxes(make_mask(mask, classes));
      },
      "mask"_a, "classes"_a);

  // synthetic scenes
  m.def(
      "frontal_scene",
      [](const Dims& dims, double depth, std::uint64_t seed) {
        const SceneSpec spec = frontal_brick_scene(make_dims(dims), depth);
        return scene_dict(spec, render_scene(spec, seed));
      },
      "dims"_a = Dims{0.20, 0.09, 0.06}, "depth"_a = 0.7, "seed"_a = 0);
  m.def(
      "clutter_scene",
      [](int bricks, const Dims& dims, double sigma, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const SceneSpec spec = random_clutter_scene(bricks, make_dims(dims), sigma, rng);
        return scene_dict(spec, render_scene(spec, derive_seed(seed, 1)));
      },
      "bricks"_a = 8, "dims"_a = Dims{0.20, 0.09, 0.06}, "sigma"_a = 0.0, "seed"_a = 0);
  m.def(
      "single_brick_scene",
      [](const Dims& dims, double sigma, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const SceneSpec spec = random_single_brick_scene(make_dims(dims), sigma, rng);
        return scene_dict(spec, render_scene(spec, derive_seed(seed, 1)));
      },
      "dims"_a = Dims{0.20, 0.09, 0.06}, "sigma"_a = 0.0, "seed"_a = 0);

  // pose
  m.def(
      "estimate_pose",
      [](const Points3& points, const std::optional<Points2>& pixels, const std::optional<RotatedBox>& box,
         const Dims& dims, std::uint64_t seed, double face_tol) {
        PipelineParams params;
        params.plane.seed = derive_seed(seed, 2);
        params.line.seed = derive_seed(seed, 3);
        params.face_tol = face_tol;
        PointCloud cloud = make_cloud(points, pixels);
        const PipelineResult r = box ? estimate_brick_pose(cloud, *box, make_dims(dims), params)
                                     : estimate_brick_pose(std::move(cloud), make_dims(dims), params);
        py::dict d = pose_dict(r.pose);
        d["face"] = std::string(to_string(r.face));
        d["plane_inliers"] = r.plane.inliers.size();
        d["corners"] = r.corners.size();
        return d;
      },
      "points"_a, "pixels"_a = py::none(), "box"_a = py::none(), "dims"_a = Dims{0.20, 0.09, 0.06}, "seed"_a = 0,
      "face_tol"_a = 0.012);
  m.def(
      "identify_surface",
      [](const std::vector<double>& edges, const Dims& dims, double tol) {
        return std::string(to_string(identify_surface(edges, make_dims(dims), tol)));
      },
      "edges"_a, "dims"_a = Dims{0.20, 0.09, 0.06}, "tol"_a = 0.012);
  m.def(
      "pose_error",
      [](const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const Eigen::Matrix3d& r_true,
         const Eigen::Vector3d& t_true) {
        const PoseError e = pose_error(pose_from(r, t), pose_from(r_true, t_true));
        return py::make_tuple(e.translation, Eigen::Vector3d(e.euler_deg));
      },
      "R"_a, "t"_a, "R_true"_a, "t_true"_a);
  m.def(
      "placement_check",
      [](const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const Eigen::Matrix3d& r_ref,
         const Eigen::Vector3d& t_ref, double max_dist, double max_euler_deg, const Eigen::Vector3d& up) {
        const PlacementReport rep =
            placement_check(pose_from(r, t), pose_from(r_ref, t_ref), {max_dist, max_euler_deg}, up);
        py::dict d;
        d["success"] = rep.success;
        d["centroid_err"] = rep.centroid_err;
        d["euler_err_deg"] = Eigen::Vector3d(rep.euler_err_deg);
        return d;
      },
      "R"_a, "t"_a, "R_ref"_a, "t_ref"_a, "max_dist"_a = 0.1, "max_euler_deg"_a = 15.0,
      "up"_a = Eigen::Vector3d::UnitZ().eval());
  m.def("euler_xyz", [](const Eigen::Matrix3d& r) { return Eigen::Vector3d(euler_xyz(r)); }, "R"_a);
  m.def(
      "simulate_wall",
      [](int rounds, int layers, double sigma_t, double sigma_r, std::uint64_t seed) {
        WallConfig cfg;
        cfg.rounds = rounds;
        cfg.layers = layers;
        cfg.noise = {sigma_t, sigma_r};
        cfg.seed = seed;
        return simulate_wall(cfg).successes;
      },
      "rounds"_a = 25, "layers"_a = 6, "sigma_t"_a = 0.0, "sigma_r"_a = 0.0, "seed"_a = 0x5eed);
}
