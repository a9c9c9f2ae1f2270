#include "brickvision/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "brickvision/error.hpp"

namespace brickvision {

void EncodingConfig::validate() const {
  if (cell <= 0 || image_w <= 0 || image_h <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image and cell sizes must be positive");
  }
  if (image_w % cell != 0 || image_h % cell != 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be divisible by the cell size");
  }
  if (rows() > 0xFFFF || cols() > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "grid too large");
  if (!(theta_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta_max must be positive");
}

GridTensor::GridTensor(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols * kGridChannels, 0.0) {
  if (rows <= 0 || cols <= 0) throw Error(ErrorCode::kInvalidArgument, "tensor shape must be positive");
}

GridTensor GridTensor::background(const EncodingConfig& cfg) {
  cfg.validate();
  GridTensor t(cfg.rows(), cfg.cols());
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) t.at(r, c, kProbBackground) = 1.0;
  }
  return t;
}

std::array<double, kGridChannels> GridTensor::cell(int row, int col) const {
  std::array<double, kGridChannels> out{};
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(index(row, col, 0)), kGridChannels, out.begin());
  return out;
}

bool GridTensor::valid(double tol) const {
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const auto v = cell(r, c);
      if (std::abs(v[kProbBlue] + v[kProbGreen] + v[kProbBackground] - 1.0) > tol) return false;
      for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) return false;
      }
    }
  }
  return true;
}

std::vector<CellTarget> assign_targets(const InstanceMask& mask, const EncodingConfig& cfg) {
  cfg.validate();
  if (mask.width() != cfg.image_w || mask.height() != cfg.image_h) {
    throw Error(ErrorCode::kInvalidArgument, "mask size does not match the encoding config");
  }
  const std::vector<std::uint16_t> ids = mask.instance_ids();

  std::vector<std::size_t> totals(std::size_t{0xFFFF} + 1, 0);
  for (std::uint16_t id : mask.labels()) ++totals[id];

  std::map<int, CellTarget> winners;
  for (std::uint16_t id : ids) {
    const RotatedBox box = mask_box(mask, id);
    if (box.cx() < 0.0 || box.cy() < 0.0 || box.cx() >= cfg.image_w || box.cy() >= cfg.image_h) {
      throw Error(ErrorCode::kOutOfFrame, "box center of instance " + std::to_string(id) + " is outside the image");
    }
    if (box.w() > cfg.image_w || box.h() > cfg.image_h) {
      throw Error(ErrorCode::kOutOfFrame, "box of instance " + std::to_string(id) + " exceeds the size range");
    }
    const int col = static_cast<int>(std::floor(box.cx() / cfg.cell));
    const int row = static_cast<int>(std::floor(box.cy() / cfg.cell));
    const int key = row * cfg.cols() + col;
    std::size_t px = 0;
    for (int v = row * cfg.cell; v < (row + 1) * cfg.cell; ++v) {
      for (int u = col * cfg.cell; u < (col + 1) * cfg.cell; ++u) px += mask.at(u, v) == id;
    }
    const double fraction = static_cast<double>(px) / static_cast<double>(totals[id]);

    CellTarget target{row, col, id, box, fraction};
    auto [it, inserted] = winners.try_emplace(key, target);
    // Ids arrive ascending, so a strict comparison keeps the lower id on ties.
    if (!inserted && fraction > it->second.mask_fraction) it->second = target;
  }

  std::vector<CellTarget> out;
  out.reserve(winners.size());
  for (auto& [key, target] : winners) out.push_back(target);
  return out;
}

GridTensor encode_targets(std::span<const CellTarget> targets, const EncodingConfig& cfg) {
  GridTensor t = GridTensor::background(cfg);
  const double cell = cfg.cell;
  for (const CellTarget& tg : targets) {
    if (tg.row < 0 || tg.row >= t.rows() || tg.col < 0 || tg.col >= t.cols()) {
      throw Error(ErrorCode::kOutOfFrame, "target cell outside the grid");
    }
    const RotatedBox& b = tg.box;
    t.at(tg.row, tg.col, kProbBlue) = b.cls() == BrickClass::kBlue ? 1.0 : 0.0;
    t.at(tg.row, tg.col, kProbGreen) = b.cls() == BrickClass::kGreen ? 1.0 : 0.0;
    t.at(tg.row, tg.col, kProbBackground) = 0.0;
    t.at(tg.row, tg.col, kOffsetX) = (b.cx() - tg.col * cell) / cell;
    t.at(tg.row, tg.col, kOffsetY) = (b.cy() - tg.row * cell) / cell;
    t.at(tg.row, tg.col, kWidth) = b.w() / cfg.image_w;
    t.at(tg.row, tg.col, kHeight) = b.h() / cfg.image_h;
    t.at(tg.row, tg.col, kTheta) = b.theta() / cfg.theta_max;
  }
  return t;
}

GridTensor encode(const InstanceMask& mask, const EncodingConfig& cfg) {
  const std::vector<CellTarget> targets = assign_targets(mask, cfg);
  return encode_targets(targets, cfg);
}

std::vector<RotatedBox> decode(const GridTensor& tensor, const EncodingConfig& cfg) {
  cfg.validate();
  if (tensor.rows() != cfg.rows() || tensor.cols() != cfg.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "tensor shape does not match the encoding config");
  }
  const double cell = cfg.cell;
  std::vector<RotatedBox> out;
  for (int r = 0; r < tensor.rows(); ++r) {
    for (int c = 0; c < tensor.cols(); ++c) {
      const auto v = tensor.cell(r, c);
      const bool green = v[kProbGreen] > v[kProbBlue];
      const double p = green ? v[kProbGreen] : v[kProbBlue];
      if (!(p > cfg.conf_threshold) || !(p > v[kProbBackground])) continue;
      const double w = v[kWidth] * cfg.image_w;
      const double h = v[kHeight] * cfg.image_h;
      if (!(w > 0.0) || !(h > 0.0)) continue;
      out.emplace_back((c + v[kOffsetX]) * cell, (r + v[kOffsetY]) * cell, w, h, v[kTheta] * cfg.theta_max,
                       green ? BrickClass::kGreen : BrickClass::kBlue, std::clamp(p, 0.0, 1.0));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(std::span<const std::uint8_t> bytes, std::size_t at) {
  return static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8));
}

}  // namespace

std::vector<std::uint8_t> serialize_tensor(const GridTensor& tensor) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + tensor.data().size() * 4);
  put_u16(out, kTensorMagic);
  put_u16(out, static_cast<std::uint16_t>(tensor.rows()));
  put_u16(out, static_cast<std::uint16_t>(tensor.cols()));
  put_u16(out, static_cast<std::uint16_t>(tensor.channels()));
  for (double v : tensor.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
  }
  return out;
}

GridTensor deserialize_tensor(std::span<const std::uint8_t> bytes, const EncodingConfig& cfg) {
  cfg.validate();
  if (bytes.size() < 8) throw Error(ErrorCode::kFormatError, "tensor file shorter than its header");
  if (get_u16(bytes, 0) != kTensorMagic) throw Error(ErrorCode::kFormatError, "bad tensor magic");
  const int rows = get_u16(bytes, 2);
  const int cols = get_u16(bytes, 4);
  const int channels = get_u16(bytes, 6);
  if (rows != cfg.rows() || cols != cfg.cols() || channels != kGridChannels) {
    throw Error(ErrorCode::kFormatError, "tensor shape " + std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                                             std::to_string(channels) + " does not match expected " +
                                             std::to_string(cfg.rows()) + "x" + std::to_string(cfg.cols()) + "x" +
                                             std::to_string(kGridChannels));
  }
  const std::size_t count = static_cast<std::size_t>(rows) * cols * channels;
  if (bytes.size() != 8 + count * 4) throw Error(ErrorCode::kFormatError, "tensor payload size mismatch");
  GridTensor t(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[8 + 4 * i + b]) << (8 * b);
    t.data()[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void write_tensor(const GridTensor& tensor, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

GridTensor read_tensor(const std::filesystem::path& path, const EncodingConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_tensor(bytes, cfg);
}

}  // namespace brickvision
