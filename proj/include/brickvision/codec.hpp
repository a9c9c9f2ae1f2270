#pragma once

// Grid target encoding: the image is tiled into square cells and every cell
// carries [p_blue, p_green, p_background, x_off, y_off, w, h, theta], each
// scaled into [0, 1].

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

#include "brickvision/geom.hpp"

namespace brickvision {

struct EncodingConfig {
  int image_w = 640;
  int image_h = 480;
  int cell = 16;
  double theta_max = std::numbers::pi;
  double conf_threshold = 0.5;

  int rows() const { return image_h / cell; }
  int cols() const { return image_w / cell; }
  /// Throws InvalidArgument unless the image tiles exactly into cells.
  void validate() const;
};

enum Channel : int {
  kProbBlue = 0,
  kProbGreen = 1,
  kProbBackground = 2,
  kOffsetX = 3,
  kOffsetY = 4,
  kWidth = 5,
  kHeight = 6,
  kTheta = 7,
};

inline constexpr int kGridChannels = 8;

/// Dense rows x cols x 8 tensor. Values are kept in double precision so that
/// encode/decode is exact; the on-disk format is float32.
class GridTensor {
 public:
  GridTensor(int rows, int cols);
  /// All-background tensor shaped for `cfg`.
  static GridTensor background(const EncodingConfig& cfg);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return kGridChannels; }

  double& at(int row, int col, int channel) { return data_[index(row, col, channel)]; }
  double at(int row, int col, int channel) const { return data_[index(row, col, channel)]; }
  std::array<double, kGridChannels> cell(int row, int col) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// Class probabilities sum to 1 and all channels lie in [0, 1].
  bool valid(double tol = 1e-6) const;

  friend bool operator==(const GridTensor&, const GridTensor&) = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * cols_ + col) * kGridChannels + channel;
  }

  int rows_, cols_;
  std::vector<double> data_;
};

/// One instance assigned to a cell.
struct CellTarget {
  int row;
  int col;
  std::uint16_t instance;
  RotatedBox box;
  /// Share of the instance's pixels that fall inside the cell.
  double mask_fraction;
};

/// Cell assignment for every instance of `mask`. When several box centers
/// share a cell, the instance with the larger mask fraction inside that cell
/// wins (ties go to the lower id); losers get no target at all.
/// Throws OutOfFrame when a box center falls outside the image.
std::vector<CellTarget> assign_targets(const InstanceMask& mask, const EncodingConfig& cfg);

GridTensor encode(const InstanceMask& mask, const EncodingConfig& cfg = {});
GridTensor encode_targets(std::span<const CellTarget> targets, const EncodingConfig& cfg = {});

/// Boxes for every cell whose best class probability exceeds both the
/// confidence threshold and the background probability. Row-major order.
std::vector<RotatedBox> decode(const GridTensor& tensor, const EncodingConfig& cfg = {});

/// Little-endian header {0x5242, rows, cols, channels} as uint16 followed by
/// row-major float32 values.
inline constexpr std::uint16_t kTensorMagic = 0x5242;

std::vector<std::uint8_t> serialize_tensor(const GridTensor& tensor);
/// Throws FormatError on bad magic, truncation or a shape that differs from
/// `cfg`.
GridTensor deserialize_tensor(std::span<const std::uint8_t> bytes, const EncodingConfig& cfg = {});

void write_tensor(const GridTensor& tensor, const std::filesystem::path& path);
GridTensor read_tensor(const std::filesystem::path& path, const EncodingConfig& cfg = {});

}  // namespace brickvision
