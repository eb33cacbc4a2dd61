#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdr {

/// Raised for unreadable or unwritable files and malformed image data.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when inputs violate a documented precondition (shape mismatch,
/// empty stacks, uninitialized state).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major H x W x C raster of intensities in [0,1]. C is 1 or 3.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  /// Single channel copy as a contiguous H x W plane.
  std::vector<double> plane(std::size_t c) const;
  void set_plane(std::size_t c, std::span<const double> values);

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  double mean() const;
  double min() const;
  double max() const;

  /// Clamps every sample into [0,1].
  void clamp01();

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

/// Aligned under/over exposures of one static scene. The constructor orders
/// the two inputs so that mean(under) <= mean(over).
struct ExposurePair {
  Image under;
  Image over;

  ExposurePair() = default;
  ExposurePair(Image a, Image b);
};

struct PatchAnchor {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const PatchAnchor&, const PatchAnchor&) = default;
};

struct PatchGrid {
  std::size_t patch_size = 0;
  std::vector<PatchAnchor> patches;
};

Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG (".png") or PPM/PGM (".ppm", ".pgm"); samples are
/// quantized as round(s * 255) clamped to [0,255].
void save_image(const Image& img, const std::filesystem::path& path);

std::vector<unsigned char> quantize8(const Image& img);
Image dequantize8(std::size_t height, std::size_t width, std::size_t channels,
                  std::span<const unsigned char> bytes);

/// BT.601 luma. Single-channel input is returned unchanged.
Image to_grayscale(const Image& img);

/// Smallest intensity considered measurable by dynamic_range (one 8-bit step).
inline constexpr double kDynamicRangeFloor = 1.0 / 255.0;

/// log10(I_max / I_min) with both extremes floored at one 8-bit step.
double dynamic_range(const Image& img);

/// Tiles the image with square patches at multiples of `stride`, adding an
/// edge-flush anchor where the last stride would overshoot.
PatchGrid extract_patches(const Image& img, std::size_t patch_size, std::size_t stride);

Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width);

/// Reflect-pads (mirror without repeating the edge sample) on the bottom and
/// right to the requested size.
Image reflect_pad(const Image& img, std::size_t height, std::size_t width);

/// Rounds `n` up to the next multiple of `m`.
constexpr std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

}  // namespace hdr
