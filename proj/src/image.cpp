#include "hdrfuse/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdr {

Image::Image(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels),
      data_(height * width * channels, fill) {
  if (channels != 1 && channels != 3) {
    throw ContractError("image channels must be 1 or 3");
  }
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw ContractError("image fill value outside [0,1]");
  }
}

Image::Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (channels != 1 && channels != 3) {
    throw ContractError("image channels must be 1 or 3");
  }
  if (data_.size() != height * width * channels) {
    throw ContractError("image data length does not match height*width*channels");
  }
  for (double s : data_) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ContractError("image sample outside [0,1]");
    }
  }
}

std::vector<double> Image::plane(std::size_t c) const {
  std::vector<double> out(pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = data_[i * channels_ + c];
  }
  return out;
}

void Image::set_plane(std::size_t c, std::span<const double> values) {
  if (values.size() != pixel_count()) {
    throw ContractError("plane size mismatch");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    data_[i * channels_ + c] = values[i];
  }
}

double Image::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

double Image::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }
double Image::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

void Image::clamp01() {
  for (double& s : data_) s = std::clamp(s, 0.0, 1.0);
}

ExposurePair::ExposurePair(Image a, Image b) {
  if (!a.same_shape(b)) {
    throw ContractError("exposure pair images differ in shape");
  }
  if (a.mean() <= b.mean()) {
    under = std::move(a);
    over = std::move(b);
  } else {
    under = std::move(b);
    over = std::move(a);
  }
}

std::vector<unsigned char> quantize8(const Image& img) {
  std::vector<unsigned char> bytes(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const long q = std::lround(src[i] * 255.0);
    bytes[i] = static_cast<unsigned char>(std::clamp(q, 0L, 255L));
  }
  return bytes;
}

Image dequantize8(std::size_t height, std::size_t width, std::size_t channels,
                  std::span<const unsigned char> bytes) {
  std::vector<double> data(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) data[i] = bytes[i] / 255.0;
  return Image(height, width, channels, std::move(data));
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double g = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = std::clamp(g, 0.0, 1.0);
  }
  return out;
}

double dynamic_range(const Image& img) {
  if (img.empty()) {
    throw ContractError("dynamic_range of an empty image");
  }
  const double hi = std::max(img.max(), kDynamicRangeFloor);
  const double lo = std::max(img.min(), kDynamicRangeFloor);
  return std::log10(hi / lo);
}

namespace {

std::vector<std::size_t> anchors_1d(std::size_t extent, std::size_t patch, std::size_t stride) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  for (; pos + patch <= extent; pos += stride) out.push_back(pos);
  if (out.back() + patch < extent) out.push_back(extent - patch);
  return out;
}

std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

}  // namespace

PatchGrid extract_patches(const Image& img, std::size_t patch_size, std::size_t stride) {
  if (stride == 0) throw ContractError("patch stride must be >= 1");
  if (patch_size == 0 || patch_size > img.height() || patch_size > img.width()) {
    throw ContractError("patch size exceeds image dimension");
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  for (std::size_t r : anchors_1d(img.height(), patch_size, stride)) {
    for (std::size_t c : anchors_1d(img.width(), patch_size, stride)) {
      grid.patches.push_back({r, c});
    }
  }
  return grid;
}

Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width) {
  if (row + height > img.height() || col + width > img.width()) {
    throw ContractError("crop window outside image bounds");
  }
  const std::size_t ch = img.channels();
  std::vector<double> data(height * width * ch);
  auto src = img.data();
  for (std::size_t y = 0; y < height; ++y) {
    const auto* first = src.data() + ((row + y) * img.width() + col) * ch;
    std::copy(first, first + width * ch, data.begin() + static_cast<std::ptrdiff_t>(y * width * ch));
  }
  return Image(height, width, ch, std::move(data));
}

Image reflect_pad(const Image& img, std::size_t height, std::size_t width) {
  if (height < img.height() || width < img.width()) {
    throw ContractError("reflect_pad target smaller than image");
  }
  const std::size_t ch = img.channels();
  Image out(height, width, ch);
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y), h);
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = reflect_index(static_cast<std::ptrdiff_t>(x), w);
      for (std::size_t c = 0; c < ch; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

}  // namespace hdr
