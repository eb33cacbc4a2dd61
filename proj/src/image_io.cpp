#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

#include "hdrfuse/image.hpp"

namespace hdr {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError("invalid PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw IoError("zero-dimension PNG " + path.string());
  }
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    throw IoError("failed to decode PNG " + path.string() + ": " + image.message);
  }
  return dequantize8(image.height, image.width, channels, pixels);
}

// Skips whitespace and '#' comments between PNM header tokens.
std::size_t pnm_token(const std::vector<unsigned char>& bytes, std::size_t& pos,
                      const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    ++pos;
    ++digits;
  }
  if (digits == 0) throw IoError("malformed PNM header in " + path.string());
  return value;
}

Image decode_pnm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  const std::size_t width = pnm_token(bytes, pos, path);
  const std::size_t height = pnm_token(bytes, pos, path);
  const std::size_t maxval = pnm_token(bytes, pos, path);
  if (maxval != 255) throw IoError("only maxval 255 PNM supported: " + path.string());
  if (width == 0 || height == 0) throw IoError("zero-dimension PNM " + path.string());
  ++pos;  // single whitespace before raster
  const std::size_t count = width * height * channels;
  if (bytes.size() < pos + count) throw IoError("truncated PNM raster in " + path.string());
  return dequantize8(height, width, channels,
                     std::span<const unsigned char>(bytes.data() + pos, count));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5')) {
    return decode_pnm(bytes, path);
  }
  throw IoError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw ContractError("cannot save an empty image");
  const auto bytes = quantize8(img);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
      throw IoError("failed to write " + path.string() + ": " + image.message);
    }
    return;
  }
  if (ext == ".ppm" || ext == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (img.channels() == 3 ? "P6" : "P5") << '\n'
        << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
    return;
  }
  throw IoError("unsupported output extension: " + path.string());
}

}  // namespace hdr
