#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hdrfuse/image.hpp"

namespace hdr::test {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Image random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c, double lo = 0.0,
                          double hi = 1.0) {
  Image img(h, w, c);
  for (double& v : img.storage()) v = lo + (hi - lo) * uniform01(rng);
  return img;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hdrfuse_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hdr::test
