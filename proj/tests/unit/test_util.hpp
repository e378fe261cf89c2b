#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "nslf/core/image.hpp"
#include "nslf/core/vec.hpp"

namespace nslf::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("nslf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
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

inline Vec3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3d v{n(rng), n(rng), n(rng)};
    const double l = norm(v);
    if (l > 1e-9) return v / l;
  }
}

inline Image random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.f, 1.f);
  Image img(w, h);
  for (auto& v : img.rgb) v = u(rng);
  return img;
}

}  // namespace nslf::test
