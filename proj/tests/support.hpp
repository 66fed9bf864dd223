#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "xds/costvolume.hpp"

namespace xds::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("xds_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Slice over an N-pixel line with random fm on valid cells.
inline MatchDistanceSlice random_slice(std::mt19937_64& rng, int width, int nd) {
  MatchDistanceSlice s(0, 2 * width, nd);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int x2 = 0; x2 < s.nx; ++x2)
    for (int d2 = 0; d2 < nd; ++d2)
      if (xd_cell_valid(x2, d2, width)) {
        s.set_valid(x2, d2, true);
        s.at(x2, d2) = u(rng);
      }
  return s;
}

}  // namespace xds::test
