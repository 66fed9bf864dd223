#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xds/errors.hpp"

namespace xds {

/// Dense row-major 2D array.
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * std::size_t(h), fill) {
    if (w < 0 || h < 0) throw DomainError("negative raster dimensions");
  }

  T& operator()(int x, int y) { return data[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
  const T& operator()(int x, int y) const { return data[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <class U>
  bool same_shape(const Raster<U>& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using ImageF = Raster<float>;
using Mask = Raster<std::uint8_t>;

}  // namespace xds
