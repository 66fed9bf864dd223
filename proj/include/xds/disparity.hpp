#pragma once

#include <cmath>
#include <limits>
#include <string_view>

#include "xds/raster.hpp"

namespace xds {

enum class DisparitySource { Dp, Filled, Gt, External };

/// Left-view full disparity in pixels with a validity mask.  Invalid cells
/// hold +inf so they survive a PFM round trip.
struct DisparityMap {
  Raster<float> values;
  Mask valid;
  DisparitySource source = DisparitySource::Dp;

  DisparityMap() = default;
  DisparityMap(int w, int h, DisparitySource src = DisparitySource::Dp)
      : values(w, h, std::numeric_limits<float>::infinity()), valid(w, h, 0), source(src) {}

  int width() const { return values.width; }
  int height() const { return values.height; }
  bool is_valid(int x, int y) const { return valid(x, y) != 0; }
  void set(int x, int y, float v) {
    values(x, y) = v;
    valid(x, y) = 1;
  }
  void invalidate(int x, int y) {
    values(x, y) = std::numeric_limits<float>::infinity();
    valid(x, y) = 0;
  }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid.data) n += v != 0;
    return n;
  }

  /// Finite cells become valid, everything else invalid.
  static DisparityMap from_raster(const Raster<float>& r, DisparitySource src) {
    DisparityMap m(r.width, r.height, src);
    for (std::size_t i = 0; i < r.data.size(); ++i)
      if (std::isfinite(r.data[i])) {
        m.values.data[i] = r.data[i];
        m.valid.data[i] = 1;
      }
    return m;
  }
};

std::string_view to_string(DisparitySource s);

}  // namespace xds
