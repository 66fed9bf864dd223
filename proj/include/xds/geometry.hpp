#pragma once

// Coordinate algebra between the left/right pixel systems and the cyclopean
// (x, d) system.  Half-grid quantities are carried as integer twice-values so
// that every conversion is exact.

#include <utility>

namespace xds {

/// A value on the half-pixel grid {..., -1/2, 0, 1/2, 1, ...} stored as 2*value.
struct Half {
  int twice = 0;

  static constexpr Half from_twice(int t) { return Half{t}; }
  /// Throws DomainError unless v is an exact multiple of 1/2.
  static Half from_value(double v);
  constexpr double value() const { return 0.5 * twice; }

  friend constexpr bool operator==(Half, Half) = default;
};

struct EpipolarGeometry {
  double focal_length_px = 1.0;
  double baseline = 1.0;
  int width = 2;
  int height = 1;
  /// Cap on the cyclopean disparity d, so the full-disparity cap is 2 * max_disparity_c.
  Half max_disparity_c = Half::from_twice(1);
  double disparity_offset = 0.0;

  /// Throws DomainError naming the first violated invariant.
  void validate() const;
  /// Number of x samples on the cyclopean half grid (2N).
  int nx() const { return 2 * width; }
  /// Number of disparity levels d2 = 0..2*max_disparity_c.
  int nd() const { return max_disparity_c.twice + 1; }
};

struct CyclopeanCoord {
  int e = 0;
  Half x;
  Half d;

  friend constexpr bool operator==(const CyclopeanCoord&, const CyclopeanCoord&) = default;
};

/// x = (l + r) / 2, d = (l - r) / 2.  Both l and r must lie in [0, width - 1]
/// and share parity on the half grid.
std::pair<Half, Half> lr_to_cyclopean(Half l, Half r, int width);

/// l = x + d, r = x - d.
std::pair<Half, Half> cyclopean_to_lr(Half x, Half d, int width);

/// depth = f * B / (2 d + doffs).
double cyclopean_depth(double d, const EpipolarGeometry& geom);

struct EyeDepths {
  double left = 0.0;
  double right = 0.0;
};

/// Distances from the left and right optical centres to a point at cyclopean
/// depth depth_c whose orthogonal offset from the cyclopean axis is
/// lateral_offset (world units).
EyeDepths lr_depth_bias(double depth_c, double lateral_offset, double baseline);

}  // namespace xds
