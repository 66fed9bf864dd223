#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xds/raster.hpp"

namespace xds {

/// Per-pixel feature vectors for one image, stored [height][width_samples][channels].
struct FeatureVolume {
  int height = 0;
  int width_samples = 0;
  int channels = 0;
  bool doubled = false;
  bool normalized = false;
  std::vector<float> data;

  FeatureVolume() = default;
  FeatureVolume(int h, int w, int c, bool is_doubled = false, bool is_normalized = false);

  std::span<float> sample(int y, int i) {
    return {data.data() + index(y, i), std::size_t(channels)};
  }
  std::span<const float> sample(int y, int i) const {
    return {data.data() + index(y, i), std::size_t(channels)};
  }
  /// Width in image pixels (N), regardless of doubling.
  int pixel_width() const { return doubled ? width_samples / 2 : width_samples; }

  friend bool operator==(const FeatureVolume&, const FeatureVolume&) = default;

 private:
  std::size_t index(int y, int i) const {
    return (std::size_t(y) * std::size_t(width_samples) + std::size_t(i)) * std::size_t(channels);
  }
};

/// Scales v to unit L2 norm; a zero vector stays zero (padding).
void normalize_l2(std::span<float> v);

struct CensusOptions {
  int window_radius = 2;
  /// Differences with |neighbour - centre| <= tie_threshold count as ties (0).
  double tie_threshold = 0.1;
};

/// Census signs sign(neighbour - centre) over the (2r+1)^2 - 1 neighbours,
/// followed by the zero-mean unit-variance patch, L2-normalised per pixel.
/// Border pixels sample with clamped coordinates.
FeatureVolume census_patch_features(const ImageF& image, const CensusOptions& opts = {});

/// Resamples onto the half-pixel grid: even samples copy the input, odd
/// samples average their two neighbours (the last one replicates).
FeatureVolume double_width(const FeatureVolume& fv);

// B2FT container: "B2FT", u32 version, u32 height, u32 width_samples,
// u32 channels, u8 doubled, u8 normalized, 6 reserved bytes, then
// little-endian float32 payload, row-major, channel-fastest.
inline constexpr std::uint32_t kB2ftVersion = 1;

void store_feature_volume(const FeatureVolume& fv, const std::filesystem::path& path);
FeatureVolume load_feature_volume(const std::filesystem::path& path);
/// Loads and checks that the volume covers an image of the given size.
FeatureVolume load_feature_volume(const std::filesystem::path& path, int expect_height, int expect_width);

}  // namespace xds
