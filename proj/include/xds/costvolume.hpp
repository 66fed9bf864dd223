#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "xds/features.hpp"
#include "xds/geometry.hpp"

namespace xds {

enum class FmNormalization { PerLine, Global };

/// Feature-match distance over the cyclopean (x2, d2) grid of one epipolar line.
/// fm is stored x-major: fm[x2 * nd + d2].
struct MatchDistanceSlice {
  int e = 0;
  int nx = 0;
  int nd = 0;
  std::vector<float> fm;
  std::vector<std::uint8_t> valid;
  double fm_max_used = 1.0;
  /// Set when the line had no positive similarity and the normaliser fell back to 1.
  bool normalizer_fallback = false;

  MatchDistanceSlice() = default;
  MatchDistanceSlice(int line, int n_x, int n_d);

  float at(int x2, int d2) const { return fm[std::size_t(x2) * std::size_t(nd) + std::size_t(d2)]; }
  float& at(int x2, int d2) { return fm[std::size_t(x2) * std::size_t(nd) + std::size_t(d2)]; }
  bool is_valid(int x2, int d2) const { return valid[std::size_t(x2) * std::size_t(nd) + std::size_t(d2)] != 0; }
  void set_valid(int x2, int d2, bool v) { valid[std::size_t(x2) * std::size_t(nd) + std::size_t(d2)] = v ? 1 : 0; }
};

/// Closed-form cell validity: both implied half-grid samples exist.
inline bool xd_cell_valid(int x2, int d2, int width) { return d2 >= 0 && x2 - d2 >= 0 && x2 + d2 <= 2 * width - 1; }

/// F^L(x + d) . F^R(x - d) on doubled volumes; nullopt when a sample falls outside.
std::optional<double> fms(const FeatureVolume& left, const FeatureVolume& right, int e, int x2, int d2);

/// Same similarity computed from native-width volumes by interpolating the
/// half-pixel samples on the fly.
std::optional<double> fms_native(const FeatureVolume& left, const FeatureVolume& right, int e, int x2, int d2);

/// fm = clamp(1 - FMS / max FMS, 0, 1); invalid cells hold 1.  When
/// normalizer is given it replaces the per-line maximum.
MatchDistanceSlice build_slice(const FeatureVolume& left, const FeatureVolume& right, int e,
                               const EpipolarGeometry& geom, std::optional<double> normalizer = std::nullopt);

/// Slice built directly from native-width volumes.
MatchDistanceSlice build_slice_native(const FeatureVolume& left, const FeatureVolume& right, int e,
                                      const EpipolarGeometry& geom);

/// All lines; Global scope normalises every line by the image-wide max FMS.
std::vector<MatchDistanceSlice> build_slices(const FeatureVolume& left, const FeatureVolume& right,
                                             const EpipolarGeometry& geom, FmNormalization scope,
                                             int parallelism = 1);

enum class SliceFormat { Csv, Pgm };

/// CSV: header "x2,<d2 levels>" then one row per x2.  PGM: rows are d2
/// levels (top row d2 = 0), columns are x2, fm 0 -> black and 1 -> white.
void export_slice(const MatchDistanceSlice& slice, SliceFormat format, const std::filesystem::path& path);

/// Reads the CSV export back (validity is recomputed from the geometry).
MatchDistanceSlice read_slice_csv(const std::filesystem::path& path, int e, int width);

}  // namespace xds
