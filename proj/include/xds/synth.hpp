#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "xds/disparity.hpp"
#include "xds/dp.hpp"
#include "xds/geometry.hpp"

namespace xds {

/// Disparity over a surface, in full pixels of the left view:
/// alpha * l + beta * y + gamma (alpha = beta = 0 for fronto-parallel).
struct Plane {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  static Plane fronto(double d) { return {0.0, 0.0, d}; }
  bool is_fronto() const { return alpha == 0.0 && beta == 0.0; }
  double at(double l, double y) const { return alpha * l + beta * y + gamma; }
};

/// Rectangle [x0, x1) x [y0, y1) in left-view pixel coordinates.
struct Layer {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Plane disparity;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  Half max_disparity_c = Half::from_twice(16);
  Plane background = Plane::fronto(0.0);
  /// Back to front.
  std::vector<Layer> layers;
  double dot_density = 0.5;
  std::uint64_t seed = 0;
  /// Gaussian noise in intensity units (images span [0, 1]).
  double noise_sigma = 0.0;

  /// Throws DomainError describing the first violated constraint.
  void validate() const;
  bool integer_grid() const;
  EpipolarGeometry geometry() const;
};

struct GroundTruth {
  /// Cyclopean states per line; refined_d carries the exact disparity.
  CyclopeanSolution cyclopean;
  /// Left-view disparity of the front-most surface, valid everywhere.
  DisparityMap left;
  /// Left pixels without a partner in the right image (and vice versa).
  Mask occluded_left;
  Mask occluded_right;
};

struct SynthScene {
  ImageF left;
  ImageF right;
  GroundTruth gt;
};

SynthScene generate(const SceneSpec& spec);

/// Runs the solver's GC checks on the ground truth; one report per line.
struct GtReport {
  int lines_checked = 0;
  int gc2_failures = 0;
  int gc1_violations = 0;
  int homogeneous_cells = 0;
  bool clean() const { return gc2_failures == 0 && gc1_violations == 0; }
};
GtReport verify_gt(const GroundTruth& gt);

/// Random layered scene with integer disparities, used by the test suites.
SceneSpec random_rds_spec(std::uint64_t seed, int width, int height, int max_full_disparity, int max_layers = 3);

}  // namespace xds
