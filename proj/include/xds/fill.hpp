#pragma once

#include "xds/disparity.hpp"
#include "xds/dp.hpp"

namespace xds {

/// Relative inverse depth in the left view, min-max normalised to [0, 1].
struct MonocularPrior {
  Raster<float> values;

  /// Normalises any finite raster to [0, 1]; throws on non-finite input or a
  /// constant raster.
  static MonocularPrior from_raster(const Raster<float>& raw);
};

/// Writes each data cell of the cyclopean solution at its left pixel
/// l = (x2 + d2) / 2 when l is integral.  Collisions keep the larger disparity.
DisparityMap project_to_left(const CyclopeanSolution& sol);

struct AffineFit {
  double a = 1.0;
  double b = 0.0;
};

/// Least-squares (a, b) minimising sum over valid cells of (a * prior + b - dp)^2.
AffineFit affine_align(const MonocularPrior& prior, const DisparityMap& dp);

enum class FillMode { Affine, Poisson };

struct FillResult {
  DisparityMap map;
  AffineFit fit;
  bool converged = true;
  int regions = 0;
};

/// Completes invalid cells.  Affine: a * prior + b.  Poisson: per 4-connected
/// gap, least squares on gradients matching a * grad(prior) with the valid
/// neighbours as Dirichlet boundary; gap cells on the image border are also
/// tied to the affine fill.  Valid cells pass through untouched.
FillResult fill_gaps(const MonocularPrior& prior, const DisparityMap& dp, FillMode mode);

}  // namespace xds
