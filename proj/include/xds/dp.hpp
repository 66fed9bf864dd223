#pragma once

#include <cstdint>
#include <vector>

#include "xds/costvolume.hpp"
#include "xds/geometry.hpp"

namespace xds {

struct DPParams {
  /// Unary cost of an occluded cell.
  double lambda = 0.7;
  /// Bonus for two adjacent occluded cells.
  double epsilon = 0.1;
  /// Occlusion runs without a homogeneous pair must be monotone in d2.
  bool strict_gc1_runs = true;
  bool subpixel_refine = false;

  void validate() const;
};

/// One state (O, d2, h) per cyclopean sample x2 of an epipolar line.
struct LineSolution {
  int e = 0;
  int nd = 0;
  std::vector<std::uint8_t> occluded;
  std::vector<int> d2;
  std::vector<std::uint8_t> homogeneous;
  std::vector<std::uint8_t> data_mask;
  /// Cyclopean disparity d (not twice-valued); d2 / 2 unless refined.
  std::vector<double> refined_d;
  double cost = 0.0;

  int nx() const { return int(d2.size()); }
  /// Builds a solution from raw states; h, data_mask and refined_d are derived.
  static LineSolution from_states(int e, int nd, std::vector<std::uint8_t> occluded, std::vector<int> d2,
                                  double cost = 0.0);
};

struct CyclopeanSolution {
  EpipolarGeometry geometry;
  std::vector<LineSolution> lines;
};

struct OcclusionRun {
  int start = 0;   ///< first occluded x2
  int length = 0;  ///< number of occluded cells
  int jump = 0;    ///< d2 at the last cell minus d2 at the first
  friend bool operator==(const OcclusionRun&, const OcclusionRun&) = default;
};

struct GcReport {
  bool gc2_ok = true;
  std::vector<OcclusionRun> gc1_violations;
  /// Adjacent occluded pairs without an h flag whose step is not +-1.
  int local_violations = 0;
};

/// Minimum-cost path of states over the slice.  Ties prefer, per step back
/// from the end, O = 0, then the smaller |delta d2|, then the smaller d2.
LineSolution solve_line(const MatchDistanceSlice& slice, const DPParams& params);

/// Flags both cells of every occluded pair whose d2 does not change.
LineSolution detect_homogeneous(LineSolution sol);

GcReport check_gc(const LineSolution& sol);

/// Re-evaluates the path cost over the slice in the solver's summation order.
double path_cost(const MatchDistanceSlice& slice, const LineSolution& sol, const DPParams& params);

/// Exhaustive search over every legal state sequence (nx <= 16, nd <= 5).
LineSolution brute_force_line(const MatchDistanceSlice& slice, const DPParams& params);

/// Parabola fit of fm across d2 - 1, d2, d2 + 1 at data cells.
LineSolution subpixel_refine(const MatchDistanceSlice& slice, LineSolution sol);

/// Solves every line independently; the result does not depend on parallelism.
CyclopeanSolution solve_all(const std::vector<MatchDistanceSlice>& slices, const EpipolarGeometry& geom,
                            const DPParams& params, int parallelism = 1);

}  // namespace xds
