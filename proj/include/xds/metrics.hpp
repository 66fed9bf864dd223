#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "xds/disparity.hpp"
#include "xds/raster_io.hpp"

namespace xds {

/// Every field is computed over cells valid in both maps.
struct MetricReport {
  double avg_error = 0.0;
  double bad_error = 0.0;
  double tau = 2.0;
  double rms_error = 0.0;
  /// 1 - mean SSIM; empty when the GT range is zero.
  std::optional<double> ssim_error;
  /// 10 log10(range^2 / MSE); +inf for a perfect match, empty when the GT range is zero.
  std::optional<double> psnr_sim;
  /// Mutual information in nats from a 64-bin joint histogram.
  double mutual_info_sim = 0.0;
  std::size_t evaluated_pixels = 0;
};

inline constexpr int kSsimRadius = 3;
inline constexpr double kSsimSigma = 1.5;
inline constexpr int kMutualInfoBins = 64;

MetricReport evaluate(const DisparityMap& est, const DisparityMap& gt, double tau = 2.0);

struct SignedError {
  /// est - gt on jointly valid cells, +inf elsewhere.
  Raster<float> raster;
  double mean_abs = 0.0;
};

SignedError signed_error_map(const DisparityMap& est, const DisparityMap& gt);

/// Negative -> red, positive -> blue, invalid -> white; saturation scales with |e| / max |e|.
Raster<Rgb> render_signed_error(const SignedError& err);

/// a * est + b mapping est's valid [min, max] onto gt's valid [min, max].
DisparityMap affine_normalize_to_gt(const DisparityMap& est, const DisparityMap& gt);

/// disparity = f * B / depth - doffs for one depth; throws on non-positive depth.
double disparity_from_depth(double depth, double focal_px, double baseline, double doffs);

/// disparity = f * B / depth - doffs; non-positive or non-finite depths become invalid.
DisparityMap depth_from_monocular(const Raster<float>& depth, double focal_px, double baseline, double doffs);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
    else comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace xds
