#include "xds/geometry.hpp"

#include <cmath>
#include <string>

#include "xds/errors.hpp"

namespace xds {

Half Half::from_value(double v) {
  if (!std::isfinite(v)) throw DomainError("half-grid value is not finite");
  const double t = 2.0 * v;
  const double r = std::round(t);
  if (r != t) throw DomainError("value " + std::to_string(v) + " is not on the half-pixel grid");
  return Half{static_cast<int>(r)};
}

void EpipolarGeometry::validate() const {
  if (!(focal_length_px > 0.0)) throw DomainError("focal length must be positive");
  if (!(baseline > 0.0)) throw DomainError("baseline must be positive");
  if (width < 2) throw DomainError("width must be at least 2");
  if (height < 1) throw DomainError("height must be at least 1");
  // 0 < d_max <= (N-1)/2, i.e. 0 < 2 d_max <= N - 1 on twice-values.
  if (max_disparity_c.twice <= 0 || max_disparity_c.twice > width - 1)
    throw DomainError("max cyclopean disparity must lie in (0, (width-1)/2]");
  if (!std::isfinite(disparity_offset)) throw DomainError("disparity offset must be finite");
}

namespace {

void check_pixel(const char* name, Half v, int width) {
  if (v.twice < 0 || v.twice > 2 * (width - 1))
    throw DomainError(std::string(name) + " coordinate " + std::to_string(v.value()) + " outside [0, " +
                      std::to_string(width - 1) + "]");
}

}  // namespace

std::pair<Half, Half> lr_to_cyclopean(Half l, Half r, int width) {
  check_pixel("left", l, width);
  check_pixel("right", r, width);
  const int sum = l.twice + r.twice;
  if (sum % 2 != 0) throw DomainError("l and r do not map onto the cyclopean half grid");
  return {Half::from_twice(sum / 2), Half::from_twice((l.twice - r.twice) / 2)};
}

std::pair<Half, Half> cyclopean_to_lr(Half x, Half d, int width) {
  const Half l = Half::from_twice(x.twice + d.twice);
  const Half r = Half::from_twice(x.twice - d.twice);
  check_pixel("left", l, width);
  check_pixel("right", r, width);
  return {l, r};
}

double cyclopean_depth(double d, const EpipolarGeometry& geom) {
  const double denom = 2.0 * d + geom.disparity_offset;
  if (!(denom > 0.0)) throw DomainError("disparity at or beyond infinity");
  return geom.focal_length_px * geom.baseline / denom;
}

EyeDepths lr_depth_bias(double depth_c, double lateral_offset, double baseline) {
  if (!(depth_c > 0.0)) throw DomainError("cyclopean depth must be positive");
  const double half_b = 0.5 * baseline;
  return {std::hypot(depth_c, half_b - lateral_offset), std::hypot(depth_c, half_b + lateral_offset)};
}

}  // namespace xds
