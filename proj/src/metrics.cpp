#include "xds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "xds/errors.hpp"

namespace xds {

namespace {

void check_pair(const DisparityMap& est, const DisparityMap& gt) {
  if (est.width() != gt.width() || est.height() != gt.height()) throw DomainError("dimension mismatch");
}

Mask joint_mask(const DisparityMap& est, const DisparityMap& gt, std::size_t& count) {
  Mask m(est.width(), est.height(), 0);
  count = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data[i] = (est.valid.data[i] && gt.valid.data[i]) ? 1 : 0;
    count += m.data[i];
  }
  if (count == 0) throw DomainError("zero jointly valid pixels");
  return m;
}

// Windowed SSIM with Gaussian weights renormalised over the jointly valid
// cells of each window; raw weighted moments.
double mean_ssim(const DisparityMap& est, const DisparityMap& gt, const Mask& m, double range) {
  const int w = m.width, h = m.height, r = kSsimRadius;
  double kernel[2 * kSsimRadius + 1];
  for (int k = -r; k <= r; ++k) kernel[k + r] = std::exp(-(k * k) / (2.0 * kSsimSigma * kSsimSigma));
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  CompensatedSum total;
  std::size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      double sw = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w || !m(xx, yy)) continue;
          const double wt = kernel[dx + r] * kernel[dy + r];
          const double a = est.values(xx, yy), b = gt.values(xx, yy);
          sw += wt;
          sx += wt * a;
          sy += wt * b;
          sxx += wt * a * a;
          syy += wt * b * b;
          sxy += wt * a * b;
        }
      }
      const double mx = sx / sw, my = sy / sw;
      const double vx = std::max(sxx / sw - mx * mx, 0.0);
      const double vy = std::max(syy / sw - my * my, 0.0);
      const double cxy = sxy / sw - mx * my;
      total.add(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)));
      ++n;
    }
  }
  return total.value() / double(n);
}

}  // namespace

MetricReport evaluate(const DisparityMap& est, const DisparityMap& gt, double tau) {
  check_pair(est, gt);
  std::size_t n = 0;
  const Mask m = joint_mask(est, gt, n);

  MetricReport rep;
  rep.tau = tau;
  rep.evaluated_pixels = n;
  CompensatedSum abs_sum, sq_sum;
  std::size_t bad = 0;
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  double vmin = gmin, vmax = gmax;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m.data[i]) continue;
    const double a = est.values.data[i], b = gt.values.data[i];
    const double e = a - b;
    abs_sum.add(std::abs(e));
    sq_sum.add(e * e);
    bad += std::abs(e) > tau;
    gmin = std::min(gmin, b);
    gmax = std::max(gmax, b);
    vmin = std::min({vmin, a, b});
    vmax = std::max({vmax, a, b});
  }
  rep.avg_error = abs_sum.value() / double(n);
  rep.rms_error = std::sqrt(sq_sum.value() / double(n));
  rep.bad_error = double(bad) / double(n);

  const double range = gmax - gmin;
  if (range > 0.0) {
    const double mse = sq_sum.value() / double(n);
    rep.psnr_sim = mse > 0.0 ? 10.0 * std::log10(range * range / mse) : std::numeric_limits<double>::infinity();
    rep.ssim_error = std::clamp(1.0 - mean_ssim(est, gt, m, range), 0.0, 1.0);
  }

  // Joint histogram over the common value range of both maps.
  const int bins = kMutualInfoBins;
  std::vector<double> joint(std::size_t(bins * bins), 0.0), pa(std::size_t(bins), 0.0), pb(std::size_t(bins), 0.0);
  const double span = vmax - vmin;
  auto bin_of = [&](double v) {
    if (!(span > 0.0)) return 0;
    return std::min(int((v - vmin) / span * bins), bins - 1);
  };
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m.data[i]) continue;
    const int ia = bin_of(est.values.data[i]), ib = bin_of(gt.values.data[i]);
    joint[std::size_t(ia * bins + ib)] += 1.0;
    pa[std::size_t(ia)] += 1.0;
    pb[std::size_t(ib)] += 1.0;
  }
  CompensatedSum mi;
  for (int ia = 0; ia < bins; ++ia)
    for (int ib = 0; ib < bins; ++ib) {
      const double c = joint[std::size_t(ia * bins + ib)];
      if (c == 0.0) continue;
      const double pab = c / double(n);
      mi.add(pab * std::log(pab / ((pa[std::size_t(ia)] / double(n)) * (pb[std::size_t(ib)] / double(n)))));
    }
  rep.mutual_info_sim = mi.value();
  return rep;
}

SignedError signed_error_map(const DisparityMap& est, const DisparityMap& gt) {
  check_pair(est, gt);
  std::size_t n = 0;
  const Mask m = joint_mask(est, gt, n);
  SignedError out;
  out.raster = Raster<float>(est.width(), est.height(), std::numeric_limits<float>::infinity());
  CompensatedSum s;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m.data[i]) continue;
    const double e = double(est.values.data[i]) - double(gt.values.data[i]);
    out.raster.data[i] = static_cast<float>(e);
    s.add(std::abs(e));
  }
  out.mean_abs = s.value() / double(n);
  return out;
}

Raster<Rgb> render_signed_error(const SignedError& err) {
  double peak = 0.0;
  for (float v : err.raster.data)
    if (std::isfinite(v)) peak = std::max(peak, double(std::abs(v)));
  Raster<Rgb> img(err.raster.width, err.raster.height, Rgb{255, 255, 255});
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = err.raster.data[i];
    if (!std::isfinite(v) || peak == 0.0 || v == 0.0) continue;
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(v) / peak)));
    img.data[i] = v < 0 ? Rgb{255, fade, fade} : Rgb{fade, fade, 255};
  }
  return img;
}

DisparityMap affine_normalize_to_gt(const DisparityMap& est, const DisparityMap& gt) {
  check_pair(est, gt);
  auto range_of = [](const DisparityMap& d, const char* what) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < d.valid.size(); ++i)
      if (d.valid.data[i]) {
        lo = std::min(lo, double(d.values.data[i]));
        hi = std::max(hi, double(d.values.data[i]));
      }
    if (!(hi > lo)) throw DomainError(std::string("zero ") + what + " range");
    return std::pair{lo, hi};
  };
  const auto [elo, ehi] = range_of(est, "estimate");
  const auto [glo, ghi] = range_of(gt, "ground-truth");
  const double a = (ghi - glo) / (ehi - elo);
  const double b = glo - a * elo;
  DisparityMap out(est.width(), est.height(), est.source);
  for (std::size_t i = 0; i < est.valid.size(); ++i) {
    if (!est.valid.data[i]) continue;
    const double v = est.values.data[i];
    // Endpoints map exactly; interior values use the affine form.
    double mapped = v == elo ? glo : (v == ehi ? ghi : a * v + b);
    out.values.data[i] = static_cast<float>(mapped);
    out.valid.data[i] = 1;
  }
  return out;
}

double disparity_from_depth(double depth, double focal_px, double baseline, double doffs) {
  if (!std::isfinite(depth) || !(depth > 0.0)) throw DomainError("depth must be positive and finite");
  return focal_px * baseline / depth - doffs;
}

DisparityMap depth_from_monocular(const Raster<float>& depth, double focal_px, double baseline, double doffs) {
  DisparityMap out(depth.width, depth.height, DisparitySource::External);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double z = depth.data[i];
    if (!std::isfinite(z) || !(z > 0.0)) continue;
    out.values.data[i] = static_cast<float>(disparity_from_depth(z, focal_px, baseline, doffs));
    out.valid.data[i] = 1;
  }
  return out;
}

}  // namespace xds
