#include "xds/fill.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <string>

#include "xds/errors.hpp"

namespace xds {

MonocularPrior MonocularPrior::from_raster(const Raster<float>& raw) {
  if (raw.empty()) throw DomainError("empty monocular prior");
  float lo = std::numeric_limits<float>::infinity(), hi = -lo;
  for (float v : raw.data) {
    if (!std::isfinite(v)) throw DomainError("monocular prior holds non-finite values");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw DomainError("degenerate prior: constant raster");
  MonocularPrior p;
  p.values = Raster<float>(raw.width, raw.height);
  const double span = double(hi) - double(lo);
  for (std::size_t i = 0; i < raw.size(); ++i)
    p.values.data[i] = static_cast<float>(std::clamp((double(raw.data[i]) - lo) / span, 0.0, 1.0));
  return p;
}

DisparityMap project_to_left(const CyclopeanSolution& sol) {
  const auto& g = sol.geometry;
  DisparityMap out(g.width, g.height, DisparitySource::Dp);
  for (const auto& line : sol.lines) {
    for (int x2 = 0; x2 < line.nx(); ++x2) {
      const auto i = std::size_t(x2);
      if (!line.data_mask[i]) continue;
      const int l2 = x2 + line.d2[i];
      if (l2 % 2 != 0) continue;
      const int l = l2 / 2;
      if (l < 0 || l >= g.width) continue;
      const float v = static_cast<float>(2.0 * line.refined_d[i]);
      if (!out.is_valid(l, line.e) || v > out.values(l, line.e)) out.set(l, line.e, v);
    }
  }
  return out;
}

AffineFit affine_align(const MonocularPrior& prior, const DisparityMap& dp) {
  if (!prior.values.same_shape(dp.width(), dp.height())) throw DomainError("prior and disparity differ in size");
  std::size_t n = 0;
  double mp = 0.0, md = 0.0;
  for (std::size_t i = 0; i < dp.valid.size(); ++i) {
    if (!dp.valid.data[i]) continue;
    ++n;
    mp += prior.values.data[i];
    md += dp.values.data[i];
  }
  if (n < 2) throw DomainError("insufficient valid cells for affine alignment");
  mp /= double(n);
  md /= double(n);
  double spp = 0.0, spd = 0.0;
  for (std::size_t i = 0; i < dp.valid.size(); ++i) {
    if (!dp.valid.data[i]) continue;
    const double p = prior.values.data[i] - mp;
    spp += p * p;
    spd += p * (dp.values.data[i] - md);
  }
  if (spp <= 1e-12 * double(n)) throw DomainError("degenerate prior");
  const double a = spd / spp;
  return {a, md - a * mp};
}

namespace {

constexpr std::array<std::array<int, 2>, 4> kNeighbours = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

// Returns false when CG stopped before reaching the tolerance.
bool solve_region(const std::vector<int>& cells, const MonocularPrior& prior, const DisparityMap& dp,
                  const AffineFit& fit, DisparityMap& out) {
  const int w = dp.width(), h = dp.height();
  const int n = int(cells.size());
  std::vector<int> local(std::size_t(w) * std::size_t(h), -1);
  for (int k = 0; k < n; ++k) local[std::size_t(cells[std::size_t(k)])] = k;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(n) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n), guess(n);
  const auto& g = prior.values.data;
  for (int k = 0; k < n; ++k) {
    const int p = cells[std::size_t(k)];
    const int px = p % w, py = p / w;
    const double affine_p = fit.a * g[std::size_t(p)] + fit.b;
    guess[k] = affine_p;
    double diag = 0.0;
    for (const auto& [dx, dy] : kNeighbours) {
      const int qx = px + dx, qy = py + dy;
      diag += 1.0;
      if (qx < 0 || qy < 0 || qx >= w || qy >= h) {
        rhs[k] += affine_p;
        continue;
      }
      const int q = qy * w + qx;
      const double target = fit.a * (double(g[std::size_t(p)]) - double(g[std::size_t(q)]));
      if (dp.valid.data[std::size_t(q)]) {
        rhs[k] += double(dp.values.data[std::size_t(q)]) + target;
      } else {
        trip.emplace_back(k, local[std::size_t(q)], -1.0);
        rhs[k] += target;
      }
    }
    trip.emplace_back(k, k, diag);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-6);
  cg.setMaxIterations(10 * n);
  cg.compute(A);
  const Eigen::VectorXd u = cg.solveWithGuess(rhs, guess);
  for (int k = 0; k < n; ++k) {
    const int p = cells[std::size_t(k)];
    out.set(p % w, p / w, static_cast<float>(u[k]));
  }
  return cg.info() == Eigen::Success;
}

}  // namespace

FillResult fill_gaps(const MonocularPrior& prior, const DisparityMap& dp, FillMode mode) {
  if (!prior.values.same_shape(dp.width(), dp.height())) throw DomainError("prior and disparity differ in size");
  FillResult res;
  res.map = dp;
  res.map.source = DisparitySource::Filled;
  if (dp.valid_count() == dp.valid.size()) return res;

  res.fit = affine_align(prior, dp);
  const int w = dp.width(), h = dp.height();

  if (mode == FillMode::Affine) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (!dp.is_valid(x, y)) res.map.set(x, y, static_cast<float>(res.fit.a * prior.values(x, y) + res.fit.b));
    return res;
  }

  std::vector<std::uint8_t> seen(std::size_t(w) * std::size_t(h), 0);
  std::vector<int> stack, cells;
  for (int start = 0; start < w * h; ++start) {
    if (dp.valid.data[std::size_t(start)] || seen[std::size_t(start)]) continue;
    cells.clear();
    stack.assign(1, start);
    seen[std::size_t(start)] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      cells.push_back(p);
      for (const auto& [dx, dy] : kNeighbours) {
        const int qx = p % w + dx, qy = p / w + dy;
        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
        const int q = qy * w + qx;
        if (dp.valid.data[std::size_t(q)] || seen[std::size_t(q)]) continue;
        seen[std::size_t(q)] = 1;
        stack.push_back(q);
      }
    }
    std::sort(cells.begin(), cells.end());
    ++res.regions;
    if (!solve_region(cells, prior, dp, res.fit, res.map)) res.converged = false;
  }
  return res;
}

}  // namespace xds
