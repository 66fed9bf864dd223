#include "xds/dp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "xds/errors.hpp"
#include "xds/parallel.hpp"

namespace xds {

void DPParams::validate() const {
  if (!std::isfinite(lambda) || !std::isfinite(epsilon)) throw DomainError("lambda and epsilon must be finite");
  if (lambda < 0.0 || epsilon < 0.0) throw DomainError("lambda and epsilon must be non-negative");
  if (!(epsilon < lambda)) throw DomainError("epsilon must be smaller than lambda");
}

LineSolution LineSolution::from_states(int e, int nd, std::vector<std::uint8_t> occluded, std::vector<int> d2,
                                       double cost) {
  if (occluded.size() != d2.size()) throw DomainError("state vectors differ in length");
  LineSolution s;
  s.e = e;
  s.nd = nd;
  s.occluded = std::move(occluded);
  s.d2 = std::move(d2);
  s.cost = cost;
  s.homogeneous.assign(s.d2.size(), 0);
  s.data_mask.assign(s.d2.size(), 0);
  s.refined_d.assign(s.d2.size(), 0.0);
  for (std::size_t i = 0; i < s.d2.size(); ++i) s.refined_d[i] = 0.5 * s.d2[i];
  return detect_homogeneous(std::move(s));
}

namespace {

// Occlusion-run tags.  V: visible.  S: first cell of a run.  L/R: every step
// inside the run so far was +1/-1.  P: mixed steps, no homogeneous pair yet
// (cannot end against a visible cell).  H: the run holds a homogeneous pair.
// The non-strict mode only uses V and H.
enum Tag : int { kV = 0, kS, kL, kR, kP, kH, kTagCount };

int initial_tag(bool strict, bool occluded) {
  if (!occluded) return kV;
  return strict ? kS : kH;
}

int next_tag(bool strict, int prev, bool occluded, int delta) {
  if (!strict) return occluded ? kH : kV;
  if (!occluded) return prev == kP ? -1 : kV;
  switch (prev) {
    case kV:
      return kS;
    case kS:
      return delta > 0 ? kL : (delta < 0 ? kR : kH);
    case kL:
      return delta > 0 ? kL : (delta < 0 ? kP : kH);
    case kR:
      return delta < 0 ? kR : (delta > 0 ? kP : kH);
    case kP:
      return delta == 0 ? kH : kP;
    case kH:
      return kH;
  }
  return -1;
}

bool terminal_ok(bool strict, int tag) { return !(strict && tag == kP); }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

LineSolution solve_line(const MatchDistanceSlice& slice, const DPParams& params) {
  params.validate();
  const int nx = slice.nx, nd = slice.nd;
  if (nd <= 0) throw DomainError("slice has no disparity levels");
  if (nx <= 0) throw DomainError("slice has no x samples");
  bool any_valid = false;
  for (auto v : slice.valid) any_valid = any_valid || v;
  if (!any_valid) throw DomainError("epipolar line " + std::to_string(slice.e) + " has no valid cell");

  const bool strict = params.strict_gc1_runs;
  const int ns = kTagCount * nd;
  auto state = [nd](int tag, int d) { return tag * nd + d; };

  std::vector<double> reach(std::size_t(nx) * std::size_t(ns), kInf);
  std::vector<int> back(std::size_t(nx) * std::size_t(ns), -1);
  auto R = [&](int x2, int s) -> double& { return reach[std::size_t(x2) * std::size_t(ns) + std::size_t(s)]; };
  auto B = [&](int x2, int s) -> int& { return back[std::size_t(x2) * std::size_t(ns) + std::size_t(s)]; };

  for (int d = 0; d < nd; ++d) {
    if (slice.is_valid(0, d)) R(0, state(initial_tag(strict, false), d)) = double(slice.at(0, d));
    R(0, state(initial_tag(strict, true), d)) = params.lambda;
  }

  // Predecessor preference: visible first, then occluded tags with the
  // homogeneous one first so flat runs win exact ties.
  static constexpr std::array<int, 5> kOccludedTags = {kH, kS, kL, kR, kP};

  for (int x2 = 1; x2 < nx; ++x2) {
    for (int t = 0; t < kTagCount; ++t) {
      const bool occ = t != kV;
      for (int d = 0; d < nd; ++d) {
        if (!occ && !slice.is_valid(x2, d)) continue;
        const double unary = occ ? params.lambda : double(slice.at(x2, d));
        double best = kInf;
        int best_prev = -1;
        auto consider = [&](int tp, int dp) {
          if (dp < 0 || dp >= nd) return;
          const double rp = R(x2 - 1, state(tp, dp));
          if (rp == kInf) return;
          if (next_tag(strict, tp, occ, d - dp) != t) return;
          const double bonus = (tp != kV && occ) ? params.epsilon : 0.0;
          const double cand = (rp + unary) - bonus;
          if (cand < best) {
            best = cand;
            best_prev = state(tp, dp);
          }
        };
        for (int dp : {d, d - 1, d + 1}) consider(kV, dp);
        for (int dp : {d, d - 1, d + 1})
          for (int tp : kOccludedTags) consider(tp, dp);
        if (best_prev >= 0) {
          R(x2, state(t, d)) = best;
          B(x2, state(t, d)) = best_prev;
        }
      }
    }
  }

  double best = kInf;
  int best_state = -1;
  for (int d = 0; d < nd; ++d) {
    const double v = R(nx - 1, state(kV, d));
    if (v < best) best = v, best_state = state(kV, d);
  }
  for (int d = 0; d < nd; ++d)
    for (int t : kOccludedTags) {
      if (!terminal_ok(strict, t)) continue;
      const double v = R(nx - 1, state(t, d));
      if (v < best) best = v, best_state = state(t, d);
    }
  if (best_state < 0) throw DomainError("no feasible path on line " + std::to_string(slice.e));

  std::vector<std::uint8_t> occ(std::size_t(nx), 0);
  std::vector<int> d2(std::size_t(nx), 0);
  int s = best_state;
  for (int x2 = nx - 1; x2 >= 0; --x2) {
    occ[std::size_t(x2)] = (s / nd) != kV ? 1 : 0;
    d2[std::size_t(x2)] = s % nd;
    s = B(x2, s);
  }
  LineSolution sol = LineSolution::from_states(slice.e, nd, std::move(occ), std::move(d2), best);
  if (params.subpixel_refine) sol = subpixel_refine(slice, std::move(sol));
  return sol;
}

LineSolution detect_homogeneous(LineSolution sol) {
  const int nx = sol.nx();
  sol.homogeneous.assign(std::size_t(nx), 0);
  for (int x2 = 1; x2 < nx; ++x2) {
    const auto i = std::size_t(x2);
    if (sol.occluded[i] && sol.occluded[i - 1] && sol.d2[i] == sol.d2[i - 1]) {
      sol.homogeneous[i] = 1;
      sol.homogeneous[i - 1] = 1;
    }
  }
  sol.data_mask.assign(std::size_t(nx), 0);
  for (std::size_t i = 0; i < std::size_t(nx); ++i) sol.data_mask[i] = (!sol.occluded[i] && !sol.homogeneous[i]) ? 1 : 0;
  return sol;
}

GcReport check_gc(const LineSolution& sol) {
  GcReport rep;
  const auto n = sol.d2.size();
  rep.gc2_ok = sol.occluded.size() == n && sol.homogeneous.size() == n && sol.data_mask.size() == n;
  if (!rep.gc2_ok) return rep;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.d2[i] < 0 || (sol.nd > 0 && sol.d2[i] >= sol.nd)) rep.gc2_ok = false;
    if (sol.homogeneous[i] && !sol.occluded[i]) rep.gc2_ok = false;
  }

  std::size_t i = 0;
  while (i < n) {
    if (!sol.occluded[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool has_h = false;
    for (; j < n && sol.occluded[j]; ++j) has_h = has_h || sol.homogeneous[j];
    const int length = int(j - i);
    const int jump = sol.d2[j - 1] - sol.d2[i];
    if (!has_h && std::abs(jump) != length - 1) rep.gc1_violations.push_back({int(i), length, jump});
    i = j;
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (sol.occluded[k] && sol.occluded[k - 1] && !sol.homogeneous[k] && !sol.homogeneous[k - 1] &&
        std::abs(sol.d2[k] - sol.d2[k - 1]) != 1)
      ++rep.local_violations;
  }
  return rep;
}

double path_cost(const MatchDistanceSlice& slice, const LineSolution& sol, const DPParams& params) {
  double c = 0.0;
  for (int x2 = 0; x2 < sol.nx(); ++x2) {
    const auto i = std::size_t(x2);
    const double unary = sol.occluded[i] ? params.lambda : double(slice.at(x2, sol.d2[i]));
    const double bonus = (x2 > 0 && sol.occluded[i] && sol.occluded[i - 1]) ? params.epsilon : 0.0;
    c = x2 == 0 ? unary : (c + unary) - bonus;
  }
  return c;
}

LineSolution subpixel_refine(const MatchDistanceSlice& slice, LineSolution sol) {
  for (int x2 = 0; x2 < sol.nx(); ++x2) {
    const auto i = std::size_t(x2);
    const int d = sol.d2[i];
    sol.refined_d[i] = 0.5 * d;
    if (!sol.data_mask[i] || d <= 0 || d >= slice.nd - 1) continue;
    if (!slice.is_valid(x2, d - 1) || !slice.is_valid(x2, d + 1)) continue;
    const double fm_lo = slice.at(x2, d - 1), fm_mid = slice.at(x2, d), fm_hi = slice.at(x2, d + 1);
    const double curvature = fm_lo - 2.0 * fm_mid + fm_hi;
    if (!(curvature > 0.0)) continue;
    const double offset = 0.5 * (fm_lo - fm_hi) / (2.0 * curvature);
    sol.refined_d[i] = 0.5 * d + std::clamp(offset, -0.5, 0.5);
  }
  return sol;
}

CyclopeanSolution solve_all(const std::vector<MatchDistanceSlice>& slices, const EpipolarGeometry& geom,
                            const DPParams& params, int parallelism) {
  geom.validate();
  params.validate();
  if (int(slices.size()) != geom.height)
    throw DomainError("expected " + std::to_string(geom.height) + " slices, got " + std::to_string(slices.size()));
  CyclopeanSolution out;
  out.geometry = geom;
  out.lines.resize(slices.size());
  parallel_for(geom.height, parallelism, [&](int e) {
    const auto& s = slices[std::size_t(e)];
    try {
      if (s.nx != geom.nx() || s.nd != geom.nd()) throw DomainError("slice shape does not match the geometry");
      out.lines[std::size_t(e)] = solve_line(s, params);
      out.lines[std::size_t(e)].e = e;
    } catch (const Error& err) {
      throw DomainError("line " + std::to_string(e) + ": " + err.what());
    }
  });
  return out;
}

}  // namespace xds
