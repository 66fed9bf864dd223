// Exhaustive reference for solve_line.  It shares no code with the dynamic
// program: legality is judged on whole state sequences and the winner is the
// reverse-lexicographic minimum among equal-cost sequences.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>
#include <string>
#include <tuple>

#include "xds/dp.hpp"
#include "xds/errors.hpp"

namespace xds {

namespace {

struct Search {
  const MatchDistanceSlice& slice;
  const DPParams& params;
  std::vector<std::uint8_t> occ;
  std::vector<int> d2;
  std::vector<double> tail_bound;  // lower bound on the cost of cells i..nx-1
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> best_occ;
  std::vector<int> best_d2;
};

bool legal(const std::vector<std::uint8_t>& occ, const std::vector<int>& d2, bool strict) {
  if (!strict) return true;
  const std::size_t n = occ.size();
  std::size_t i = 0;
  while (i < n) {
    if (!occ[i]) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    bool flat_pair = false;
    while (j < n && occ[j]) {
      if (d2[j] == d2[j - 1]) flat_pair = true;
      ++j;
    }
    if (!flat_pair && std::abs(d2[j - 1] - d2[i]) != int(j - i) - 1) return false;
    i = j;
  }
  return true;
}

// Tag numbering mirrors the preference order used for tie-breaking:
// visible, homogeneous, run start, rising, falling, mixed.
std::vector<int> run_tags(const std::vector<std::uint8_t>& occ, const std::vector<int>& d2, bool strict) {
  const std::size_t n = occ.size();
  std::vector<int> tags(n, 0);
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!occ[i]) continue;
    if (!strict) {
      tags[i] = 1;
      continue;
    }
    if (i == 0 || !occ[i - 1]) start = i;
    bool rising = true, falling = true, flat = false;
    for (std::size_t k = start + 1; k <= i; ++k) {
      const int step = d2[k] - d2[k - 1];
      rising = rising && step == 1;
      falling = falling && step == -1;
      flat = flat || step == 0;
    }
    if (i == start) tags[i] = 2;
    else if (flat) tags[i] = 1;
    else if (rising) tags[i] = 3;
    else if (falling) tags[i] = 4;
    else tags[i] = 5;
  }
  return tags;
}

// True when sequence a precedes b, comparing positions from the last one back.
bool precedes(const std::vector<std::uint8_t>& oa, const std::vector<int>& da, const std::vector<std::uint8_t>& ob,
              const std::vector<int>& db, bool strict) {
  const auto ta = run_tags(oa, da, strict), tb = run_tags(ob, db, strict);
  const std::size_t n = oa.size();
  for (std::size_t k = n; k-- > 0;) {
    const int sa = k + 1 < n ? std::abs(da[k + 1] - da[k]) : 0;
    const int sb = k + 1 < n ? std::abs(db[k + 1] - db[k]) : 0;
    const auto ka = std::make_tuple(oa[k], sa, da[k], ta[k]);
    const auto kb = std::make_tuple(ob[k], sb, db[k], tb[k]);
    if (ka != kb) return ka < kb;
  }
  return false;
}

void dfs(Search& s, int i, double cost) {
  const int nx = s.slice.nx;
  constexpr double kSlack = 1e-9;
  if (i == nx) {
    if (!legal(s.occ, s.d2, s.params.strict_gc1_runs)) return;
    if (cost < s.best || (cost == s.best && precedes(s.occ, s.d2, s.best_occ, s.best_d2, s.params.strict_gc1_runs))) {
      s.best = cost;
      s.best_occ = s.occ;
      s.best_d2 = s.d2;
    }
    return;
  }
  if (cost + s.tail_bound[std::size_t(i)] > s.best + kSlack) return;
  for (int o = 0; o <= 1; ++o) {
    for (int d = 0; d < s.slice.nd; ++d) {
      if (i > 0 && std::abs(d - s.d2[std::size_t(i) - 1]) > 1) continue;
      if (o == 0 && !s.slice.is_valid(i, d)) continue;
      const double unary = o ? s.params.lambda : double(s.slice.at(i, d));
      const double bonus = (i > 0 && o && s.occ[std::size_t(i) - 1]) ? s.params.epsilon : 0.0;
      s.occ[std::size_t(i)] = std::uint8_t(o);
      s.d2[std::size_t(i)] = d;
      dfs(s, i + 1, i == 0 ? unary : (cost + unary) - bonus);
    }
  }
}

}  // namespace

LineSolution brute_force_line(const MatchDistanceSlice& slice, const DPParams& params) {
  params.validate();
  if (slice.nd <= 0 || slice.nx <= 0) throw DomainError("empty slice");
  if (slice.nx > 16 || slice.nd > 5)
    throw DomainError("instance too large for exhaustive search (nx <= 16, nd <= 5)");
  if (std::none_of(slice.valid.begin(), slice.valid.end(), [](auto v) { return v != 0; }))
    throw DomainError("epipolar line " + std::to_string(slice.e) + " has no valid cell");

  Search s{slice, params, {}, {}, {}, std::numeric_limits<double>::infinity(), {}, {}};
  s.occ.assign(std::size_t(slice.nx), 0);
  s.d2.assign(std::size_t(slice.nx), 0);
  s.tail_bound.assign(std::size_t(slice.nx) + 1, 0.0);
  for (int i = slice.nx - 1; i >= 0; --i) {
    double cell = params.lambda - params.epsilon;
    for (int d = 0; d < slice.nd; ++d)
      if (slice.is_valid(i, d)) cell = std::min(cell, double(slice.at(i, d)));
    s.tail_bound[std::size_t(i)] = s.tail_bound[std::size_t(i) + 1] + std::max(cell, 0.0);
  }
  dfs(s, 0, 0.0);
  return LineSolution::from_states(slice.e, slice.nd, s.best_occ, s.best_d2, s.best);
}

}  // namespace xds
