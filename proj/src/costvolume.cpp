#include "xds/costvolume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "xds/errors.hpp"
#include "xds/parallel.hpp"

namespace xds {

MatchDistanceSlice::MatchDistanceSlice(int line, int n_x, int n_d)
    : e(line), nx(n_x), nd(n_d), fm(std::size_t(n_x) * std::size_t(n_d), 1.0f),
      valid(std::size_t(n_x) * std::size_t(n_d), 0) {}

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += double(a[c]) * double(b[c]);
  return s;
}

void check_pair(const FeatureVolume& left, const FeatureVolume& right, bool want_doubled) {
  if (left.doubled != want_doubled || right.doubled != want_doubled)
    throw UsageError(want_doubled ? "cost volume expects width-doubled features"
                                  : "native sampling expects un-doubled features");
  if (left.height != right.height || left.width_samples != right.width_samples || left.channels != right.channels)
    throw DomainError("left and right feature volumes differ in shape");
}

// Half-grid sample of a native volume, interpolated exactly as double_width does.
std::vector<float> half_sample(const FeatureVolume& fv, int y, int s2) {
  const int n = fv.width_samples;
  auto a = fv.sample(y, s2 / 2);
  std::vector<float> out(a.begin(), a.end());
  if (s2 % 2 != 0) {
    auto b = fv.sample(y, std::min(s2 / 2 + 1, n - 1));
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = 0.5f * (a[c] + b[c]);
    if (fv.normalized) normalize_l2(out);
  }
  return out;
}

void check_geometry(const FeatureVolume& left, const EpipolarGeometry& geom, int e) {
  geom.validate();
  if (left.pixel_width() != geom.width || left.height != geom.height)
    throw DomainError("feature volume does not match the geometry");
  if (e < 0 || e >= geom.height) throw DomainError("epipolar line " + std::to_string(e) + " out of range");
}

template <class Similarity>
MatchDistanceSlice assemble(int e, const EpipolarGeometry& geom, std::optional<double> normalizer,
                            Similarity&& sim) {
  const int nx = geom.nx(), nd = geom.nd();
  MatchDistanceSlice s(e, nx, nd);
  std::vector<double> raw(s.fm.size(), 0.0);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int x2 = 0; x2 < nx; ++x2) {
    for (int d2 = 0; d2 < nd; ++d2) {
      if (!xd_cell_valid(x2, d2, geom.width)) continue;
      const double v = sim(x2, d2);
      raw[std::size_t(x2) * std::size_t(nd) + std::size_t(d2)] = v;
      s.set_valid(x2, d2, true);
      best = std::max(best, v);
      any = true;
    }
  }
  if (!any) throw DomainError("degenerate epipolar line " + std::to_string(e));
  double norm = normalizer.value_or(best);
  if (!(norm > 0.0)) {
    norm = 1.0;
    s.normalizer_fallback = true;
  }
  s.fm_max_used = norm;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!s.valid[i]) continue;
    s.fm[i] = static_cast<float>(std::clamp(1.0 - raw[i] / norm, 0.0, 1.0));
  }
  return s;
}

}  // namespace

std::optional<double> fms(const FeatureVolume& left, const FeatureVolume& right, int e, int x2, int d2) {
  check_pair(left, right, true);
  const int l2 = x2 + d2, r2 = x2 - d2;
  if (e < 0 || e >= left.height || l2 < 0 || r2 < 0 || l2 >= left.width_samples || r2 >= right.width_samples)
    return std::nullopt;
  return dot(left.sample(e, l2), right.sample(e, r2));
}

std::optional<double> fms_native(const FeatureVolume& left, const FeatureVolume& right, int e, int x2, int d2) {
  check_pair(left, right, false);
  const int l2 = x2 + d2, r2 = x2 - d2;
  const int limit = 2 * left.width_samples;
  if (e < 0 || e >= left.height || l2 < 0 || r2 < 0 || l2 >= limit || r2 >= limit) return std::nullopt;
  const auto a = half_sample(left, e, l2);
  const auto b = half_sample(right, e, r2);
  return dot(a, b);
}

MatchDistanceSlice build_slice(const FeatureVolume& left, const FeatureVolume& right, int e,
                               const EpipolarGeometry& geom, std::optional<double> normalizer) {
  check_pair(left, right, true);
  check_geometry(left, geom, e);
  return assemble(e, geom, normalizer, [&](int x2, int d2) {
    return dot(left.sample(e, x2 + d2), right.sample(e, x2 - d2));
  });
}

MatchDistanceSlice build_slice_native(const FeatureVolume& left, const FeatureVolume& right, int e,
                                      const EpipolarGeometry& geom) {
  check_pair(left, right, false);
  check_geometry(left, geom, e);
  return assemble(e, geom, std::nullopt, [&](int x2, int d2) { return *fms_native(left, right, e, x2, d2); });
}

std::vector<MatchDistanceSlice> build_slices(const FeatureVolume& left, const FeatureVolume& right,
                                             const EpipolarGeometry& geom, FmNormalization scope,
                                             int parallelism) {
  std::vector<MatchDistanceSlice> slices(std::size_t(geom.height));
  parallel_for(geom.height, parallelism, [&](int e) { slices[std::size_t(e)] = build_slice(left, right, e, geom); });
  if (scope == FmNormalization::Global) {
    double global = 0.0;
    bool fallback = true;
    for (const auto& s : slices) {
      if (!s.normalizer_fallback) {
        global = std::max(global, s.fm_max_used);
        fallback = false;
      }
    }
    const std::optional<double> norm = fallback ? std::nullopt : std::optional<double>(global);
    parallel_for(geom.height, parallelism,
                 [&](int e) { slices[std::size_t(e)] = build_slice(left, right, e, geom, norm); });
  }
  return slices;
}

void export_slice(const MatchDistanceSlice& slice, SliceFormat format, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  if (format == SliceFormat::Csv) {
    os << "x2";
    for (int d2 = 0; d2 < slice.nd; ++d2) os << ',' << d2;
    os << '\n';
    char buf[32];
    for (int x2 = 0; x2 < slice.nx; ++x2) {
      os << x2;
      for (int d2 = 0; d2 < slice.nd; ++d2) {
        std::snprintf(buf, sizeof buf, "%.9g", double(slice.at(x2, d2)));
        os << ',' << buf;
      }
      os << '\n';
    }
  } else {
    os << "P5\n" << slice.nx << ' ' << slice.nd << "\n255\n";
    std::string row(std::size_t(slice.nx), '\0');
    for (int d2 = 0; d2 < slice.nd; ++d2) {
      for (int x2 = 0; x2 < slice.nx; ++x2) {
        const double v = std::clamp(double(slice.at(x2, d2)), 0.0, 1.0);
        row[std::size_t(x2)] = static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.0 + 0.5)));
      }
      os.write(row.data(), std::streamsize(row.size()));
    }
  }
  if (!os) throw IoError("failed writing " + path.string());
}

MatchDistanceSlice read_slice_csv(const std::filesystem::path& path, int e, int width) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("x2", 0) != 0) throw ParseError("slice CSV lacks the x2 header");
  const int nd = int(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<float>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::vector<float> r;
    while (std::getline(ss, cell, ',')) r.push_back(std::stof(cell));
    if (int(r.size()) != nd) throw ParseError("slice CSV row has wrong column count");
    rows.push_back(std::move(r));
  }
  MatchDistanceSlice s(e, int(rows.size()), nd);
  for (int x2 = 0; x2 < s.nx; ++x2)
    for (int d2 = 0; d2 < nd; ++d2) {
      s.at(x2, d2) = rows[std::size_t(x2)][std::size_t(d2)];
      s.set_valid(x2, d2, xd_cell_valid(x2, d2, width));
    }
  return s;
}

}  // namespace xds
