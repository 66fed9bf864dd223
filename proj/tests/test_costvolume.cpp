#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "xds/costvolume.hpp"
#include "xds/errors.hpp"

using namespace xds;

namespace {

ImageF random_image(std::uint64_t seed, int w, int h) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageF img(w, h);
  for (float& v : img.data) v = u(rng);
  return img;
}

EpipolarGeometry geom_for(int w, int h, int twice) {
  EpipolarGeometry g;
  g.width = w;
  g.height = h;
  g.max_disparity_c = Half::from_twice(twice);
  return g;
}

}  // namespace

TEST_CASE("identical volumes match perfectly at zero disparity") {
  const FeatureVolume f = double_width(census_patch_features(random_image(1, 20, 6)));
  const auto g = geom_for(20, 6, 8);
  for (int e = 0; e < 6; ++e) {
    const MatchDistanceSlice s = build_slice(f, f, e, g);
    CHECK(s.nx == 40);
    CHECK(s.nd == 9);
    CHECK_FALSE(s.normalizer_fallback);
    for (int x2 = 0; x2 < s.nx; ++x2) {
      CHECK(s.is_valid(x2, 0));
      CHECK(s.at(x2, 0) == doctest::Approx(0.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("out-of-image cells are invalid and hold fm = 1") {
  const FeatureVolume f = double_width(census_patch_features(random_image(2, 12, 5)));
  const MatchDistanceSlice s = build_slice(f, f, 2, geom_for(12, 5, 6));
  for (int x2 = 0; x2 < s.nx; ++x2)
    for (int d2 = 0; d2 < s.nd; ++d2) {
      const bool expect = x2 - d2 >= 0 && x2 + d2 <= 2 * 12 - 1;
      CHECK(s.is_valid(x2, d2) == expect);
      if (!expect) CHECK(s.at(x2, d2) == 1.0f);
      else CHECK((s.at(x2, d2) >= 0.0f && s.at(x2, d2) <= 1.0f));
    }
}

TEST_CASE("shifted copies put the per-column minimum at the true shift") {
  const int w = 24, h = 8;
  const ImageF src = random_image(3, w + 4, h);
  for (int s = 0; s <= 4; ++s) {
    ImageF left(w, h), right(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        left(x, y) = src(x, y);
        right(x, y) = src(x + s, y);
      }
    const FeatureVolume fl = double_width(census_patch_features(left));
    const FeatureVolume fr = double_width(census_patch_features(right));
    const MatchDistanceSlice sl = build_slice(fl, fr, 4, geom_for(w, h, 6));
    for (int x2 = s + 6; x2 <= 2 * w - s - 8; ++x2) {
      // Brute-force scan of the column.
      int best = -1;
      float best_v = 2.0f;
      for (int d2 = 0; d2 < sl.nd; ++d2)
        if (sl.is_valid(x2, d2) && sl.at(x2, d2) < best_v) best_v = sl.at(x2, d2), best = d2;
      CHECK(best == s);
    }
  }
}

TEST_CASE("a flat line falls back to the unit normaliser") {
  const FeatureVolume f = double_width(census_patch_features(ImageF(8, 5, 0.4f)));
  const MatchDistanceSlice s = build_slice(f, f, 0, geom_for(8, 5, 4));
  CHECK(s.normalizer_fallback);
  CHECK(s.fm_max_used == 1.0);
  for (float v : s.fm) CHECK(v == 1.0f);
}

TEST_CASE("build_slice rejects mismatched inputs") {
  const FeatureVolume nat = census_patch_features(random_image(4, 10, 5));
  const FeatureVolume dbl = double_width(nat);
  CHECK_THROWS_AS(build_slice(nat, nat, 0, geom_for(10, 5, 4)), UsageError);
  CHECK_THROWS_AS(build_slice(dbl, dbl, 5, geom_for(10, 5, 4)), DomainError);
  CHECK_THROWS_AS(build_slice(dbl, dbl, 0, geom_for(11, 5, 4)), DomainError);
  CHECK_THROWS_AS(build_slice(dbl, dbl, 0, geom_for(10, 5, 10)), DomainError);
}

TEST_CASE("native half-pixel sampling equals the pre-doubled volume") {
  const FeatureVolume nl = census_patch_features(random_image(5, 18, 6));
  const FeatureVolume nr = census_patch_features(random_image(6, 18, 6));
  const FeatureVolume dl = double_width(nl), dr = double_width(nr);
  const auto g = geom_for(18, 6, 9);
  for (int e = 0; e < 6; ++e) {
    const MatchDistanceSlice a = build_slice(dl, dr, e, g), b = build_slice_native(nl, nr, e, g);
    REQUIRE(a.fm.size() == b.fm.size());
    CHECK(a.valid == b.valid);
    for (std::size_t i = 0; i < a.fm.size(); ++i) CHECK(std::abs(a.fm[i] - b.fm[i]) <= 1e-6);
    for (int x2 = 0; x2 < a.nx; ++x2)
      for (int d2 = 0; d2 < a.nd; ++d2) {
        const auto p = fms(dl, dr, e, x2, d2), q = fms_native(nl, nr, e, x2, d2);
        REQUIRE(p.has_value() == q.has_value());
        if (p) CHECK(std::abs(*p - *q) <= 1e-6);
      }
  }
}

TEST_CASE("normalisation puts fm = 0 at the best match and global scope uses the image maximum") {
  const FeatureVolume l = double_width(census_patch_features(random_image(7, 14, 6)));
  const FeatureVolume r = double_width(census_patch_features(random_image(8, 14, 6)));
  const auto g = geom_for(14, 6, 7);
  const auto per_line = build_slices(l, r, g, FmNormalization::PerLine);
  double global = 0.0;
  for (const auto& s : per_line) {
    float lo = 2.0f;
    for (std::size_t i = 0; i < s.fm.size(); ++i)
      if (s.valid[i]) lo = std::min(lo, s.fm[i]);
    CHECK(lo == 0.0f);
    CHECK(s.fm_max_used > 0.0);
    global = std::max(global, s.fm_max_used);
  }
  const auto glob = build_slices(l, r, g, FmNormalization::Global);
  for (const auto& s : glob) {
    CHECK(s.fm_max_used == global);
    for (std::size_t i = 0; i < s.fm.size(); ++i) CHECK((s.fm[i] >= 0.0f && s.fm[i] <= 1.0f));
  }
  CHECK(build_slices(l, r, g, FmNormalization::Global, 4)[3].fm == glob[3].fm);
}

TEST_CASE("PGM export quantises linearly") {
  MatchDistanceSlice s(0, 2, 2);
  s.at(0, 0) = 0.0f;
  s.at(1, 0) = 1.0f;
  s.at(0, 1) = 0.5f;
  s.at(1, 1) = 1.0f;
  test::TempDir dir("slice_pgm");
  export_slice(s, SliceFormat::Pgm, dir / "s.pgm");
  std::ifstream is(dir / "s.pgm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.substr(0, header.size()) == header);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(int(px[0]) == 0);
  CHECK(int(px[1]) == 255);
  CHECK(int(px[2]) == 128);
  CHECK(int(px[3]) == 255);
}

TEST_CASE("identical volumes export a black d2 = 0 row") {
  const FeatureVolume f = double_width(census_patch_features(random_image(9, 10, 5)));
  const MatchDistanceSlice s = build_slice(f, f, 1, geom_for(10, 5, 4));
  test::TempDir dir("slice_black");
  export_slice(s, SliceFormat::Pgm, dir / "s.pgm");
  std::ifstream is(dir / "s.pgm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t off = bytes.size() - std::size_t(s.nx * s.nd);
  for (int x2 = 0; x2 < s.nx; ++x2) CHECK(int(static_cast<unsigned char>(bytes[off + std::size_t(x2)])) == 0);
}

TEST_CASE("CSV export round-trips") {
  std::mt19937_64 rng(11);
  const MatchDistanceSlice s = test::random_slice(rng, 9, 5);
  test::TempDir dir("slice_csv");
  export_slice(s, SliceFormat::Csv, dir / "s.csv");
  const MatchDistanceSlice back = read_slice_csv(dir / "s.csv", 0, 9);
  REQUIRE(back.nx == s.nx);
  REQUIRE(back.nd == s.nd);
  CHECK(back.valid == s.valid);
  for (std::size_t i = 0; i < s.fm.size(); ++i) CHECK(std::abs(back.fm[i] - s.fm[i]) <= 1e-6);
  std::ofstream(dir / "bad.csv") << "nope\n";
  CHECK_THROWS_AS(read_slice_csv(dir / "bad.csv", 0, 9), ParseError);
}
