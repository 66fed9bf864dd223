#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "xds/calib.hpp"
#include "xds/config.hpp"
#include "xds/errors.hpp"
#include "xds/raster_io.hpp"

using namespace xds;

namespace {
const std::filesystem::path kData = XDS_TEST_DATA;
}

TEST_CASE("PFM round trip is bit-identical") {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g(0, 50);
  Raster<float> r(16, 16);
  for (float& v : r.data) v = g(rng);
  r(3, 4) = std::numeric_limits<float>::infinity();
  test::TempDir dir("pfm");
  for (bool le : {true, false}) {
    write_pfm(r, dir / "r.pfm", le);
    const Raster<float> back = read_pfm(dir / "r.pfm");
    REQUIRE(back.same_shape(r));
    CHECK(std::memcmp(back.data.data(), r.data.data(), r.data.size() * sizeof(float)) == 0);
  }
  Raster<float> bad(2, 2, 1.0f);
  bad(1, 1) = NAN;
  CHECK_THROWS_AS(write_pfm(bad, dir / "bad.pfm"), DomainError);
}

TEST_CASE("hand-written PFM fixtures in both byte orders") {
  const Raster<float> le = read_pfm(kData / "le.pfm"), be = read_pfm(kData / "be.pfm");
  CHECK(le == be);
  REQUIRE(le.width == 3);
  REQUIRE(le.height == 2);
  // Top row first in memory; the file stores rows bottom-up.
  CHECK(le(0, 0) == 1.5f);
  CHECK(le(1, 0) == -2.0f);
  CHECK(le(2, 0) == 3.25f);
  CHECK(le(0, 1) == 0.0f);
  CHECK(std::isinf(le(1, 1)));
  CHECK(le(2, 1) == 7.0f);
}

TEST_CASE("PFM parse errors") {
  CHECK_THROWS_WITH_AS(read_pfm(kData / "color.pfm"), "color PFM unsupported", ParseError);
  CHECK_THROWS_WITH_AS(read_pfm(kData / "nan.pfm"), doctest::Contains("NaN"), ParseError);
  CHECK_THROWS_WITH_AS(read_pfm(kData / "short.pfm"), doctest::Contains("truncated"), ParseError);
  CHECK_THROWS_AS(read_pfm(kData / "missing.pfm"), IoError);
  CHECK_THROWS_AS(read_pfm(kData / "calib.txt"), ParseError);
}

TEST_CASE("PGM round trip") {
  ImageF img(5, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = float(i) / 14.0f;
  test::TempDir dir("pgm");
  write_pgm(img, dir / "a.pgm");
  const ImageF back = read_image(dir / "a.pgm");
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255 + 1e-6);

  Raster<Rgb> rgb(2, 1, Rgb{255, 0, 0});
  write_png(rgb, dir / "c.png");
  const ImageF grey = read_image(dir / "c.png");
  CHECK(grey(0, 0) == doctest::Approx(0.299).epsilon(0.01));
}

TEST_CASE("Middlebury calibration") {
  const EpipolarGeometry g = read_calib(kData / "calib.txt");
  CHECK(g.focal_length_px == 3997.684);
  CHECK(g.baseline == 193.001);
  CHECK(g.disparity_offset == 131.111);
  CHECK(g.width == 2964);
  CHECK(g.height == 1988);
  CHECK(g.max_disparity_c.value() == 140.0);
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_WITH_AS(read_calib(kData / "calib_nobaseline.txt"), "baseline missing", ParseError);

  test::TempDir dir("calib");
  write_calib(g, dir / "c.txt");
  const EpipolarGeometry back = read_calib(dir / "c.txt");
  CHECK(back.focal_length_px == g.focal_length_px);
  CHECK(back.baseline == g.baseline);
  CHECK(back.max_disparity_c == g.max_disparity_c);
}

TEST_CASE("config JSON round trip and validation") {
  PipelineConfig c;
  c.dp.lambda = 0.55;
  c.dp.epsilon = 0.125;
  c.dp.subpixel_refine = true;
  c.normalization = FmNormalization::Global;
  c.fill_mode = FillMode::Affine;
  c.census.window_radius = 3;
  c.parallelism = 6;
  c.seed = 99;
  c.output_dir = "somewhere";
  test::TempDir dir("cfg");
  save_config(c, dir / "c.json");
  const PipelineConfig back = load_config(dir / "c.json");
  CHECK(to_json(back) == to_json(c));

  CHECK_THROWS_WITH_AS(config_from_json(nlohmann::json{{"lambda", 1}}), doctest::Contains("config.lambda"),
                       ParseError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tau", "two"}}), ParseError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tau", -1}}), UsageError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"fill_mode", "magic"}}), UsageError);
  CHECK(config_from_json(nlohmann::json::object()).dp.lambda == PipelineConfig{}.dp.lambda);
}

TEST_CASE("environment overrides") {
  PipelineConfig c;
  ::setenv("XDS_PARALLELISM", "3", 1);
  ::setenv("XDS_OUT_DIR", "/tmp/elsewhere", 1);
  apply_env_overrides(c);
  CHECK(c.parallelism == 3);
  CHECK(c.output_dir == "/tmp/elsewhere");
  ::setenv("XDS_PARALLELISM", "zero", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), UsageError);
  ::unsetenv("XDS_PARALLELISM");
  ::unsetenv("XDS_OUT_DIR");
}

TEST_CASE("dataset manifests") {
  test::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "s");
  for (const char* f : {"s/l.pgm", "s/r.pgm", "s/gt.pfm", "s/p.pfm", "s/other.pfm"}) std::ofstream(dir / f) << "x";
  {
    std::ofstream(dir / "m.json") << R"({"entries": [{"name": "a", "im0": "s/l.pgm", "im1": "s/r.pgm",
      "gt": "s/gt.pfm", "prior": "s/p.pfm", "methods": {"other": "s/other.pfm"}}]})";
  }
  auto entries = read_manifest(dir / "m.json");
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].name == "a");
  CHECK(entries[0].left == dir / "s/l.pgm");
  CHECK(*entries[0].gt == dir / "s/gt.pfm");
  REQUIRE(entries[0].methods.size() == 1);
  CHECK(entries[0].methods[0].first == "other");

  write_manifest(entries, dir / "m2.json");
  const auto again = read_manifest(dir / "m2.json");
  REQUIRE(again.size() == 1);
  CHECK(std::filesystem::equivalent(again[0].right, entries[0].right));

  auto write = [&](const std::string& text) {
    std::ofstream(dir / "bad.json") << text;
    return dir / "bad.json";
  };
  CHECK_THROWS_AS(read_manifest(write(R"([{"name": "a", "im0": "s/l.pgm", "im1": "s/nope.pgm"}])")), IoError);
  CHECK_THROWS_WITH_AS(read_manifest(write(R"([{"name": "a"}, {"name": "a"}])")), doctest::Contains("duplicate"),
                       ParseError);
  CHECK_THROWS_AS(read_manifest(write(R"([{"name": "../x"}])")), ParseError);
  CHECK_THROWS_AS(read_manifest(write(R"([{"name": "a", "extra": 1}])")), ParseError);
  CHECK_THROWS_AS(read_manifest(write("{not json")), ParseError);
  CHECK_THROWS_AS(read_manifest(dir / "none.json"), IoError);
}
