#include "xds/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "xds/calib.hpp"
#include "xds/errors.hpp"
#include "xds/parallel.hpp"
#include "xds/raster_io.hpp"

namespace xds {

using nlohmann::json;

FeaturePair census_features(const ImageF& left, const ImageF& right, const CensusOptions& opts) {
  if (!left.same_shape(right)) throw DomainError("left and right images differ in size");
  return {double_width(census_patch_features(left, opts)), double_width(census_patch_features(right, opts))};
}

FeaturePair load_feature_pair(const std::filesystem::path& left, const std::filesystem::path& right,
                              const EpipolarGeometry& geom) {
  FeatureVolume l = load_feature_volume(left), r = load_feature_volume(right);
  for (const FeatureVolume* fv : {&l, &r})
    if (fv->height != geom.height || fv->pixel_width() != geom.width)
      throw ParseError("B2FT dimension mismatch: volume is " + std::to_string(fv->height) + "x" +
                       std::to_string(fv->pixel_width()) + ", images are " + std::to_string(geom.height) + "x" +
                       std::to_string(geom.width));
  if (!l.doubled) l = double_width(l);
  if (!r.doubled) r = double_width(r);
  return {std::move(l), std::move(r)};
}

LeftMasks left_view_masks(const CyclopeanSolution& sol) {
  const auto& g = sol.geometry;
  LeftMasks m{Mask(g.width, g.height, 1), Mask(g.width, g.height, 0), Mask(g.width, g.height, 0)};
  for (const auto& line : sol.lines) {
    for (int x2 = 0; x2 < line.nx(); ++x2) {
      const auto i = std::size_t(x2);
      const int l2 = x2 + line.d2[i];
      if (l2 % 2 != 0 || l2 / 2 >= g.width) continue;
      const int l = l2 / 2;
      if (line.data_mask[i]) {
        m.data(l, line.e) = 1;
      } else if (line.homogeneous[i]) {
        m.homogeneous(l, line.e) = 1;
      }
    }
  }
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (m.data.data[i]) m.homogeneous.data[i] = 0;
    m.occluded.data[i] = !m.data.data[i] && !m.homogeneous.data[i];
  }
  return m;
}

Raster<float> cyclopean_raster(const CyclopeanSolution& sol) {
  Raster<float> r(sol.geometry.nx(), sol.geometry.height, std::numeric_limits<float>::infinity());
  for (const auto& line : sol.lines)
    for (int x2 = 0; x2 < line.nx(); ++x2)
      if (line.data_mask[std::size_t(x2)]) r(x2, line.e) = static_cast<float>(2.0 * line.refined_d[std::size_t(x2)]);
  return r;
}

MatchResult run_match(const FeaturePair& features, const EpipolarGeometry& geom, const PipelineConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  MatchResult out;
  const auto slices = build_slices(features.left, features.right, geom, cfg.normalization, cfg.parallelism);
  out.cyclopean = solve_all(slices, geom, cfg.dp, cfg.parallelism);
  out.disparity = project_to_left(out.cyclopean);
  out.masks = left_view_masks(out.cyclopean);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EpipolarGeometry geometry_for(int width, int height, int max_full_disparity) {
  EpipolarGeometry g;
  g.width = width;
  g.height = height;
  g.max_disparity_c = Half::from_twice(max_full_disparity);
  g.validate();
  return g;
}

namespace {

Raster<float> gaussian_blur(const Raster<float>& in, double sigma) {
  const int rad = int(std::ceil(3.0 * sigma));
  std::vector<double> k(std::size_t(2 * rad + 1));
  double sum = 0.0;
  for (int i = -rad; i <= rad; ++i) sum += k[std::size_t(i + rad)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  Raster<float> tmp(in.width, in.height), out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int i = -rad; i <= rad; ++i) s += k[std::size_t(i + rad)] * in(std::clamp(x + i, 0, in.width - 1), y);
      tmp(x, y) = static_cast<float>(s);
    }
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int i = -rad; i <= rad; ++i) s += k[std::size_t(i + rad)] * tmp(x, std::clamp(y + i, 0, in.height - 1));
      out(x, y) = static_cast<float>(s);
    }
  return out;
}

}  // namespace

Raster<float> synthetic_prior(const DisparityMap& gt, std::uint64_t seed) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.valid.size(); ++i)
    if (gt.valid.data[i]) {
      lo = std::min(lo, double(gt.values.data[i]));
      hi = std::max(hi, double(gt.values.data[i]));
      mean += gt.values.data[i];
      ++n;
    }
  if (n == 0) throw DomainError("GT has no valid cells");
  mean /= double(n);
  const double span = hi > lo ? hi - lo : 1.0;
  Raster<float> p(gt.width(), gt.height());
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      p(x, y) = static_cast<float>(((gt.is_valid(x, y) ? gt.values(x, y) : mean) - lo) / span);
  p = gaussian_blur(p, 1.5);
  std::mt19937_64 rng(seed);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      const double u = double(rng() >> 11) * 0x1.0p-53 - 0.5;
      const double v = std::pow(std::clamp(double(p(x, y)), 0.0, 1.0), 1.4) + 0.08 * x / p.width + 0.01 * u;
      p(x, y) = static_cast<float>(0.1 + v);
    }
  return p;
}

SceneScore score_scene(const DisparityMap& est, const GroundTruth& gt) {
  if (est.width() != gt.left.width() || est.height() != gt.left.height())
    throw DomainError("estimate and GT differ in size");
  SceneScore s;
  std::size_t exact = 0, half = 0, inter = 0, uni = 0;
  double se = 0.0;
  for (int y = 0; y < est.height(); ++y)
    for (int x = 0; x < est.width(); ++x) {
      const bool go = gt.occluded_left(x, y) != 0, eo = !est.is_valid(x, y);
      inter += go && eo;
      uni += go || eo;
      if (go) continue;
      ++s.visible;
      if (eo) continue;
      ++s.covered;
      const double err = double(est.values(x, y)) - double(gt.left.values(x, y));
      exact += err == 0.0;
      half += std::abs(err) <= 0.5;
      se += err * err;
    }
  if (s.visible) {
    s.exact = double(exact) / double(s.visible);
    s.within_half = double(half) / double(s.visible);
  }
  s.rmse = s.covered ? std::sqrt(se / double(s.covered)) : 0.0;
  s.occlusion_iou = uni ? double(inter) / double(uni) : 1.0;
  return s;
}

namespace {

json number_or_null(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

json plane_json(const Plane& p) {
  if (p.is_fronto()) return p.gamma;
  return json{{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}};
}

Plane plane_from(const json& j) {
  if (j.is_number()) return Plane::fronto(j.get<double>());
  if (!j.is_object()) throw ParseError("disparity must be a number or {alpha, beta, gamma}");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "alpha" && it.key() != "beta" && it.key() != "gamma")
      throw ParseError("unknown plane key '" + it.key() + "'");
  return Plane{j.value("alpha", 0.0), j.value("beta", 0.0), j.value("gamma", 0.0)};
}

}  // namespace

json to_json(const MetricReport& r) {
  return json{{"avg_error", r.avg_error},
              {"bad_error", r.bad_error},
              {"tau", r.tau},
              {"rms_error", r.rms_error},
              {"ssim_error", number_or_null(r.ssim_error)},
              {"psnr_sim", number_or_null(r.psnr_sim)},
              {"mutual_info_sim", r.mutual_info_sim},
              {"evaluated_pixels", r.evaluated_pixels}};
}

json to_json(const SceneSpec& s) {
  json layers = json::array();
  for (const auto& L : s.layers)
    layers.push_back(json{{"rect", {L.x0, L.y0, L.x1, L.y1}}, {"disparity", plane_json(L.disparity)}});
  return json{{"width", s.width},
              {"height", s.height},
              {"max_full_disparity", s.max_disparity_c.twice},
              {"background", plane_json(s.background)},
              {"layers", layers},
              {"dot_density", s.dot_density},
              {"seed", s.seed},
              {"noise_sigma", s.noise_sigma}};
}

SceneSpec scene_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("scene spec must be a JSON object");
  static const std::set<std::string> known = {"width",  "height",      "max_full_disparity", "background",
                                              "layers", "dot_density", "seed",               "noise_sigma"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ParseError("unknown scene key '" + it.key() + "'");
  SceneSpec s;
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.max_disparity_c = Half::from_twice(j.value("max_full_disparity", s.max_disparity_c.twice));
    if (j.contains("background")) s.background = plane_from(j.at("background"));
    s.dot_density = j.value("dot_density", s.dot_density);
    s.seed = j.value("seed", s.seed);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    for (const json& L : j.value("layers", json::array())) {
      const auto rect = L.at("rect").get<std::vector<int>>();
      if (rect.size() != 4) throw ParseError("layer rect must be [x0, y0, x1, y1]");
      s.layers.push_back(Layer{rect[0], rect[1], rect[2], rect[3], plane_from(L.at("disparity"))});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scene spec: ") + e.what());
  }
  return s;
}

namespace {

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<CompareRow> compare_entry(const DatasetEntry& e, const PipelineConfig& cfg) {
  if (!e.gt) throw UsageError("entry '" + e.name + "' has no gt");
  const DisparityMap gt = DisparityMap::from_raster(read_pfm(*e.gt), DisparitySource::Gt);
  const auto dir = cfg.output_dir / e.name;
  std::filesystem::create_directories(dir);
  std::vector<CompareRow> rows;
  auto add = [&](const std::string& method, const DisparityMap& est) {
    if (est.width() != gt.width() || est.height() != gt.height())
      throw DomainError("entry '" + e.name + "': " + method + " differs in size from the GT");
    rows.push_back({e.name, method, evaluate(est, gt, cfg.tau)});
  };

  std::optional<Raster<float>> prior_raw;
  if (e.prior) prior_raw = read_pfm(*e.prior);

  if (!e.left.empty()) {
    if (!e.calib) throw UsageError("entry '" + e.name + "' has images but no calib");
    const EpipolarGeometry geom = read_calib(*e.calib);
    const ImageF left = read_image(e.left), right = read_image(e.right);
    if (!left.same_shape(geom.width, geom.height) || !right.same_shape(geom.width, geom.height))
      throw DomainError("entry '" + e.name + "': image size does not match calib");
    FeaturePair fp;
    if (e.left_features) fp = load_feature_pair(*e.left_features, *e.right_features, geom);
    else if (cfg.feature_source == FeatureSource::B2ft)
      throw UsageError("entry '" + e.name + "' has no feature files but the feature source is b2ft");
    else fp = census_features(left, right, cfg.census);
    PipelineConfig local = cfg;
    local.parallelism = 1;
    const MatchResult m = run_match(fp, geom, local);
    write_pfm(m.disparity.values, dir / "disparity.pfm");
    if (prior_raw) {
      const FillResult f = fill_gaps(MonocularPrior::from_raster(*prior_raw), m.disparity, cfg.fill_mode);
      write_pfm(f.map.values, dir / "filled.pfm");
      add("B2FS", f.map);
    } else {
      add("DP", m.disparity);
    }
  }
  if (prior_raw) {
    const DisparityMap p = affine_normalize_to_gt(DisparityMap::from_raster(*prior_raw, DisparitySource::External), gt);
    write_pfm(p.values, dir / "prior_affine.pfm");
    add("prior_affine", p);
  }
  for (const auto& [name, path] : e.methods)
    add(name, DisparityMap::from_raster(read_pfm(path), DisparitySource::External));

  json j = json::object();
  for (const auto& r : rows) j[r.method] = to_json(r.report);
  write_json(j, dir / "metrics.json");
  return rows;
}

}  // namespace

std::vector<CompareRow> run_compare(const std::vector<DatasetEntry>& entries, const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<CompareRow>> per(entries.size());
  parallel_for(int(entries.size()), cfg.parallelism,
               [&](int i) { per[std::size_t(i)] = compare_entry(entries[std::size_t(i)], cfg); });
  std::vector<CompareRow> rows;
  for (auto& p : per) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

std::string format_table(const std::vector<CompareRow>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"entry", "method", "avg_error", "bad_error", "rms_error", "ssim_error", "psnr_sim", "mutual_info", "pixels"}};
  auto fmt = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  auto opt = [&](const std::optional<double>& v) { return v ? (std::isinf(*v) ? std::string("inf") : fmt(*v)) : "-"; };
  for (const auto& r : rows)
    cells.push_back({r.entry, r.method, fmt(r.report.avg_error), fmt(r.report.bad_error), fmt(r.report.rms_error),
                     opt(r.report.ssim_error), opt(r.report.psnr_sim), fmt(r.report.mutual_info_sim),
                     std::to_string(r.report.evaluated_pixels)});
  std::vector<std::size_t> w(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      if (c < 2) os << std::left << std::setw(int(w[c])) << row[c];
      else os << std::right << std::setw(int(w[c])) << row[c];
    }
    os << "\n";
  }
  return os.str();
}

DatasetEntry write_scene(const SynthScene& scene, const SceneSpec& spec, const std::filesystem::path& dir,
                         const std::string& name) {
  std::filesystem::create_directories(dir);
  DatasetEntry e;
  e.name = name;
  e.left = dir / "left.pgm";
  e.right = dir / "right.pgm";
  e.gt = dir / "gt.pfm";
  e.calib = dir / "calib.txt";
  e.prior = dir / "prior.pfm";
  write_pgm(scene.left, e.left);
  write_pgm(scene.right, e.right);
  write_pfm(scene.gt.left.values, *e.gt);
  write_pfm(cyclopean_raster(scene.gt.cyclopean), dir / "gt_cyclopean.pfm");
  write_mask_pgm(scene.gt.occluded_left, dir / "occluded_left.pgm");
  write_mask_pgm(scene.gt.occluded_right, dir / "occluded_right.pgm");
  write_calib(spec.geometry(), *e.calib);
  write_pfm(synthetic_prior(scene.gt.left, spec.seed), *e.prior);
  write_json(to_json(spec), dir / "spec.json");
  return e;
}

}  // namespace xds
