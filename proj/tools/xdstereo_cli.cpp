// Command-line front end: match, eval, synth, correlate, fill, compare.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xds/calib.hpp"
#include "xds/config.hpp"
#include "xds/errors.hpp"
#include "xds/pipeline.hpp"
#include "xds/raster_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xds;

namespace {

// Options that map onto PipelineConfig.  Only flags actually given override
// the config file.
struct ConfigFlags {
  std::string config_path;
  std::string out;
  double lambda = 0, epsilon = 0, tau = 0, tie = 0;
  int radius = 0, parallelism = 0;
  std::uint64_t seed = 0;
  bool no_strict = false, subpixel = false;
  std::string scope, fill_mode;
  std::vector<CLI::Option*> opts;
  CLI::Option *o_lambda{}, *o_epsilon{}, *o_tau{}, *o_radius{}, *o_tie{}, *o_par{}, *o_seed{}, *o_out{}, *o_scope{},
      *o_fill{}, *o_nostrict{}, *o_subpixel{};

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Load a PipelineConfig JSON (flags override it)");
    o_out = app->add_option("--out", out, "Output directory");
    o_lambda = app->add_option("--lambda", lambda, "Occlusion cost");
    o_epsilon = app->add_option("--epsilon", epsilon, "Bonus for adjacent occluded cells");
    o_nostrict = app->add_flag("--no-strict-gc1", no_strict, "Allow non-monotone occlusion runs");
    o_subpixel = app->add_flag("--subpixel", subpixel, "Parabolic subpixel refinement");
    o_scope = app->add_option("--scope", scope, "fm normalisation: per_line|global");
    o_fill = app->add_option("--fill", fill_mode, "Fill mode: affine|poisson");
    o_tau = app->add_option("--tau", tau, "BadError threshold in pixels");
    o_radius = app->add_option("--radius", radius, "Census window radius");
    o_tie = app->add_option("--census-tie", tie, "Census tie threshold");
    o_par = app->add_option("--parallelism", parallelism, "Worker threads");
    o_seed = app->add_option("--seed", seed, "Random seed");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    apply_env_overrides(c);
    if (o_out->count()) c.output_dir = out;
    if (o_lambda->count()) c.dp.lambda = lambda;
    if (o_epsilon->count()) c.dp.epsilon = epsilon;
    if (o_nostrict->count()) c.dp.strict_gc1_runs = false;
    if (o_subpixel->count()) c.dp.subpixel_refine = true;
    if (o_scope->count()) c.normalization = parse_normalization(scope);
    if (o_fill->count()) c.fill_mode = parse_fill_mode(fill_mode);
    if (o_tau->count()) c.tau = tau;
    if (o_radius->count()) c.census.window_radius = radius;
    if (o_tie->count()) c.census.tie_threshold = tie;
    if (o_par->count()) c.parallelism = parallelism;
    if (o_seed->count()) c.seed = seed;
    c.validate();
    return c;
  }
};

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
}

fs::path prepare_out(const PipelineConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  save_config(cfg, cfg.output_dir / "config.json");
  return cfg.output_dir;
}

EpipolarGeometry pick_geometry(const std::string& calib, int max_disp, int w, int h) {
  if (!calib.empty()) {
    EpipolarGeometry g = read_calib(calib);
    if (g.width != w || g.height != h)
      throw DomainError("calib declares " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                        " but the images are " + std::to_string(w) + "x" + std::to_string(h));
    return g;
  }
  if (max_disp <= 0) throw UsageError("either --calib or --max-disparity is required");
  return geometry_for(w, h, max_disp);
}

struct InputPair {
  std::string left, right, features_left, features_right, calib;
  int max_disp = 0;
  bool census = false;

  void attach(CLI::App* app) {
    app->add_option("--left", left, "Left image (PNG/PGM/PPM)")->required()->check(CLI::ExistingFile);
    app->add_option("--right", right, "Right image")->required()->check(CLI::ExistingFile);
    app->add_flag("--census", census, "Use built-in census features");
    app->add_option("--features-left", features_left, "Left B2FT volume")->check(CLI::ExistingFile);
    app->add_option("--features-right", features_right, "Right B2FT volume")->check(CLI::ExistingFile);
    app->add_option("--calib", calib, "Middlebury calib.txt")->check(CLI::ExistingFile);
    app->add_option("--max-disparity", max_disp, "Full-pixel disparity cap when no calib is given");
  }

  // Loads images and features; the feature source follows the flags, then the config.
  std::pair<EpipolarGeometry, FeaturePair> load(PipelineConfig& cfg) const {
    const ImageF l = read_image(left), r = read_image(right);
    if (!l.same_shape(r)) throw DomainError("left and right images differ in size");
    const EpipolarGeometry g = pick_geometry(calib, max_disp, l.width, l.height);
    if (features_left.empty() != features_right.empty())
      throw UsageError("--features-left and --features-right must be given together");
    if (census && !features_left.empty()) throw UsageError("--census conflicts with feature files");
    if (census) cfg.feature_source = FeatureSource::Census;
    if (!features_left.empty()) cfg.feature_source = FeatureSource::B2ft;
    if (cfg.feature_source == FeatureSource::B2ft) {
      if (features_left.empty()) throw UsageError("feature source b2ft needs --features-left/--features-right");
      return {g, load_feature_pair(features_left, features_right, g)};
    }
    return {g, census_features(l, r, cfg.census)};
  }
};

int cmd_match(const ConfigFlags& flags, const InputPair& in, const std::string& gt_path, const std::string& prior_path) {
  PipelineConfig cfg = flags.resolve();
  auto [geom, fp] = in.load(cfg);
  const fs::path out = prepare_out(cfg);
  const MatchResult m = run_match(fp, geom, cfg);
  fs::create_directories(out / "masks");
  write_pfm(m.disparity.values, out / "disparity.pfm");
  write_pfm(cyclopean_raster(m.cyclopean), out / "cyclopean.pfm");
  write_mask_pgm(m.masks.occluded, out / "masks" / "occluded.pgm");
  write_mask_pgm(m.masks.homogeneous, out / "masks" / "homogeneous.pgm");
  write_mask_pgm(m.masks.data, out / "masks" / "data.pgm");

  std::string lines;
  int gc1 = 0, local = 0, gc2_fail = 0, occluded_cells = 0, homogeneous_cells = 0;
  for (const auto& line : m.cyclopean.lines) {
    const GcReport gc = check_gc(line);
    int occ = 0, hom = 0;
    for (std::size_t i = 0; i < line.occluded.size(); ++i) occ += line.occluded[i], hom += line.homogeneous[i];
    gc1 += int(gc.gc1_violations.size());
    local += gc.local_violations;
    gc2_fail += gc.gc2_ok ? 0 : 1;
    occluded_cells += occ;
    homogeneous_cells += hom;
    lines += json{{"e", line.e},
                  {"cost", line.cost},
                  {"occluded_cells", occ},
                  {"homogeneous_cells", hom},
                  {"gc1_violations", gc.gc1_violations.size()}}
                 .dump() +
             "\n";
  }
  write_text(out / "lines.jsonl", lines);

  json report{{"width", geom.width},
              {"height", geom.height},
              {"max_full_disparity", geom.max_disparity_c.twice},
              {"feature_source", to_string(cfg.feature_source)},
              {"seconds", m.seconds},
              {"valid_fraction", double(m.disparity.valid_count()) / double(m.disparity.values.size())},
              {"occluded_cells", occluded_cells},
              {"homogeneous_cells", homogeneous_cells},
              {"gc", {{"gc1_violations", gc1}, {"local_violations", local}, {"gc2_failures", gc2_fail}}},
              {"config", to_json(cfg)}};
  DisparityMap final_map = m.disparity;
  if (!prior_path.empty()) {
    const FillResult f = fill_gaps(MonocularPrior::from_raster(read_pfm(prior_path)), m.disparity, cfg.fill_mode);
    write_pfm(f.map.values, out / "filled.pfm");
    report["fill"] = {{"mode", to_string(cfg.fill_mode)}, {"a", f.fit.a}, {"b", f.fit.b},
                      {"converged", f.converged}, {"regions", f.regions}};
    final_map = f.map;
  }
  if (!gt_path.empty()) {
    const DisparityMap gt = DisparityMap::from_raster(read_pfm(gt_path), DisparitySource::Gt);
    report["metrics"] = to_json(evaluate(final_map, gt, cfg.tau));
  }
  write_text(out / "report.json", report.dump(2) + "\n");
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& est, const std::string& gt_path, const std::string& format,
             const std::string& error_png) {
  const PipelineConfig cfg = flags.resolve();
  const DisparityMap e = DisparityMap::from_raster(read_pfm(est), DisparitySource::External);
  const DisparityMap g = DisparityMap::from_raster(read_pfm(gt_path), DisparitySource::Gt);
  const MetricReport r = evaluate(e, g, cfg.tau);
  const fs::path out = prepare_out(cfg);
  const json j = to_json(r);
  write_text(out / "metrics.json", j.dump(2) + "\n");
  if (!error_png.empty()) write_png(render_signed_error(signed_error_map(e, g)), error_png);
  if (format == "table") std::cout << format_table({{fs::path(est).stem().string(), "est", r}});
  else std::cout << j.dump() << "\n";
  return 0;
}

int cmd_synth(const ConfigFlags& flags, const std::string& spec_path, bool random, int width, int height,
              int max_disp, double noise, const std::string& name) {
  PipelineConfig cfg = flags.resolve();
  SceneSpec spec;
  if (!spec_path.empty() && random) throw UsageError("--spec and --random are exclusive");
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw IoError("cannot open " + spec_path);
    try {
      spec = scene_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw ParseError(spec_path + " is not valid JSON: " + e.what());
    }
    if (flags.o_seed->count()) spec.seed = cfg.seed;
  } else if (random) {
    spec = random_rds_spec(cfg.seed, width, height, max_disp);
  } else {
    throw UsageError("synth needs --spec or --random");
  }
  if (noise >= 0.0) spec.noise_sigma = noise;
  const SynthScene scene = generate(spec);
  const fs::path out = prepare_out(cfg);
  const DatasetEntry e = write_scene(scene, spec, out / name, name);
  write_manifest({e}, out / "manifest.json");
  const GtReport rep = verify_gt(scene.gt);
  std::cout << json{{"entry", (out / name).string()},
                    {"lines", rep.lines_checked},
                    {"gc1_violations", rep.gc1_violations},
                    {"gc2_failures", rep.gc2_failures}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_correlate(const ConfigFlags& flags, const InputPair& in, const std::vector<int>& lines,
                  const std::string& format) {
  PipelineConfig cfg = flags.resolve();
  auto [geom, fp] = in.load(cfg);
  if (format != "csv" && format != "pgm" && format != "both")
    throw UsageError("unknown slice format '" + format + "' (expected csv, pgm or both)");
  const fs::path out = prepare_out(cfg);
  std::optional<double> norm;
  if (cfg.normalization == FmNormalization::Global) {
    const auto all = build_slices(fp.left, fp.right, geom, cfg.normalization, cfg.parallelism);
    norm = all.front().fm_max_used;
  }
  for (int e : lines) {
    const MatchDistanceSlice s = build_slice(fp.left, fp.right, e, geom, norm);
    const std::string stem = "slice_" + std::to_string(e);
    if (format != "pgm") export_slice(s, SliceFormat::Csv, out / (stem + ".csv"));
    if (format != "csv") export_slice(s, SliceFormat::Pgm, out / (stem + ".pgm"));
  }
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_fill(const ConfigFlags& flags, const std::string& dp_path, const std::string& prior_path) {
  const PipelineConfig cfg = flags.resolve();
  const DisparityMap dp = DisparityMap::from_raster(read_pfm(dp_path), DisparitySource::Dp);
  const FillResult f = fill_gaps(MonocularPrior::from_raster(read_pfm(prior_path)), dp, cfg.fill_mode);
  const fs::path out = prepare_out(cfg);
  write_pfm(f.map.values, out / "filled.pfm");
  const json j{{"mode", to_string(cfg.fill_mode)}, {"a", f.fit.a},           {"b", f.fit.b},
               {"converged", f.converged},         {"regions", f.regions}, {"output", (out / "filled.pfm").string()}};
  write_text(out / "fill.json", j.dump(2) + "\n");
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_compare(const ConfigFlags& flags, const std::string& manifest) {
  const PipelineConfig cfg = flags.resolve();
  const auto entries = read_manifest(manifest);
  const fs::path out = prepare_out(cfg);
  const auto rows = run_compare(entries, cfg);
  json j = json::array();
  for (const auto& r : rows) j.push_back({{"entry", r.entry}, {"method", r.method}, {"metrics", to_json(r.report)}});
  write_text(out / "compare.json", j.dump(2) + "\n");
  const std::string table = format_table(rows);
  write_text(out / "compare.txt", table);
  std::cout << table;
  return 0;
}

int exit_code(const std::string& kind) {
  if (kind == "usage") return 2;
  if (kind == "parse") return 3;
  if (kind == "io") return 4;
  if (kind == "domain") return 5;
  return 1;
}

int fail(const std::string& kind, const std::string& msg) {
  std::cerr << json{{"error", kind}, {"message", msg}}.dump() << std::endl;
  return exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclopean XD-space stereo: DP matching, gap filling and evaluation"};
  app.require_subcommand(1);

  ConfigFlags f_match, f_eval, f_synth, f_corr, f_fill, f_cmp;

  auto* match = app.add_subcommand("match", "Stereo pair -> disparity PFM, masks and report");
  InputPair match_in;
  std::string match_gt, match_prior;
  match_in.attach(match);
  match->add_option("--gt", match_gt, "GT disparity PFM for a metric report")->check(CLI::ExistingFile);
  match->add_option("--prior", match_prior, "Monocular prior PFM; also writes filled.pfm")->check(CLI::ExistingFile);
  f_match.attach(match);

  auto* eval = app.add_subcommand("eval", "Metrics of an estimate against GT");
  std::string est, gt, format = "json", error_png;
  eval->add_option("--est", est, "Estimated disparity PFM")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", gt, "GT disparity PFM")->required()->check(CLI::ExistingFile);
  eval->add_option("--format", format, "json|table")->check(CLI::IsMember({"json", "table"}));
  eval->add_option("--error-png", error_png, "Write the signed error map as PNG");
  f_eval.attach(eval);

  auto* synth = app.add_subcommand("synth", "Generate a random-dot stereo scene with exact GT");
  std::string spec_path, name = "scene";
  bool random = false;
  int width = 64, height = 64, max_disp = 16;
  double noise = -1.0;
  synth->add_option("--spec", spec_path, "Scene spec JSON")->check(CLI::ExistingFile);
  synth->add_flag("--random", random, "Random layered scene from --seed");
  synth->add_option("--width", width, "Random scene width");
  synth->add_option("--height", height, "Random scene height");
  synth->add_option("--max-disparity", max_disp, "Random scene full-pixel disparity cap");
  synth->add_option("--noise", noise, "Gaussian noise sigma (intensity units)");
  synth->add_option("--name", name, "Entry name");
  f_synth.attach(synth);

  auto* corr = app.add_subcommand("correlate", "Export match-distance slices for given lines");
  InputPair corr_in;
  std::vector<int> lines;
  std::string slice_format = "both";
  corr_in.attach(corr);
  corr->add_option("--line", lines, "Epipolar line(s)")->required();
  corr->add_option("--format", slice_format, "csv|pgm|both");
  f_corr.attach(corr);

  auto* fill = app.add_subcommand("fill", "Complete DP gaps from a monocular prior");
  std::string dp_path, prior_path;
  fill->add_option("--dp", dp_path, "DP disparity PFM (inf marks gaps)")->required()->check(CLI::ExistingFile);
  fill->add_option("--prior", prior_path, "Monocular prior PFM")->required()->check(CLI::ExistingFile);
  f_fill.attach(fill);

  auto* cmp = app.add_subcommand("compare", "Metric table across methods for a dataset manifest");
  std::string manifest;
  cmp->add_option("--manifest", manifest, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  f_cmp.attach(cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    return fail("usage", msg);
  }

  try {
    if (*match) return cmd_match(f_match, match_in, match_gt, match_prior);
    if (*eval) return cmd_eval(f_eval, est, gt, format, error_png);
    if (*synth) return cmd_synth(f_synth, spec_path, random, width, height, max_disp, noise, name);
    if (*corr) return cmd_correlate(f_corr, corr_in, lines, slice_format);
    if (*fill) return cmd_fill(f_fill, dp_path, prior_path);
    if (*cmp) return cmd_compare(f_cmp, manifest);
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 1;
}
