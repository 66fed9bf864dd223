// Acceptance suite: one PASS/FAIL line per criterion.  Exits non-zero when a
// criterion fails unless it was named with --allow (known red, documented in
// the README).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "metrics_oracle.hpp"
#include "support.hpp"
#include "xds/dp.hpp"
#include "xds/errors.hpp"
#include "xds/fill.hpp"
#include "xds/geometry.hpp"
#include "xds/metrics.hpp"
#include "xds/pipeline.hpp"
#include "xds/synth.hpp"

using namespace xds;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// GC tallies accumulated over every solver output produced by the suite.
struct GcTally {
  long lines = 0, gc1 = 0, local = 0, gc2 = 0;
  void add(const LineSolution& s) {
    const GcReport r = check_gc(s);
    ++lines;
    gc1 += long(r.gc1_violations.size());
    local += r.local_violations;
    gc2 += r.gc2_ok ? 0 : 1;
  }
  void add(const CyclopeanSolution& c) {
    for (const auto& l : c.lines) add(l);
  }
} g_tally;

Outcome dp_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0, 1);
  int cost_mismatch = 0, path_mismatch = 0;
  for (int k = 0; k < 200; ++k) {
    const int width = 1 + int(rng() % 6);  // nx <= 12
    const int nd = 1 + int(rng() % std::min(5, width));
    const MatchDistanceSlice s = test::random_slice(rng, width, nd);
    DPParams p;
    p.lambda = 0.1 + 0.7 * u(rng);
    p.epsilon = 0.5 * p.lambda * u(rng);
    const LineSolution a = solve_line(s, p), b = brute_force_line(s, p);
    g_tally.add(a);
    cost_mismatch += a.cost != b.cost;
    path_mismatch += a.d2 != b.d2 || a.occluded != b.occluded;
  }
  const double secs = since(t0);
  return {cost_mismatch == 0 && path_mismatch == 0 && secs < 30.0,
          fmt("200 slices: %d cost mismatches (tolerance 0), %d path mismatches, %.2f s (limit 30 s)", cost_mismatch,
              path_mismatch, secs)};
}

Outcome transform_exactness() {
  const int n = 64;
  long checked = 0, errors = 0;
  for (int l2 = 0; l2 <= 2 * (n - 1); ++l2)
    for (int r2 = l2 % 2; r2 <= l2; r2 += 2) {
      const auto [x, d] = lr_to_cyclopean(Half::from_twice(l2), Half::from_twice(r2), n);
      const auto [l, r] = cyclopean_to_lr(x, d, n);
      const auto [x2, dd] = lr_to_cyclopean(l, r, n);
      errors += !(l.twice == l2 && r.twice == r2 && x2 == x && dd == d);
      ++checked;
    }
  EpipolarGeometry g;
  g.focal_length_px = 3997.684;
  g.baseline = 193.001;
  g.disparity_offset = 131.111;
  g.width = 2964;
  g.height = 1;
  g.max_disparity_c = Half::from_twice(280);
  double worst = 0;
  for (int t = 0; t <= 280; ++t) {
    const double dc = 0.5 * t;
    const double back = 0.5 * disparity_from_depth(cyclopean_depth(dc, g), g.focal_length_px, g.baseline,
                                                   g.disparity_offset);
    worst = std::max(worst, std::abs(back - dc));
  }
  return {errors == 0 && worst <= 1e-9,
          fmt("%ld half-grid pairs at N=64, %ld round-trip errors; depth inverse max error %.2e (limit 1e-9)", checked,
              errors, worst)};
}

Outcome depth_bias() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> z(1e-3, 1e3), off(-500, 500), b(0, 300);
  long bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const double zc = z(rng);
    const auto e = lr_depth_bias(zc, off(rng), b(rng));
    bad += !(e.left >= zc && e.right >= zc);
  }
  const auto f = lr_depth_bias(3, 2, 4);
  const bool fixture = f.left == 3.0 && f.right == 5.0;
  return {bad == 0 && fixture,
          fmt("1e5 random inputs: %ld below the cyclopean depth; 3-4-5 fixture gives (%g, %g)", bad, f.left, f.right)};
}

struct RdsStats {
  double worst_exact = 1, worst_iou = 1, worst_half = 1, secs = 0;
};

RdsStats run_rds(double noise) {
  const auto t0 = Clock::now();
  RdsStats st;
  PipelineConfig cfg;
  cfg.parallelism = 4;
  for (int k = 0; k < 20; ++k) {
    SceneSpec spec = random_rds_spec(1000 + std::uint64_t(k), 64, 64, 16);
    spec.noise_sigma = noise;
    const SynthScene sc = generate(spec);
    const MatchResult m = run_match(census_features(sc.left, sc.right, cfg.census), spec.geometry(), cfg);
    g_tally.add(m.cyclopean);
    const SceneScore s = score_scene(m.disparity, sc.gt);
    st.worst_exact = std::min(st.worst_exact, s.exact);
    st.worst_iou = std::min(st.worst_iou, s.occlusion_iou);
    st.worst_half = std::min(st.worst_half, s.within_half);
  }
  st.secs = since(t0);
  return st;
}

Outcome rds_end_to_end() {
  const RdsStats clean = run_rds(0.0), noisy = run_rds(5.0 / 255.0);
  const bool clean_ok = clean.worst_exact >= 0.99 && clean.worst_iou >= 0.9;
  const bool noisy_ok = noisy.worst_half >= 0.95;
  const double secs = clean.secs + noisy.secs;
  return {clean_ok && noisy_ok && secs < 60.0,
          fmt("noiseless worst exact %.4f (need 0.99), worst IoU %.3f (need 0.9) [%s]; noisy worst within 0.5 px %.4f "
              "(need 0.95) [%s]; %.1f s (limit 60 s)",
              clean.worst_exact, clean.worst_iou, clean_ok ? "ok" : "short", noisy.worst_half,
              noisy_ok ? "ok" : "short", secs)};
}

Outcome subpixel() {
  PipelineConfig cfg;
  cfg.dp.subpixel_refine = true;
  cfg.parallelism = 4;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0, worst_inner = 0;
  for (int k = 0; k < 8; ++k) {
    SceneSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.max_disparity_c = Half::from_twice(16);
    spec.seed = 500 + std::uint64_t(k);
    const double a = (u(rng) - 0.5) * 0.16, b = (u(rng) - 0.5) * 0.06;
    // Full disparity 8 at the image centre.
    spec.background = Plane{a, b, 8.0 - 32 * a - 24 * b};
    spec.validate();
    const SynthScene sc = generate(spec);
    const MatchResult m = run_match(census_features(sc.left, sc.right, cfg.census), spec.geometry(), cfg);
    g_tally.add(m.cyclopean);
    worst = std::max(worst, score_scene(m.disparity, sc.gt).rmse);

    // Diagnostic only: the same RMSE without the outer census-window columns.
    double se = 0;
    std::size_t n = 0;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 3; x < spec.width - 3; ++x) {
        if (sc.gt.occluded_left(x, y) || !m.disparity.is_valid(x, y)) continue;
        const double e = m.disparity.values(x, y) - sc.gt.left.values(x, y);
        se += e * e;
        ++n;
      }
    worst_inner = std::max(worst_inner, n ? std::sqrt(se / double(n)) : 0.0);
  }
  return {worst <= 0.25, fmt("8 slanted-plane scenes: worst visible RMSE %.3f px (limit 0.25); "
                             "without 3 border columns %.3f px",
                             worst, worst_inner)};
}

Outcome fill_correctness() {
  // Consistency case: GT = a * prior + b with gaps of several shapes.
  const int w = 40, h = 32;
  Raster<float> raw(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) raw(x, y) = float(std::sin(0.23 * x) * std::cos(0.17 * y) + 0.02 * x);
  const MonocularPrior prior = MonocularPrior::from_raster(raw);
  DisparityMap gt(w, h), dp(w, h);
  std::mt19937_64 rng(5);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gt.set(x, y, 12.0f * prior.values(x, y) + 4.0f);
      const bool hole = (x > 5 && x < 15 && y > 4 && y < 20) || (x > 30 && y < 6) || ((x * 7 + y * 3) % 11 == 0);
      if (!hole) dp.set(x, y, gt.values(x, y));
    }
  const FillResult fr = fill_gaps(prior, dp, FillMode::Poisson);
  double worst = 0;
  for (std::size_t i = 0; i < gt.values.size(); ++i)
    worst = std::max(worst, double(std::abs(fr.map.values.data[i] - gt.values.data[i])));

  // Pass-through and maximum principle on random layouts with a flat prior interior.
  Raster<float> flat(w, h, 0.5f);
  flat(0, 0) = 1.0f;
  flat(w - 1, h - 1) = 0.0f;
  const MonocularPrior fp = MonocularPrior::from_raster(flat);
  std::uniform_real_distribution<double> u(0, 1);
  int pass_violations = 0, max_violations = 0;
  for (int layout = 0; layout < 50; ++layout) {
    DisparityMap d(w, h);
    for (int i = 0; i < w * h; ++i) d.set(i % w, i / w, float(5 + 25 * u(rng)));
    const int gaps = 1 + int(rng() % 6);
    for (int g = 0; g < gaps; ++g) {
      const int x0 = 2 + int(rng() % (w - 10)), y0 = 2 + int(rng() % (h - 10));
      const int gw = 1 + int(rng() % 8), gh = 1 + int(rng() % 8);
      for (int y = y0; y < std::min(y0 + gh, h - 2); ++y)
        for (int x = x0; x < std::min(x0 + gw, w - 2); ++x) d.invalidate(x, y);
    }
    const FillResult r = fill_gaps(fp, d, FillMode::Poisson);
    // Label 4-connected gap regions and check each against its own boundary.
    std::vector<int> label(std::size_t(w * h), -1);
    int regions = 0;
    for (int start = 0; start < w * h; ++start) {
      if (d.valid.data[std::size_t(start)] || label[std::size_t(start)] >= 0) continue;
      std::vector<int> stack{start}, cells;
      label[std::size_t(start)] = regions;
      double lo = 1e30, hi = -1e30;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        cells.push_back(p);
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int qx = p % w + dx, qy = p / w + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const int q = qy * w + qx;
          if (d.valid.data[std::size_t(q)]) {
            lo = std::min(lo, double(d.values.data[std::size_t(q)]));
            hi = std::max(hi, double(d.values.data[std::size_t(q)]));
          } else if (label[std::size_t(q)] < 0) {
            label[std::size_t(q)] = regions;
            stack.push_back(q);
          }
        }
      }
      for (int p : cells) {
        const double v = r.map.values.data[std::size_t(p)];
        max_violations += v < lo - 1e-6 || v > hi + 1e-6;
      }
      ++regions;
    }
    for (std::size_t i = 0; i < d.values.size(); ++i)
      if (d.valid.data[i]) pass_violations += std::memcmp(&d.values.data[i], &r.map.values.data[i], 4) != 0;
  }
  return {worst <= 1e-4 && pass_violations == 0 && max_violations == 0,
          fmt("consistency max error %.2e (limit 1e-4); 50 layouts: %d pass-through and %d maximum-principle "
              "violations",
              worst, pass_violations, max_violations)};
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  int monotone_violations = 0;
  for (int k = 0; k < 20; ++k) {
    DisparityMap g(8, 8, DisparitySource::Gt), e(8, 8);
    for (int i = 0; i < 64; ++i) {
      if (u(rng) > 0.1) g.set(i % 8, i / 8, float(40 * u(rng)));
      if (u(rng) > 0.1) e.set(i % 8, i / 8, float(40 * u(rng)));
    }
    const double tau = 1 + 4 * u(rng);
    const MetricReport r = evaluate(e, g, tau);
    const auto o = test::oracle_metrics(e, g, tau);
    auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    diff(r.avg_error, o.avg);
    diff(r.bad_error, o.bad);
    diff(r.rms_error, o.rms);
    diff(r.mutual_info_sim, o.mi);
    diff(r.ssim_error.value_or(-1), o.ssim_error.value_or(-1));
    diff(r.psnr_sim.value_or(-1), o.psnr.value_or(-1));
    worst = std::max(worst, double(r.evaluated_pixels != o.n));
    double prev = 2;
    for (double t = 0; t <= 40; t += 0.25) {
      const double b = evaluate(e, g, t).bad_error;
      monotone_violations += b > prev;
      prev = b;
    }
  }
  return {worst <= 1e-6 && monotone_violations == 0,
          fmt("20 random 8x8 fixtures: max deviation from the reference %.2e (limit 1e-6); %d BadError monotonicity "
              "violations",
              worst, monotone_violations)};
}

Outcome protocol_compare() {
  test::TempDir dir("acceptance_compare");
  std::vector<DatasetEntry> entries;
  for (int k = 0; k < 4; ++k) {
    const SceneSpec spec = random_rds_spec(2000 + std::uint64_t(k), 64, 48, 16);
    entries.push_back(write_scene(generate(spec), spec, dir / ("s" + std::to_string(k)), "s" + std::to_string(k)));
  }
  PipelineConfig cfg;
  cfg.output_dir = dir / "out";
  cfg.parallelism = 4;
  const auto rows = run_compare(entries, cfg);
  int wins = 0, total = 0;
  double worst_margin = 1e30;
  for (const auto& e : entries) {
    double b2fs = NAN, prior = NAN;
    for (const auto& r : rows) {
      if (r.entry != e.name) continue;
      if (r.method == "B2FS") b2fs = r.report.avg_error;
      if (r.method == "prior_affine") prior = r.report.avg_error;
    }
    ++total;
    wins += b2fs < prior;
    worst_margin = std::min(worst_margin, prior - b2fs);
  }
  return {wins == total && total > 0,
          fmt("%d/%d scenes with B2FS avg_error below the affine-normalised prior (smallest margin %.3f px)", wins,
              total, worst_margin)};
}

Outcome determinism() {
  const SceneSpec spec = random_rds_spec(4242, 64, 64, 16);
  const SynthScene sc = generate(spec);
  const FeaturePair fp = census_features(sc.left, sc.right, CensusOptions{});
  const auto geom = spec.geometry();
  const auto slices = build_slices(fp.left, fp.right, geom, FmNormalization::PerLine, 1);
  const DPParams p;
  const CyclopeanSolution ref = solve_all(slices, geom, p, 1);
  int diffs = 0;
  for (int par : {4, 8}) {
    const auto again = build_slices(fp.left, fp.right, geom, FmNormalization::PerLine, par);
    const CyclopeanSolution s = solve_all(again, geom, p, par);
    for (std::size_t e = 0; e < s.lines.size(); ++e) {
      const auto &a = ref.lines[e], &b = s.lines[e];
      diffs += a.d2 != b.d2 || a.occluded != b.occluded || a.homogeneous != b.homogeneous ||
               std::memcmp(&a.cost, &b.cost, sizeof(double)) != 0 || a.refined_d != b.refined_d;
    }
  }
  g_tally.add(ref);
  return {diffs == 0, fmt("parallelism 1/4/8 on a 64x64 scene: %d differing lines", diffs)};
}

Outcome gc_invariants() {
  // Extra coverage on larger random slices, then everything the suite produced.
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const int width = 8 + int(rng() % 40);
    g_tally.add(solve_line(test::random_slice(rng, width, 1 + int(rng() % std::min(17, width))), DPParams{}));
  }
  return {g_tally.gc1 == 0 && g_tally.local == 0 && g_tally.gc2 == 0,
          fmt("%ld solver lines: %ld GC1 run violations, %ld local violations, %ld GC2 failures", g_tally.lines,
              g_tally.gc1, g_tally.local, g_tally.gc2)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> allowed;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--allow") == 0 && i + 1 < argc) allowed.insert(argv[++i]);
    else {
      std::fprintf(stderr, "usage: acceptance [--allow criterion]...\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dp_optimality", dp_optimality},   {"transform_exactness", transform_exactness},
      {"depth_bias", depth_bias},         {"rds_end_to_end", rds_end_to_end},
      {"subpixel", subpixel},             {"fill_correctness", fill_correctness},
      {"metrics_oracle", metrics_oracle}, {"protocol_compare", protocol_compare},
      {"determinism", determinism},       {"gc_invariants", gc_invariants},
  };
  int unexpected = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const bool known = !o.pass && allowed.count(name);
    std::printf("%s %-20s %s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                known ? " (known red)" : "");
    std::fflush(stdout);
    unexpected += !o.pass && !known;
  }
  return unexpected == 0 ? 0 : 1;
}
