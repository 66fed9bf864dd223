#include "xds/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "xds/errors.hpp"

namespace xds {

namespace {

double corner_min(const Layer& L) {
  return std::min({L.disparity.at(L.x0, L.y0), L.disparity.at(L.x1 - 1, L.y0), L.disparity.at(L.x0, L.y1 - 1),
                   L.disparity.at(L.x1 - 1, L.y1 - 1)});
}
double corner_max(const Layer& L) {
  return std::max({L.disparity.at(L.x0, L.y0), L.disparity.at(L.x1 - 1, L.y0), L.disparity.at(L.x0, L.y1 - 1),
                   L.disparity.at(L.x1 - 1, L.y1 - 1)});
}

bool overlap(const Layer& a, const Layer& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

bool is_integral(double v) { return v == std::floor(v); }

}  // namespace

EpipolarGeometry SceneSpec::geometry() const {
  EpipolarGeometry g;
  g.width = width;
  g.height = height;
  g.max_disparity_c = max_disparity_c;
  return g;
}

bool SceneSpec::integer_grid() const {
  if (!background.is_fronto() || !is_integral(background.gamma)) return false;
  return std::all_of(layers.begin(), layers.end(),
                     [](const Layer& L) { return L.disparity.is_fronto() && is_integral(L.disparity.gamma); });
}

void SceneSpec::validate() const {
  geometry().validate();
  if (!(dot_density > 0.0 && dot_density <= 1.0)) throw DomainError("dot density must lie in (0, 1]");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise sigma must be non-negative");
  const double cap = max_disparity_c.twice;
  auto check_plane = [](const Plane& p) {
    if (std::abs(p.alpha) > 0.5) throw DomainError("plane slope alpha must satisfy |alpha| <= 0.5");
  };
  check_plane(background);
  for (double c : {background.at(0, 0), background.at(width - 1, 0), background.at(0, height - 1),
                   background.at(width - 1, height - 1)})
    if (c < 0.0 || c > cap) throw DomainError("background disparity outside [0, 2 d_max]");

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& L = layers[i];
    const std::string tag = "layer " + std::to_string(i);
    check_plane(L.disparity);
    if (L.x0 < 0 || L.y0 < 0 || L.x1 > width || L.y1 > height || L.x1 <= L.x0 || L.y1 <= L.y0)
      throw DomainError(tag + ": rectangle out of bounds or empty");
    const double lo = corner_min(L), hi = corner_max(L);
    if (!(lo > 0.0) || hi > cap) throw DomainError(tag + ": disparity outside (0, 2 d_max]");
    if (double(L.x1 - L.x0) <= hi) throw DomainError(tag + ": narrower than its disparity");
    const double bg = std::max({background.at(L.x0, L.y0), background.at(L.x1 - 1, L.y0),
                                background.at(L.x0, L.y1 - 1), background.at(L.x1 - 1, L.y1 - 1)});
    if (!(lo > bg)) throw DomainError(tag + ": not in front of the background");
    for (std::size_t j = 0; j < i; ++j)
      if (overlap(L, layers[j]) && !(lo > corner_max(layers[j])))
        throw DomainError("overlapping layers with non-increasing disparity (" + tag + ")");
  }
}

namespace {

// Surface 0 is the background; surface k > 0 is layers[k - 1].
class Scene {
 public:
  explicit Scene(const SceneSpec& spec) : spec_(spec), margin_(spec.max_disparity_c.twice + 4) {
    std::mt19937_64 rng(spec.seed);
    const int cols = spec.width + 2 * margin_;
    textures_.resize(spec.layers.size() + 1);
    for (auto& t : textures_) {
      t = Raster<float>(cols, spec.height);
      for (float& v : t.data) v = uniform(rng) < spec.dot_density ? 0.75f : 0.25f;
    }
  }

  int surfaces() const { return int(spec_.layers.size()) + 1; }
  const Plane& plane(int s) const { return s == 0 ? spec_.background : spec_.layers[std::size_t(s) - 1].disparity; }
  double disp(int s, double l, int y) const { return plane(s).at(l, y); }

  // Pixel i spans [i - 1/2, i + 1/2); a layer [x0, x1) covers [x0 - 1/2, x1 - 1/2).
  bool covers_left(int s, double p, int y) const {
    if (s == 0) return true;
    const Layer& L = spec_.layers[std::size_t(s) - 1];
    return y >= L.y0 && y < L.y1 && p >= L.x0 - 0.5 && p < L.x1 - 0.5;
  }

  int front_left(double p, int y) const {
    int best = 0;
    for (int s = 1; s < surfaces(); ++s)
      if (covers_left(s, p, y) && disp(s, p, y) >= disp(best, p, y)) best = s;
    return best;
  }

  // Left coordinate whose point projects to right coordinate q.
  double preimage(int s, double q, int y) const {
    const Plane& P = plane(s);
    return (q + P.beta * y + P.gamma) / (1.0 - P.alpha);
  }

  int front_right(double q, int y) const {
    int best = 0;
    double best_d = disp(0, preimage(0, q, y), y);
    for (int s = 1; s < surfaces(); ++s) {
      const double l = preimage(s, q, y);
      if (!covers_left(s, l, y)) continue;
      const double d = disp(s, l, y);
      if (d >= best_d) best = s, best_d = d;
    }
    return best;
  }

  float texture(int s, double l, int y) const {
    const Raster<float>& t = textures_[std::size_t(s)];
    const double u = l + margin_;
    const int i0 = std::clamp(int(std::floor(u)), 0, t.width - 1);
    const int i1 = std::min(i0 + 1, t.width - 1);
    const double f = std::clamp(u - std::floor(u), 0.0, 1.0);
    return static_cast<float>((1.0 - f) * t(i0, y) + f * t(i1, y));
  }

  // Cyclopean disparity (full pixels) of surface s at cyclopean x.
  double cyclopean_disp(int s, double x, int y) const {
    const Plane& P = plane(s);
    const double l = (x + 0.5 * (P.beta * y + P.gamma)) / (1.0 - 0.5 * P.alpha);
    return P.at(l, y);
  }

 private:
  static double uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

  const SceneSpec& spec_;
  int margin_;
  std::vector<Raster<float>> textures_;
};

// Gives every non-visible cell a placeholder disparity; runs are monotone in
// d2 whenever the flanking values allow it.
void fill_placeholders(std::vector<int>& d2, const std::vector<std::uint8_t>& visible, int nd) {
  const int nx = int(d2.size());
  auto in_range = [nd](int v) { return v >= 0 && v < nd; };
  int i = 0;
  while (i < nx) {
    if (visible[std::size_t(i)]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < nx && !visible[std::size_t(j)]) ++j;
    const int k = j - i;
    bool placed = false;
    auto try_run = [&](int first, int step) {
      for (int m = 0; m < k; ++m)
        if (!in_range(first + step * m)) return false;
      for (int m = 0; m < k; ++m) d2[std::size_t(i + m)] = first + step * m;
      return true;
    };
    if (i > 0 && j < nx) {
      const int p = d2[std::size_t(i) - 1], q = d2[std::size_t(j)];
      const int s = q >= p ? 1 : -1;
      for (int entry : {s, 0, -s}) {
        const int last = p + entry + s * (k - 1);
        if (std::abs(q - last) <= 1 && try_run(p + entry, s)) {
          placed = true;
          break;
        }
      }
    } else if (j < nx) {
      const int q = d2[std::size_t(j)];
      // Walk leftwards from q, descending first.
      for (int s : {1, -1})
        for (int exit : {s, 0}) {
          if (placed) break;
          const int first = q - exit - s * (k - 1);
          placed = try_run(first, s);
        }
    } else if (i > 0) {
      const int p = d2[std::size_t(i) - 1];
      for (int s : {-1, 1})
        for (int entry : {s, 0}) {
          if (placed) break;
          placed = try_run(p + entry, s);
        }
    }
    if (!placed) {
      const int base = i > 0 ? d2[std::size_t(i) - 1] : (j < nx ? d2[std::size_t(j)] : 0);
      for (int m = 0; m < k; ++m) d2[std::size_t(i + m)] = std::clamp(base, 0, nd - 1);
    }
    i = j;
  }
}

double gaussian(std::mt19937_64& rng) {
  const double u1 = (double(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = double(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

SynthScene generate(const SceneSpec& spec) {
  spec.validate();
  const Scene scene(spec);
  const int w = spec.width, h = spec.height;
  const EpipolarGeometry geom = spec.geometry();
  const int nd = geom.nd(), nx = geom.nx();

  SynthScene out;
  out.left = ImageF(w, h);
  out.right = ImageF(w, h);
  out.gt.left = DisparityMap(w, h, DisparitySource::Gt);
  out.gt.occluded_left = Mask(w, h, 0);
  out.gt.occluded_right = Mask(w, h, 0);
  out.gt.cyclopean.geometry = geom;
  out.gt.cyclopean.lines.resize(std::size_t(h));

  for (int y = 0; y < h; ++y) {
    for (int l = 0; l < w; ++l) {
      const int s = scene.front_left(l, y);
      const double D = scene.disp(s, l, y);
      out.left(l, y) = scene.texture(s, l, y);
      out.gt.left.set(l, y, static_cast<float>(D));
      const double r = l - D;
      out.gt.occluded_left(l, y) = (r < 0.0 || scene.front_right(r, y) != s) ? 1 : 0;
    }
    for (int r = 0; r < w; ++r) {
      const int s = scene.front_right(r, y);
      const double l = scene.preimage(s, r, y);
      out.right(r, y) = scene.texture(s, l, y);
      out.gt.occluded_right(r, y) = (l > w - 1 || scene.front_left(l, y) != s) ? 1 : 0;
    }

    std::vector<std::uint8_t> visible(std::size_t(nx), 0);
    std::vector<int> d2(std::size_t(nx), 0);
    std::vector<double> exact(std::size_t(nx), 0.0);
    for (int x2 = 0; x2 < nx; ++x2) {
      const double x = 0.5 * x2;
      for (int s = scene.surfaces() - 1; s >= 0; --s) {
        const double D = scene.cyclopean_disp(s, x, y);
        const double l = x + 0.5 * D, r = x - 0.5 * D;
        if (r < 0.0 || l > w - 1) continue;
        if (scene.front_left(l, y) != s || scene.front_right(r, y) != s) continue;
        visible[std::size_t(x2)] = 1;
        d2[std::size_t(x2)] = std::clamp(int(std::lround(D)), 0, nd - 1);
        exact[std::size_t(x2)] = 0.5 * D;
        break;
      }
    }
    fill_placeholders(d2, visible, nd);
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(nx));
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = visible[i] ? 0 : 1;
    LineSolution line = LineSolution::from_states(y, nd, std::move(occ), std::move(d2));
    for (std::size_t i = 0; i < exact.size(); ++i)
      if (visible[i]) line.refined_d[i] = exact[i];
    out.gt.cyclopean.lines[std::size_t(y)] = std::move(line);
  }

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    for (ImageF* img : {&out.left, &out.right})
      for (float& v : img->data) v = static_cast<float>(std::clamp(v + spec.noise_sigma * gaussian(rng), 0.0, 1.0));
  }
  return out;
}

GtReport verify_gt(const GroundTruth& gt) {
  GtReport rep;
  for (const auto& line : gt.cyclopean.lines) {
    const GcReport r = check_gc(line);
    ++rep.lines_checked;
    rep.gc2_failures += r.gc2_ok ? 0 : 1;
    rep.gc1_violations += int(r.gc1_violations.size()) + r.local_violations;
    for (auto v : line.homogeneous) rep.homogeneous_cells += v;
  }
  return rep;
}

SceneSpec random_rds_spec(std::uint64_t seed, int width, int height, int max_full_disparity, int max_layers) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return lo + int(rng() % std::uint64_t(hi - lo + 1)); };
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.max_disparity_c = Half::from_twice(max_full_disparity);
  spec.geometry().validate();
  if (width < std::max(12, max_full_disparity + 2) || height < 1)
    throw DomainError("random scene needs width >= max(12, max disparity + 2)");
  spec.seed = rng();
  spec.dot_density = 0.5;
  const int bg = pick(0, std::max(0, max_full_disparity / 4));
  spec.background = Plane::fronto(bg);

  const int n = pick(1, std::max(1, max_layers));
  int prev = bg;
  for (int i = 0; i < n && prev < max_full_disparity; ++i) {
    const int d = pick(prev + 1, std::min(max_full_disparity, prev + std::max(2, max_full_disparity / n)));
    Layer L;
    const int lw = pick(std::max(12, d + 2), std::max(std::max(12, d + 2), width / 2));
    const int lh = pick(std::min(10, height), std::max(std::min(10, height), height / 2));
    L.x0 = pick(0, width - lw);
    L.y0 = pick(0, height - lh);
    L.x1 = L.x0 + lw;
    L.y1 = L.y0 + lh;
    L.disparity = Plane::fronto(d);
    spec.layers.push_back(L);
    prev = d;
  }
  spec.validate();
  return spec;
}

}  // namespace xds
