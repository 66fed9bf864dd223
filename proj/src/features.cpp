#include "xds/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "xds/errors.hpp"

namespace xds {

FeatureVolume::FeatureVolume(int h, int w, int c, bool is_doubled, bool is_normalized)
    : height(h), width_samples(w), channels(c), doubled(is_doubled), normalized(is_normalized) {
  if (h < 0 || w < 0 || c < 0) throw DomainError("negative feature volume dimensions");
  data.assign(std::size_t(h) * std::size_t(w) * std::size_t(c), 0.0f);
}

void normalize_l2(std::span<float> v) {
  double ss = 0.0;
  for (float f : v) ss += double(f) * double(f);
  if (ss <= 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (float& f : v) f = static_cast<float>(f * inv);
}

FeatureVolume census_patch_features(const ImageF& image, const CensusOptions& opts) {
  if (image.empty()) throw DomainError("empty image");
  const int r = opts.window_radius;
  if (r < 1) throw DomainError("census window radius must be at least 1");
  const double tie = opts.tie_threshold;
  if (!(tie >= 0.0)) throw DomainError("census tie threshold must be non-negative");
  const int side = 2 * r + 1;
  if (image.width < side || image.height < side)
    throw DomainError("image smaller than the census window");

  const int taps = side * side;
  const int channels = (taps - 1) + taps;
  FeatureVolume fv(image.height, image.width, channels, false, true);
  constexpr double kVarianceFloor = 1e-8;

  std::vector<double> patch(std::size_t(taps), 0.0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      int k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, image.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, image.width - 1);
          patch[std::size_t(k++)] = image(xx, yy);
        }
      }
      const double centre = image(x, y);
      auto out = fv.sample(y, x);
      int c = 0;
      for (int i = 0; i < taps; ++i) {
        if (i == taps / 2) continue;
        const double diff = patch[std::size_t(i)] - centre;
        out[std::size_t(c++)] = diff > tie ? 1.0f : (diff < -tie ? -1.0f : 0.0f);
      }
      double mean = 0.0;
      for (double p : patch) mean += p;
      mean /= taps;
      double var = 0.0;
      for (double p : patch) var += (p - mean) * (p - mean);
      var /= taps;
      if (var >= kVarianceFloor) {
        const double inv = 1.0 / std::sqrt(var);
        for (double p : patch) out[std::size_t(c++)] = static_cast<float>((p - mean) * inv);
      }
      normalize_l2(out);
    }
  }
  return fv;
}

FeatureVolume double_width(const FeatureVolume& fv) {
  if (fv.doubled) throw UsageError("feature volume is already width-doubled");
  const int n = fv.width_samples;
  FeatureVolume out(fv.height, 2 * n, fv.channels, true, fv.normalized);
  for (int y = 0; y < fv.height; ++y) {
    for (int i = 0; i < n; ++i) {
      auto a = fv.sample(y, i);
      auto b = fv.sample(y, std::min(i + 1, n - 1));
      std::copy(a.begin(), a.end(), out.sample(y, 2 * i).begin());
      auto mid = out.sample(y, 2 * i + 1);
      for (std::size_t c = 0; c < mid.size(); ++c) mid[c] = 0.5f * (a[c] + b[c]);
      if (fv.normalized) normalize_l2(mid);
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'B', '2', 'F', 'T'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 2 + 6;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace

void store_feature_volume(const FeatureVolume& fv, const std::filesystem::path& path) {
  std::string buf(kMagic, 4);
  put_u32(buf, kB2ftVersion);
  put_u32(buf, std::uint32_t(fv.height));
  put_u32(buf, std::uint32_t(fv.width_samples));
  put_u32(buf, std::uint32_t(fv.channels));
  buf.push_back(fv.doubled ? 1 : 0);
  buf.push_back(fv.normalized ? 1 : 0);
  buf.append(6, '\0');
  buf.reserve(buf.size() + fv.data.size() * 4);
  for (float f : fv.data) put_u32(buf, std::bit_cast<std::uint32_t>(f));

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), std::streamsize(buf.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

FeatureVolume load_feature_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < 4 || std::memcmp(p, kMagic, 4) != 0) throw ParseError("not a B2FT file");
  if (bytes.size() < kHeaderBytes) throw ParseError("truncated B2FT header");
  const std::uint32_t version = get_u32(p + 4);
  if (version != kB2ftVersion) throw ParseError("unsupported B2FT version " + std::to_string(version));
  const std::uint32_t h = get_u32(p + 8), w = get_u32(p + 12), c = get_u32(p + 16);
  if (p[20] > 1 || p[21] > 1) throw ParseError("invalid B2FT flag byte");
  if (h > (1u << 20) || w > (1u << 20) || c > (1u << 16)) throw ParseError("implausible B2FT dimensions");

  const std::uint64_t count = std::uint64_t(h) * w * c;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < count * 4)
    throw ParseError("truncated B2FT payload: expected " + std::to_string(count) + " floats, found " +
                     std::to_string(payload / 4));
  if (payload > count * 4) throw ParseError("trailing bytes after B2FT payload");

  FeatureVolume fv(int(h), int(w), int(c), p[20] == 1, p[21] == 1);
  const unsigned char* q = p + kHeaderBytes;
  for (std::size_t i = 0; i < fv.data.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(q + 4 * i));
    if (!std::isfinite(f)) throw ParseError("non-finite value in B2FT payload");
    fv.data[i] = f;
  }
  return fv;
}

FeatureVolume load_feature_volume(const std::filesystem::path& path, int expect_height, int expect_width) {
  FeatureVolume fv = load_feature_volume(path);
  if (fv.height != expect_height || fv.pixel_width() != expect_width)
    throw ParseError("B2FT dimension mismatch: file is " + std::to_string(fv.height) + "x" +
                     std::to_string(fv.pixel_width()) + ", image is " + std::to_string(expect_height) + "x" +
                     std::to_string(expect_width));
  return fv;
}

}  // namespace xds
