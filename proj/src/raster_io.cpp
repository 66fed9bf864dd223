#include "xds/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "xds/disparity.hpp"
#include "xds/errors.hpp"

namespace xds {

std::string_view to_string(DisparitySource s) {
  switch (s) {
    case DisparitySource::Dp: return "dp";
    case DisparitySource::Filled: return "filled";
    case DisparitySource::Gt: return "gt";
    case DisparitySource::External: return "external";
  }
  return "unknown";
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), std::streamsize(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

// Netpbm-style header tokenizer: whitespace separated, '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& b) : buf_(b) {}
  std::string token() {
    skip();
    std::size_t start = pos_;
    while (pos_ < buf_.size() && !std::isspace(static_cast<unsigned char>(buf_[pos_]))) ++pos_;
    return buf_.substr(start, pos_ - start);
  }
  // Consumes exactly one whitespace byte ending the header.
  std::size_t payload_start() {
    if (pos_ >= buf_.size() || !std::isspace(static_cast<unsigned char>(buf_[pos_])))
      throw ParseError("malformed header terminator");
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

int parse_dim(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v <= 0 || v > (1 << 20)) throw ParseError("");
    return int(v);
  } catch (...) {
    throw ParseError(std::string("bad ") + what + " in header: '" + tok + "'");
  }
}

}  // namespace

Raster<float> read_pfm(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  HeaderReader hr(bytes);
  const std::string magic = hr.token();
  if (magic == "PF") throw ParseError("color PFM unsupported");
  if (magic != "Pf") throw ParseError("bad PFM header: magic '" + magic + "'");
  const int w = parse_dim(hr.token(), "width");
  const int h = parse_dim(hr.token(), "height");
  const std::string scale_tok = hr.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (...) {
    throw ParseError("bad PFM header: scale '" + scale_tok + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw ParseError("bad PFM header: zero scale");
  const bool little = scale < 0.0;
  const std::size_t start = hr.payload_start();
  const std::size_t need = std::size_t(w) * std::size_t(h) * 4;
  if (bytes.size() - start < need) throw ParseError("truncated PFM payload");

  Raster<float> r(w, h);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      const unsigned char* q = p + (std::size_t(row) * std::size_t(w) + std::size_t(x)) * 4;
      const std::uint32_t u = little ? (std::uint32_t(q[0]) | std::uint32_t(q[1]) << 8 | std::uint32_t(q[2]) << 16 |
                                        std::uint32_t(q[3]) << 24)
                                     : (std::uint32_t(q[3]) | std::uint32_t(q[2]) << 8 | std::uint32_t(q[1]) << 16 |
                                        std::uint32_t(q[0]) << 24);
      const float v = std::bit_cast<float>(u);
      if (std::isnan(v)) throw ParseError("NaN in PFM payload");
      r(x, y) = v;
    }
  }
  return r;
}

void write_pfm(const Raster<float>& r, const std::filesystem::path& path, bool little_endian) {
  std::string out = "Pf\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n" +
                    (little_endian ? "-1.0" : "1.0") + "\n";
  out.reserve(out.size() + r.size() * 4);
  for (int y = r.height - 1; y >= 0; --y) {
    for (int x = 0; x < r.width; ++x) {
      const float v = r(x, y);
      if (std::isnan(v)) throw DomainError("cannot write NaN to PFM");
      const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) {
        const int shift = little_endian ? 8 * b : 8 * (3 - b);
        out.push_back(static_cast<char>((u >> shift) & 0xffu));
      }
    }
  }
  spit(path, out);
}

namespace {

ImageF read_netpbm(const std::string& bytes) {
  HeaderReader hr(bytes);
  const std::string magic = hr.token();
  const bool color = magic == "P6";
  if (magic != "P5" && !color) throw ParseError("unsupported netpbm type '" + magic + "'");
  const int w = parse_dim(hr.token(), "width");
  const int h = parse_dim(hr.token(), "height");
  const int maxval = parse_dim(hr.token(), "maxval");
  if (maxval > 65535) throw ParseError("PGM maxval above 65535");
  const std::size_t start = hr.payload_start();
  const int bps = maxval > 255 ? 2 : 1;
  const int spp = color ? 3 : 1;
  const std::size_t need = std::size_t(w) * std::size_t(h) * std::size_t(bps * spp);
  if (bytes.size() - start < need) throw ParseError("truncated image payload");

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  auto sample = [&](std::size_t idx) -> double {
    return bps == 1 ? p[idx] : double(std::uint32_t(p[2 * idx]) << 8 | p[2 * idx + 1]);
  };
  ImageF img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v;
    if (color) v = 0.299 * sample(3 * i) + 0.587 * sample(3 * i + 1) + 0.114 * sample(3 * i + 2);
    else v = sample(i);
    img.data[i] = static_cast<float>(v / maxval);
  }
  return img;
}

ImageF read_png_gray(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw ParseError("cannot decode PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  ImageF img(int(image.width), int(image.height));
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data[i] = static_cast<float>((0.299 * buf[3 * i] + 0.587 * buf[3 * i + 1] + 0.114 * buf[3 * i + 2]) / 255.0);
  return img;
}

}  // namespace

ImageF read_pgm(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  if (bytes.rfind("P5", 0) != 0) throw ParseError("not a binary PGM: " + path.string());
  return read_netpbm(bytes);
}

void write_pgm(const ImageF& img, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (float v : img.data) {
    const double c = std::clamp(double(v), 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(c * 255.0 + 0.5))));
  }
  spit(path, out);
}

void write_mask_pgm(const Mask& m, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  for (auto v : m.data) out.push_back(static_cast<char>(v ? 255 : 0));
  spit(path, out);
}

ImageF read_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char head[8] = {};
  is.read(head, 8);
  is.close();
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(head, kPngSig, 8) == 0) return read_png_gray(path);
  if (head[0] == 'P' && (head[1] == '5' || head[1] == '6')) return read_netpbm(slurp(path));
  throw ParseError("unrecognised image format: " + path.string());
}

void write_png(const Raster<Rgb>& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width);
  image.height = png_uint_32(img.height);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf;
  buf.reserve(img.size() * 3);
  for (const auto& px : img.data) buf.insert(buf.end(), px.begin(), px.end());
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace xds
