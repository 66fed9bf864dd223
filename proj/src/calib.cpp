#include "xds/calib.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "xds/errors.hpp"

namespace xds {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double number(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(key + " missing");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (trim(it->second.substr(used)).size() != 0) throw ParseError("");
    return v;
  } catch (...) {
    throw ParseError(key + " is not a number: '" + it->second + "'");
  }
}

}  // namespace

EpipolarGeometry read_calib(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  EpipolarGeometry g;
  const auto cam = kv.find("cam0");
  if (cam == kv.end()) throw ParseError("cam0 missing");
  {
    std::string m = cam->second;
    for (char& c : m)
      if (c == '[' || c == ']' || c == ';') c = ' ';
    std::istringstream ms(m);
    if (!(ms >> g.focal_length_px)) throw ParseError("cam0 matrix unreadable");
  }
  g.baseline = number(kv, "baseline");
  const double w = number(kv, "width");
  const double h = number(kv, "height");
  if (w != std::floor(w) || h != std::floor(h)) throw ParseError("width/height must be integers");
  g.width = int(w);
  g.height = int(h);
  g.disparity_offset = kv.count("doffs") ? number(kv, "doffs") : 0.0;
  const double ndisp = kv.count("ndisp") ? number(kv, "ndisp") : std::floor(g.width / 4.0);
  if (!(ndisp > 0)) throw ParseError("ndisp must be positive");
  g.max_disparity_c = Half::from_twice(2 * int(std::ceil(ndisp / 2.0)));
  return g;
}

void write_calib(const EpipolarGeometry& g, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  char buf[256];
  std::snprintf(buf, sizeof buf, "cam0=[%.17g 0 %.17g; 0 %.17g %.17g; 0 0 1]\n", g.focal_length_px, g.width / 2.0,
                g.focal_length_px, g.height / 2.0);
  os << buf;
  std::snprintf(buf, sizeof buf, "cam1=[%.17g 0 %.17g; 0 %.17g %.17g; 0 0 1]\n", g.focal_length_px, g.width / 2.0,
                g.focal_length_px, g.height / 2.0);
  os << buf;
  std::snprintf(buf, sizeof buf, "doffs=%.17g\nbaseline=%.17g\n", g.disparity_offset, g.baseline);
  os << buf;
  os << "width=" << g.width << "\nheight=" << g.height << "\nndisp=" << g.max_disparity_c.twice << "\n";
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace xds
