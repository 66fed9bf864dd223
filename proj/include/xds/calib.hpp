#pragma once

#include <filesystem>

#include "xds/geometry.hpp"

namespace xds {

/// Middlebury calib.txt: f = cam0[0][0]; baseline, width, height required;
/// doffs defaults to 0 and ndisp to width / 4.  max_disparity_c = ceil(ndisp / 2).
EpipolarGeometry read_calib(const std::filesystem::path& path);
void write_calib(const EpipolarGeometry& geom, const std::filesystem::path& path);

}  // namespace xds
