#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "xds/raster.hpp"

namespace xds {

/// Single-channel "Pf" PFM.  Rows are stored bottom-up; a negative scale
/// marks little-endian data.  +inf passes through unchanged, NaN is rejected.
Raster<float> read_pfm(const std::filesystem::path& path);
void write_pfm(const Raster<float>& r, const std::filesystem::path& path, bool little_endian = true);

/// Binary P5 PGM (8 or 16 bit) scaled to [0, 1].
ImageF read_pgm(const std::filesystem::path& path);
/// Writes values in [0, 1] as 8-bit P5.
void write_pgm(const ImageF& img, const std::filesystem::path& path);
/// Writes a 0/1 mask as 0/255.
void write_mask_pgm(const Mask& m, const std::filesystem::path& path);

/// PGM, PPM or PNG; colour input is converted with Rec. 601 luma weights.
ImageF read_image(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;
void write_png(const Raster<Rgb>& img, const std::filesystem::path& path);

}  // namespace xds
