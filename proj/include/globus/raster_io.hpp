#pragma once

// Raster file formats.
//
// GLBR v1 (binary, little-endian):
//   "GLBR" | u16 version=1 | u32 width | u32 height | f64 origin_x |
//   f64 origin_y | f64 cell_size | f32 nodata | width*height f32, row-major
//
// ESRI ASCII grid: ncols/nrows/xllcorner/yllcorner/cellsize/NODATA_value
// header followed by rows from north to south.

#include "globus/raster.hpp"

#include <filesystem>
#include <iosfwd>

namespace globus {

inline constexpr std::uint16_t kGlbrVersion = 1;
inline constexpr std::size_t kGlbrHeaderBytes = 42;

void write_glbr(const Raster& r, std::ostream& out);
Raster read_glbr(std::istream& in);

void write_ascii_grid(const Raster& r, std::ostream& out);
Raster read_ascii_grid(std::istream& in);

/// Format chosen by extension: ".asc" is ESRI ASCII, anything else GLBR.
void write_raster(const Raster& r, const std::filesystem::path& path);
Raster read_raster(const std::filesystem::path& path);

}  // namespace globus
