#pragma once

#include "globus/footprints.hpp"
#include "globus/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace globus {

/// Flat-roof building: a footprint extruded to one height.
struct Lod1Building {
    BuildingFootprint footprint;
    double height = 0.0;        // meters, >= 0
    std::size_t n_cells = 0;    // cells that fed the zonal statistic
};

enum class ZonalStat { Mean, Median };

struct Lod1Warning {
    std::int64_t id = 0;
    std::string message;
};

struct Lod1Result {
    std::vector<Lod1Building> buildings;  // ascending id
    std::vector<Lod1Warning> warnings;
};

/// Zonal reduction of `pred` over each footprint's owned mask cells, clamped
/// at zero. Footprints that own no cells get height 0 and a warning.
Lod1Result assign_heights(const Raster& pred, const FootprintMask& mask,
                          const std::vector<BuildingFootprint>& footprints, ZonalStat stat = ZonalStat::Mean);

/// GeoJSON with a `height_m` property per feature. Reading a feature without
/// `height_m` throws a FormatError naming its id.
void write_lod1(const std::vector<Lod1Building>& buildings, const std::filesystem::path& path);
std::vector<Lod1Building> read_lod1(const std::filesystem::path& path);
std::vector<Lod1Building> parse_lod1(const std::string& text);

}  // namespace globus
