#pragma once

#include "globus/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace globus {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

using Ring = std::vector<Point2>;

/// Planar building outline in meters. Rings are implicitly closed; ids are
/// positive (0 marks "no building" in masks).
struct BuildingFootprint {
    std::int64_t id = 0;
    Ring exterior;
    std::vector<Ring> holes;
};

/// Throws ErrorKind::Geometry (naming the id) on fewer than three distinct
/// vertices, self-intersection, zero area, or holes outside the exterior.
void validate_footprint(const BuildingFootprint& f);

double polygon_area(const BuildingFootprint& f);
double polygon_perimeter(const BuildingFootprint& f);
Point2 centroid(const BuildingFootprint& f);

/// Width of the exterior ring seen by a wind blowing from `wind_direction`
/// degrees (meteorological convention: 0 = from north, 90 = from east).
double projected_width(const BuildingFootprint& f, double wind_direction);

/// Binary building mask with per-cell ownership (0 where value is 0).
struct FootprintMask {
    Raster raster;
    std::vector<std::int64_t> source_ids;

    std::int64_t owner(int col, int row) const noexcept { return source_ids[raster.index(col, row)]; }
};

/// Cell-center sampling with the even-odd rule. A center exactly on a left or
/// bottom edge is inside; on a right or top edge it is outside. Overlaps are
/// owned by the highest id. Ids of footprints lying entirely outside the
/// template are appended to `outside` when given.
FootprintMask rasterize(const std::vector<BuildingFootprint>& footprints, const Raster& templ,
                        std::vector<std::int64_t>* outside = nullptr);

/// Even-odd point-in-polygon test over the exterior and every hole, with the
/// same boundary convention as `rasterize`.
bool contains(const BuildingFootprint& f, Point2 p);

// GeoJSON FeatureCollection of Polygons in planar meters. Each feature needs
// a positive integer `id` property; `height_m` is optional here.
struct FootprintFeature {
    BuildingFootprint footprint;
    std::optional<double> height_m;
};

std::vector<FootprintFeature> parse_footprint_geojson(const std::string& text);
std::vector<BuildingFootprint> read_footprints(const std::filesystem::path& path);
void write_footprints(const std::vector<BuildingFootprint>& footprints, const std::filesystem::path& path);

}  // namespace globus
