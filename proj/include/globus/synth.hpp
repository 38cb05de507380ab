#pragma once

// Synthetic city: random rectangular buildings on flat or sloped terrain,
// with the inputs a real run would take (labeled points, coarse DSM/DEM,
// population, footprints) and the 1-m truth they were derived from.

#include "globus/footprints.hpp"
#include "globus/pointcloud.hpp"
#include "globus/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace globus {

struct SyntheticCitySpec {
    double extent = 2000.0;          // meters per side, rounded up to whole coarse cells
    int building_count = 150;
    double footprint_min = 20.0;     // rectangle side range, meters
    double footprint_max = 60.0;
    double height_min = 3.0;
    double height_max = 60.0;
    double gap = 4.0;                // minimum spacing between buildings
    double slope = 0.0;              // terrain rise per meter eastwards
    double ground_elevation = 100.0;
    double tree_fraction = 0.02;     // share of open cells carrying vegetation returns
    int coarse_factor = 30;
    double noise_sigma = 2.0;        // Gaussian noise on the coarse nDSM
    double cell_size = 1.0;
    std::uint64_t seed = 42;
};

/// Throws ErrorKind::Config when ranges are unordered or non-positive.
void validate(const SyntheticCitySpec& spec);

struct SyntheticCity {
    std::vector<BuildingFootprint> footprints;  // ids 1..n
    std::vector<double> heights;                // parallel to footprints
    Raster truth_ndsm;
    Raster dem;
    PointCloud points;
    Raster coarse_ndsm;
    Raster coarse_dem;
    Raster coarse_dsm;
    Raster population;
};

/// Deterministic per seed. Throws ErrorKind::Packing when the buildings cannot
/// be placed within the retry budget.
SyntheticCity generate_city(const SyntheticCitySpec& spec);

/// footprints.geojson, truth_lod1.geojson, truth_ndsm.glbr, points.csv,
/// coarse_ndsm.glbr, coarse_dsm.glbr, coarse_dem.glbr, population.glbr.
void write_city(const SyntheticCity& city, const std::filesystem::path& dir);

}  // namespace globus
