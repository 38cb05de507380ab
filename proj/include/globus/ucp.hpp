#pragma once

// Gridded urban canopy parameters aggregated from LoD-1 buildings and the
// 1-m footprint mask.
//
// The UCP grid shares the mask origin; its cell size is an integer multiple
// of the mask cell size. Cells on the east/north edge may be partial, and
// their total area A_t is clipped to the mask extent. Buildings belong to the
// cell holding their footprint centroid; plan areas come from mask pixels.

#include "globus/footprints.hpp"
#include "globus/lod1.hpp"
#include "globus/raster.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace globus {

struct UcpGeometry {
    GeoRef georef;            // origin of the mask, cell size = resolution
    int cols = 0;
    int rows = 0;
    int factor = 1;           // mask cells per UCP cell along each axis
    int mask_width = 0;
    int mask_height = 0;
    double mask_cell_size = 1.0;

    double resolution() const noexcept { return georef.cell_size; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(cols) * rows; }
    std::size_t index(int col, int row) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col);
    }
    /// A_t: cell area clipped to the mask extent.
    double cell_area(int col, int row) const noexcept;
    /// Cell holding point (x, y); false when outside the grid.
    bool locate(double x, double y, int& col, int& row) const noexcept;

    friend bool operator==(const UcpGeometry&, const UcpGeometry&) = default;
};

/// Throws ErrorKind::Alignment unless `resolution` is a positive integer
/// multiple of the mask cell size.
UcpGeometry ucp_geometry(const Raster& mask, double resolution);

struct HistogramSpec {
    double bin_width = 5.0;
    double cap = 75.0;  // heights >= cap land in the final open bin

    std::size_t bins() const;  // regular bins plus the open bin
    std::size_t bin_of(double height) const;

    friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

struct HeightStats {
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t count = 0;
};

std::vector<double> lambda_p(const FootprintMask& mask, const UcpGeometry& g);
std::vector<double> lambda_b(const std::vector<Lod1Building>& buildings, const FootprintMask& mask,
                             const UcpGeometry& g);
std::vector<HeightStats> height_stats(const std::vector<Lod1Building>& buildings, const UcpGeometry& g);
std::vector<std::vector<double>> height_histogram(const std::vector<Lod1Building>& buildings, const UcpGeometry& g,
                                                  const HistogramSpec& spec = {});
std::vector<double> lambda_f(const std::vector<Lod1Building>& buildings, const UcpGeometry& g,
                             double wind_direction);
/// Footprint-area-weighted mean height per cell.
std::vector<double> area_weighted_height(const std::vector<Lod1Building>& buildings, const UcpGeometry& g);

struct UcpCell {
    std::size_t building_count = 0;
    double mean_height = 0.0;
    double std_height = 0.0;
    double area_weighted_height = 0.0;
    std::vector<double> histogram;  // fractions per bin
    double frac_below_5m = 0.0;
    double lambda_p = 0.0;
    double lambda_b = 0.0;
    std::vector<double> lambda_f;   // one per wind direction
};

struct UcpGrid {
    UcpGeometry geometry;
    HistogramSpec histogram;
    std::vector<double> directions;
    std::vector<UcpCell> cells;  // row-major, row 0 southmost

    const UcpCell& cell(int col, int row) const { return cells[geometry.index(col, row)]; }

    /// Scalar field names in export order: count, mean, std,
    /// area_weighted_mean, lambda_p, lambda_b, lambda_f_<deg>..., frac_below_5m.
    std::vector<std::string> scalar_fields() const;
    /// Value of a scalar field or `hist_bin_<k>`. Throws ErrorKind::Input on an
    /// unknown name.
    double field(const UcpCell& c, const std::string& name) const;
};

UcpGrid aggregate_all(const std::vector<Lod1Building>& buildings, const FootprintMask& mask, double resolution,
                      const std::vector<double>& directions, const HistogramSpec& spec = {});

/// Shortest decimal form used in file and field names ("300", "22.5").
std::string format_number(double v);

/// Writes `ucp_{name}_{res}m.glbr` per scalar field, `ucp_{res}m.csv`, and the
/// `ucp_{res}m.json` geometry sidecar that `read_ucp` needs.
void write_ucp(const UcpGrid& grid, const std::filesystem::path& dir);
UcpGrid read_ucp(const std::filesystem::path& dir, double resolution);

}  // namespace globus
