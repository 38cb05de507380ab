#pragma once

#include "globus/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace globus {

enum class PointLabel : std::uint8_t { Ground, Building, Other };

std::string_view to_string(PointLabel label) noexcept;

struct LabeledPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    PointLabel label = PointLabel::Other;
};

struct Extent {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
};

class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<LabeledPoint> points);

    const std::vector<LabeledPoint>& points() const noexcept { return points_; }
    const Extent& extent() const noexcept { return extent_; }
    bool empty() const noexcept { return points_.empty(); }
    std::size_t count(PointLabel label) const noexcept;

private:
    std::vector<LabeledPoint> points_;
    Extent extent_;
};

/// Set of accepted labels.
class LabelFilter {
public:
    constexpr LabelFilter() = default;
    constexpr LabelFilter(std::initializer_list<PointLabel> labels) {
        for (auto l : labels) bits_ |= bit(l);
    }
    constexpr bool accepts(PointLabel l) const noexcept { return (bits_ & bit(l)) != 0; }

private:
    static constexpr std::uint8_t bit(PointLabel l) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(l)); }
    std::uint8_t bits_ = 0;
};

/// Mean z of the accepted points falling in each cell of `templ`; cells with
/// no points are nodata. Throws ErrorKind::EmptyCloud when no point passes the
/// filter.
Raster grid_elevation(const PointCloud& pc, LabelFilter filter, const Raster& templ);

/// Each nodata cell takes the value of the nearest valid cell (Euclidean over
/// cell centers, ties to the lowest row-major index).
Raster fill_voids_nearest(const Raster& r);

/// Building DSM minus void-filled ground DEM, clamped at zero; cells without
/// building returns are 0.
Raster build_reference_ndsm(const PointCloud& pc, const Raster& templ);

/// CSV with header `x,y,z,label`, label one of ground/building/other.
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const PointCloud& pc, const std::filesystem::path& path);

}  // namespace globus
