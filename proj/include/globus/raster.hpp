#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace globus {

/// Placement of a grid in the shared planar meter frame.
///
/// (origin_x, origin_y) is the outer (south-west) corner of cell (0, 0).
/// Columns grow eastwards and rows grow northwards, so cell (col, row)
/// covers [ox + col*cs, ox + (col+1)*cs) x [oy + row*cs, oy + (row+1)*cs).
struct GeoRef {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;

    friend bool operator==(const GeoRef&, const GeoRef&) = default;
};

inline constexpr float kDefaultNodata = -9999.0f;

/// Georeferenced 2-D grid of 32-bit cells, row-major with row 0 southmost.
class Raster {
public:
    Raster(int width, int height, GeoRef georef, float nodata = kDefaultNodata, float fill = 0.0f);
    Raster(int width, int height, GeoRef georef, float nodata, std::vector<float> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    const GeoRef& georef() const noexcept { return georef_; }
    double origin_x() const noexcept { return georef_.origin_x; }
    double origin_y() const noexcept { return georef_.origin_y; }
    double cell_size() const noexcept { return georef_.cell_size; }
    float nodata() const noexcept { return nodata_; }

    float at(int col, int row) const noexcept { return values_[index(col, row)]; }
    float& at(int col, int row) noexcept { return values_[index(col, row)]; }
    bool is_nodata(int col, int row) const noexcept { return at(col, row) == nodata_; }

    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }
    std::span<const float> row(int r) const noexcept {
        return std::span<const float>(values_).subspan(index(0, r), static_cast<std::size_t>(width_));
    }
    std::span<float> row(int r) noexcept {
        return std::span<float>(values_).subspan(index(0, r), static_cast<std::size_t>(width_));
    }

    double center_x(int col) const noexcept { return georef_.origin_x + (col + 0.5) * georef_.cell_size; }
    double center_y(int row) const noexcept { return georef_.origin_y + (row + 0.5) * georef_.cell_size; }
    double extent_x() const noexcept { return width_ * georef_.cell_size; }
    double extent_y() const noexcept { return height_ * georef_.cell_size; }

    /// Same dimensions and georeference.
    bool aligned_with(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && georef_ == other.georef_;
    }

    std::size_t index(int col, int row) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_;
    int height_;
    GeoRef georef_;
    float nodata_;
    std::vector<float> values_;
};

/// Min-max scale parameters, kept so predictions can be mapped back to meters.
struct NormalizationParams {
    double min_value = 0.0;
    double max_value = 0.0;

    friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

struct Normalized {
    Raster raster;
    NormalizationParams params;
};

/// Throws ErrorKind::Alignment unless both rasters share dimensions and georeference.
void require_aligned(const Raster& a, const Raster& b, const char* what);

Raster subtract(const Raster& minuend, const Raster& subtrahend);
Raster clamp_nonnegative(const Raster& r);

/// Catmull-Rom bicubic resampling to a new cell size over the same extent.
/// Samples at target cell centers; source indices are clamped at the edges.
Raster resample_cubic(const Raster& src, double target_cell_size);

/// Maps valid cells to [0, 1]. With `params` absent the range is taken from
/// the raster; a zero range maps every valid cell to 0.
Normalized minmax_normalize(const Raster& r, std::optional<NormalizationParams> params = std::nullopt);
Raster denormalize(const Raster& r, const NormalizationParams& params);

/// Block mean over factor x factor windows, ignoring nodata.
Raster downsample_average(const Raster& src, int factor);

/// Sum and count of valid cells with 64-bit accumulation in row-major order.
struct ValidSum {
    double sum = 0.0;
    std::size_t count = 0;
};
ValidSum valid_sum(const Raster& r);

}  // namespace globus
