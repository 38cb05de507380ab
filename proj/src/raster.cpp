#include "globus/raster.hpp"

#include "globus/error.hpp"
#include "globus/simd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace globus {
namespace {

void validate_shape(int width, int height, const GeoRef& g, float nodata) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::Shape, "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                                          std::to_string(height));
    }
    if (!(g.cell_size > 0.0) || !std::isfinite(g.cell_size)) {
        throw Error(ErrorKind::Input, "raster cell size must be positive and finite");
    }
    if (!std::isfinite(g.origin_x) || !std::isfinite(g.origin_y)) {
        throw Error(ErrorKind::Input, "raster origin must be finite");
    }
    if (!std::isfinite(nodata)) {
        throw Error(ErrorKind::Input, "nodata sentinel must be finite");
    }
}

// Catmull-Rom (a = -0.5) weights for taps at offsets -1, 0, 1, 2 from floor(u).
std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    };
}

struct Taps {
    std::vector<std::int32_t> index;  // SoA, 4 * n
    std::vector<double> weight;       // SoA, 4 * n
};

// Tap table for `n_out` samples at target cell centers, source length `n_src`.
Taps build_taps(int n_out, int n_src, double ratio) {
    Taps taps;
    const auto n = static_cast<std::size_t>(n_out);
    taps.index.resize(4 * n);
    taps.weight.resize(4 * n);
    for (int j = 0; j < n_out; ++j) {
        const double u = (j + 0.5) * ratio - 0.5;
        const double base = std::floor(u);
        const auto w = catmull_rom(u - base);
        for (int k = 0; k < 4; ++k) {
            const auto src = static_cast<std::int64_t>(base) - 1 + k;
            const auto clamped = std::clamp<std::int64_t>(src, 0, n_src - 1);
            taps.index[k * n + j] = static_cast<std::int32_t>(clamped);
            taps.weight[k * n + j] = w[k];
        }
    }
    return taps;
}

}  // namespace

Raster::Raster(int width, int height, GeoRef georef, float nodata, float fill)
    : width_(width), height_(height), georef_(georef), nodata_(nodata) {
    validate_shape(width, height, georef, nodata);
    if (!std::isfinite(fill)) throw Error(ErrorKind::Input, "raster fill value must be finite");
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Raster::Raster(int width, int height, GeoRef georef, float nodata, std::vector<float> values)
    : width_(width), height_(height), georef_(georef), nodata_(nodata), values_(std::move(values)) {
    validate_shape(width, height, georef, nodata);
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorKind::Shape, "raster value count " + std::to_string(values_.size()) + " != " +
                                          std::to_string(width) + "x" + std::to_string(height));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw Error(ErrorKind::Input, "non-finite raster cell at index " + std::to_string(i));
        }
    }
}

void require_aligned(const Raster& a, const Raster& b, const char* what) {
    if (!a.aligned_with(b)) {
        throw Error(ErrorKind::Alignment, std::string(what) + ": rasters differ in dimensions or georeference (" +
                                              std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                                              std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

Raster subtract(const Raster& minuend, const Raster& subtrahend) {
    require_aligned(minuend, subtrahend, "subtract");
    Raster out(minuend.width(), minuend.height(), minuend.georef(), minuend.nodata());
    if (subtrahend.nodata() == minuend.nodata()) {
        simd::subtract_nodata(minuend.values(), subtrahend.values(), out.values(), minuend.nodata());
        return out;
    }
    const auto a = minuend.values();
    const auto b = subtrahend.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = (a[i] == minuend.nodata() || b[i] == subtrahend.nodata()) ? minuend.nodata() : a[i] - b[i];
    }
    return out;
}

Raster clamp_nonnegative(const Raster& r) {
    Raster out = r;
    simd::clamp_nonnegative(r.values(), out.values(), r.nodata());
    return out;
}

Raster resample_cubic(const Raster& src, double target_cell_size) {
    if (!(target_cell_size > 0.0) || !std::isfinite(target_cell_size)) {
        throw Error(ErrorKind::Input, "target cell size must be positive");
    }
    const double ratio = target_cell_size / src.cell_size();
    const double wx = src.extent_x() / target_cell_size;
    const double wy = src.extent_y() / target_cell_size;
    const double out_w = std::round(wx);
    const double out_h = std::round(wy);
    if (out_w < 1 || out_h < 1 || std::abs(out_w - wx) > 1e-6 * std::max(1.0, wx) ||
        std::abs(out_h - wy) > 1e-6 * std::max(1.0, wy)) {
        throw Error(ErrorKind::Shape, "extent " + std::to_string(src.extent_x()) + "x" +
                                          std::to_string(src.extent_y()) + " m is not a multiple of target cell size " +
                                          std::to_string(target_cell_size));
    }
    const int ow = static_cast<int>(out_w);
    const int oh = static_cast<int>(out_h);
    const Taps cols = build_taps(ow, src.width(), ratio);
    const Taps rows = build_taps(oh, src.height(), ratio);

    // Every cell in rows_used x cols_used lands in some stencil.
    std::vector<char> col_used(static_cast<std::size_t>(src.width()), 0);
    std::vector<char> row_used(static_cast<std::size_t>(src.height()), 0);
    for (auto i : cols.index) col_used[static_cast<std::size_t>(i)] = 1;
    for (auto i : rows.index) row_used[static_cast<std::size_t>(i)] = 1;
    for (int r = 0; r < src.height(); ++r) {
        if (!row_used[static_cast<std::size_t>(r)]) continue;
        for (int c = 0; c < src.width(); ++c) {
            if (col_used[static_cast<std::size_t>(c)] && src.is_nodata(c, r)) {
                throw Error(ErrorKind::Void, "nodata in interpolation stencil at cell (" + std::to_string(c) + ", " +
                                                 std::to_string(r) + ")");
            }
        }
    }

    const auto& k = simd::kernels();
    const auto n = static_cast<std::size_t>(ow);
    std::vector<double> horizontal(static_cast<std::size_t>(src.height()) * n, 0.0);
    for (int r = 0; r < src.height(); ++r) {
        if (!row_used[static_cast<std::size_t>(r)]) continue;
        k.gather4(src.row(r).data(), cols.index.data(), cols.weight.data(), horizontal.data() + r * n, n);
    }

    Raster out(ow, oh, GeoRef{src.origin_x(), src.origin_y(), target_cell_size}, src.nodata());
    const auto m = static_cast<std::size_t>(oh);
    for (int r = 0; r < oh; ++r) {
        const auto j = static_cast<std::size_t>(r);
        const double w[4] = {rows.weight[j], rows.weight[m + j], rows.weight[2 * m + j], rows.weight[3 * m + j]};
        const double* r0 = horizontal.data() + static_cast<std::size_t>(rows.index[j]) * n;
        const double* r1 = horizontal.data() + static_cast<std::size_t>(rows.index[m + j]) * n;
        const double* r2 = horizontal.data() + static_cast<std::size_t>(rows.index[2 * m + j]) * n;
        const double* r3 = horizontal.data() + static_cast<std::size_t>(rows.index[3 * m + j]) * n;
        k.lincomb4(r0, r1, r2, r3, w, out.row(r).data(), n);
    }
    return out;
}

Normalized minmax_normalize(const Raster& r, std::optional<NormalizationParams> params) {
    NormalizationParams p;
    if (params) {
        p = *params;
        if (!(p.max_value >= p.min_value)) throw Error(ErrorKind::Input, "normalization max < min");
    } else {
        const auto mm = simd::minmax_valid(r.values(), r.nodata());
        if (mm.count == 0) throw Error(ErrorKind::EmptyStatistics, "minmax_normalize: raster has no valid cells");
        p = {mm.min, mm.max};
    }
    Raster out = r;
    const double range = p.max_value - p.min_value;
    if (range > 0.0) {
        simd::normalize(r.values(), out.values(), p.min_value, range, r.nodata());
    } else {
        for (float& v : out.values()) {
            if (v != r.nodata()) v = 0.0f;
        }
    }
    return {std::move(out), p};
}

Raster denormalize(const Raster& r, const NormalizationParams& params) {
    Raster out = r;
    simd::denormalize(r.values(), out.values(), params.min_value, params.max_value - params.min_value, r.nodata());
    return out;
}

Raster downsample_average(const Raster& src, int factor) {
    if (factor < 1) throw Error(ErrorKind::Input, "downsample factor must be >= 1");
    if (src.width() % factor != 0 || src.height() % factor != 0) {
        throw Error(ErrorKind::Shape, "raster " + std::to_string(src.width()) + "x" + std::to_string(src.height()) +
                                          " not divisible by factor " + std::to_string(factor));
    }
    const int ow = src.width() / factor;
    const int oh = src.height() / factor;
    Raster out(ow, oh, GeoRef{src.origin_x(), src.origin_y(), src.cell_size() * factor}, src.nodata());
    std::vector<double> sum(static_cast<std::size_t>(ow));
    std::vector<std::size_t> count(static_cast<std::size_t>(ow));
    for (int orow = 0; orow < oh; ++orow) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (int r = orow * factor; r < (orow + 1) * factor; ++r) {
            const auto row = src.row(r);
            for (int c = 0; c < src.width(); ++c) {
                const float v = row[static_cast<std::size_t>(c)];
                if (v == src.nodata()) continue;
                const auto oc = static_cast<std::size_t>(c / factor);
                sum[oc] += v;
                ++count[oc];
            }
        }
        auto out_row = out.row(orow);
        for (std::size_t oc = 0; oc < out_row.size(); ++oc) {
            out_row[oc] = count[oc] ? static_cast<float>(sum[oc] / static_cast<double>(count[oc])) : src.nodata();
        }
    }
    return out;
}

ValidSum valid_sum(const Raster& r) {
    ValidSum s;
    for (float v : r.values()) {
        if (v == r.nodata()) continue;
        s.sum += v;
        ++s.count;
    }
    return s;
}

}  // namespace globus
