#include "globus/simd/kernels.hpp"
#include "globus/simd/scalar.hpp"

#include <limits>

namespace globus::simd::detail {
namespace {

void subtract_nodata(const float* a, const float* b, float* out, std::size_t n, float nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        const float x = a[i];
        const float y = b[i];
        out[i] = (x == nodata || y == nodata) ? nodata : x - y;
    }
}

void clamp_nonnegative(const float* in, float* out, std::size_t n, float nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : (v > 0.0f ? v : 0.0f);
    }
}

MinMax minmax_valid(const float* in, std::size_t n, float nodata) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const float v = in[i];
        if (v == nodata) continue;
        lo = v < lo ? v : lo;
        hi = v > hi ? v : hi;
        ++count;
    }
    if (count == 0) return {};
    return {lo, hi, count};
}

void normalize(const float* in, float* out, std::size_t n, double min, double range, float nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : static_cast<float>((static_cast<double>(v) - min) / range);
    }
}

void denormalize(const float* in, float* out, std::size_t n, double min, double range, float nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : static_cast<float>(static_cast<double>(v) * range + min);
    }
}

void lincomb4(const double* r0, const double* r1, const double* r2, const double* r3, const double* w,
              float* out, std::size_t n) {
    const double w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3];
    for (std::size_t j = 0; j < n; ++j) {
        double acc = w0 * r0[j];
        acc = acc + w1 * r1[j];
        acc = acc + w2 * r2[j];
        acc = acc + w3 * r3[j];
        out[j] = static_cast<float>(acc);
    }
}

void gather4(const float* src, const std::int32_t* idx, const double* weights, double* out, std::size_t n) {
    const std::int32_t* i0 = idx;
    const std::int32_t* i1 = idx + n;
    const std::int32_t* i2 = idx + 2 * n;
    const std::int32_t* i3 = idx + 3 * n;
    const double* w0 = weights;
    const double* w1 = weights + n;
    const double* w2 = weights + 2 * n;
    const double* w3 = weights + 3 * n;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = w0[j] * static_cast<double>(src[i0[j]]);
        acc = acc + w1[j] * static_cast<double>(src[i1[j]]);
        acc = acc + w2[j] * static_cast<double>(src[i2[j]]);
        acc = acc + w3[j] * static_cast<double>(src[i3[j]]);
        out[j] = acc;
    }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{
        Isa::Scalar,
        &subtract_nodata,
        &clamp_nonnegative,
        &minmax_valid,
        &normalize,
        &denormalize,
        &scalar::axpy<float>,
        &scalar::dot<float>,
        &scalar::relu<float>,
        &scalar::relu_backward<float>,
        &lincomb4,
        &gather4,
    };
    return table;
}

}  // namespace globus::simd::detail
