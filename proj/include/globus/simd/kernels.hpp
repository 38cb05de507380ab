#pragma once

// Data-parallel inner loops used by the raster and network code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant chosen at runtime. Variants are bit-identical to the scalar
// reference except `dot`, whose lane-wise reduction order differs (tested to
// a relative tolerance instead).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace globus::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct MinMax {
    float min = 0.0f;
    float max = 0.0f;
    std::size_t count = 0;  // cells that were not nodata
};

/// Raw kernel entry points. Lengths are element counts; buffers may alias
/// only where noted.
struct KernelTable {
    Isa isa;

    // out = (a == nodata || b == nodata) ? nodata : a - b. out may alias a or b.
    void (*subtract_nodata)(const float* a, const float* b, float* out, std::size_t n, float nodata);
    // out = v == nodata ? nodata : max(0, v). out may alias in.
    void (*clamp_nonnegative)(const float* in, float* out, std::size_t n, float nodata);
    MinMax (*minmax_valid)(const float* in, std::size_t n, float nodata);
    // out = float((double(v) - min) / range), nodata preserved. out may alias in.
    void (*normalize)(const float* in, float* out, std::size_t n, double min, double range, float nodata);
    // out = float(double(v) * range + min), nodata preserved. out may alias in.
    void (*denormalize)(const float* in, float* out, std::size_t n, double min, double range, float nodata);

    // y += a * x
    void (*axpy)(float a, const float* x, float* y, std::size_t n);
    float (*dot)(const float* x, const float* y, std::size_t n);
    // x = max(0, x)
    void (*relu)(float* x, std::size_t n);
    // grad = act > 0 ? grad : 0
    void (*relu_backward)(const float* act, float* grad, std::size_t n);

    // Separable 4-tap filtering, accumulated in double.
    // out[j] = float(((w[0]*r0[j] + w[1]*r1[j]) + w[2]*r2[j]) + w[3]*r3[j])
    void (*lincomb4)(const double* r0, const double* r1, const double* r2, const double* r3,
                     const double* w, float* out, std::size_t n);
    // out[j] = ((w0[j]*src[i0[j]] + w1[j]*src[i1[j]]) + w2[j]*src[i2[j]]) + w3[j]*src[i3[j]]
    // idx and weights are structure-of-arrays: idx[k*n + j], weights[k*n + j].
    void (*gather4)(const float* src, const std::int32_t* idx, const double* weights, double* out,
                    std::size_t n);
};

bool isa_available(Isa isa) noexcept;

/// Best ISA supported by this CPU, unless overridden by `force_isa` or the
/// GLOBUS_ISA environment variable ("scalar" or "avx2").
Isa active_isa() noexcept;

/// Pin (or with nullopt, release) the kernel set. Forcing an unavailable ISA
/// throws.
void force_isa(std::optional<Isa> isa);

const KernelTable& kernels() noexcept;
const KernelTable& kernels(Isa isa);

// Span front-ends over the active table.
void subtract_nodata(std::span<const float> a, std::span<const float> b, std::span<float> out, float nodata);
void clamp_nonnegative(std::span<const float> in, std::span<float> out, float nodata);
MinMax minmax_valid(std::span<const float> in, float nodata);
void normalize(std::span<const float> in, std::span<float> out, double min, double range, float nodata);
void denormalize(std::span<const float> in, std::span<float> out, double min, double range, float nodata);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(GLOBUS_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
}  // namespace detail

}  // namespace globus::simd
