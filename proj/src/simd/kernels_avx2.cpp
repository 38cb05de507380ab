// AVX2 variants. This translation unit is built with -mavx2 and must not
// include headers that define inline functions shared with scalar code, or
// the linker may fold AVX2 instantiations into the scalar path.

#include "globus/simd/kernels.hpp"

#include <immintrin.h>

#include <limits>

namespace globus::simd::detail {
namespace {

constexpr std::size_t kLanes = 8;

void subtract_nodata(const float* a, const float* b, float* out, std::size_t n, float nodata) {
    const __m256 nd = _mm256_set1_ps(nodata);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 x = _mm256_loadu_ps(a + i);
        const __m256 y = _mm256_loadu_ps(b + i);
        const __m256 hole = _mm256_or_ps(_mm256_cmp_ps(x, nd, _CMP_EQ_OQ), _mm256_cmp_ps(y, nd, _CMP_EQ_OQ));
        _mm256_storeu_ps(out + i, _mm256_blendv_ps(_mm256_sub_ps(x, y), nd, hole));
    }
    for (; i < n; ++i) {
        const float x = a[i];
        const float y = b[i];
        out[i] = (x == nodata || y == nodata) ? nodata : x - y;
    }
}

void clamp_nonnegative(const float* in, float* out, std::size_t n, float nodata) {
    const __m256 nd = _mm256_set1_ps(nodata);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 v = _mm256_loadu_ps(in + i);
        const __m256 hole = _mm256_cmp_ps(v, nd, _CMP_EQ_OQ);
        _mm256_storeu_ps(out + i, _mm256_blendv_ps(_mm256_max_ps(v, zero), nd, hole));
    }
    for (; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : (v > 0.0f ? v : 0.0f);
    }
}

MinMax minmax_valid(const float* in, std::size_t n, float nodata) {
    const float inf = std::numeric_limits<float>::infinity();
    const __m256 nd = _mm256_set1_ps(nodata);
    const __m256 pinf = _mm256_set1_ps(inf);
    const __m256 ninf = _mm256_set1_ps(-inf);
    __m256 lo = pinf;
    __m256 hi = ninf;
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 v = _mm256_loadu_ps(in + i);
        const __m256 hole = _mm256_cmp_ps(v, nd, _CMP_EQ_OQ);
        lo = _mm256_min_ps(_mm256_blendv_ps(v, pinf, hole), lo);
        hi = _mm256_max_ps(_mm256_blendv_ps(v, ninf, hole), hi);
        count += kLanes - static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_ps(hole)));
    }
    alignas(32) float lo_lanes[kLanes];
    alignas(32) float hi_lanes[kLanes];
    _mm256_store_ps(lo_lanes, lo);
    _mm256_store_ps(hi_lanes, hi);
    float lo_s = inf;
    float hi_s = -inf;
    for (std::size_t k = 0; k < kLanes; ++k) {
        lo_s = lo_lanes[k] < lo_s ? lo_lanes[k] : lo_s;
        hi_s = hi_lanes[k] > hi_s ? hi_lanes[k] : hi_s;
    }
    for (; i < n; ++i) {
        const float v = in[i];
        if (v == nodata) continue;
        lo_s = v < lo_s ? v : lo_s;
        hi_s = v > hi_s ? v : hi_s;
        ++count;
    }
    if (count == 0) return {};
    return {lo_s, hi_s, count};
}

inline __m256 affine_pd(__m256 v, __m256d a, __m256d b, bool divide) {
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    __m256d rlo, rhi;
    if (divide) {
        rlo = _mm256_div_pd(_mm256_sub_pd(lo, a), b);
        rhi = _mm256_div_pd(_mm256_sub_pd(hi, a), b);
    } else {
        rlo = _mm256_add_pd(_mm256_mul_pd(lo, b), a);
        rhi = _mm256_add_pd(_mm256_mul_pd(hi, b), a);
    }
    return _mm256_insertf128_ps(_mm256_castps128_ps256(_mm256_cvtpd_ps(rlo)), _mm256_cvtpd_ps(rhi), 1);
}

void normalize(const float* in, float* out, std::size_t n, double min, double range, float nodata) {
    const __m256 nd = _mm256_set1_ps(nodata);
    const __m256d a = _mm256_set1_pd(min);
    const __m256d b = _mm256_set1_pd(range);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 v = _mm256_loadu_ps(in + i);
        const __m256 hole = _mm256_cmp_ps(v, nd, _CMP_EQ_OQ);
        _mm256_storeu_ps(out + i, _mm256_blendv_ps(affine_pd(v, a, b, true), nd, hole));
    }
    for (; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : static_cast<float>((static_cast<double>(v) - min) / range);
    }
}

void denormalize(const float* in, float* out, std::size_t n, double min, double range, float nodata) {
    const __m256 nd = _mm256_set1_ps(nodata);
    const __m256d a = _mm256_set1_pd(min);
    const __m256d b = _mm256_set1_pd(range);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 v = _mm256_loadu_ps(in + i);
        const __m256 hole = _mm256_cmp_ps(v, nd, _CMP_EQ_OQ);
        _mm256_storeu_ps(out + i, _mm256_blendv_ps(affine_pd(v, a, b, false), nd, hole));
    }
    for (; i < n; ++i) {
        const float v = in[i];
        out[i] = v == nodata ? nodata : static_cast<float>(static_cast<double>(v) * range + min);
    }
}

void axpy(float a, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        const __m256 y0 = _mm256_add_ps(_mm256_loadu_ps(y + i), _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
        const __m256 y1 = _mm256_add_ps(_mm256_loadu_ps(y + i + kLanes),
                                        _mm256_mul_ps(va, _mm256_loadu_ps(x + i + kLanes)));
        _mm256_storeu_ps(y + i, y0);
        _mm256_storeu_ps(y + i + kLanes, y1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), _mm256_mul_ps(va, _mm256_loadu_ps(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

float dot(const float* x, const float* y, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
        acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(_mm256_loadu_ps(x + i + kLanes), _mm256_loadu_ps(y + i + kLanes)));
    }
    for (; i + kLanes <= n; i += kLanes) {
        acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    const __m256 acc = _mm256_add_ps(acc0, acc1);
    __m128 s = _mm_add_ps(_mm256_castps256_ps128(acc), _mm256_extractf128_ps(acc, 1));
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_movehdup_ps(s));
    float total = _mm_cvtss_f32(s);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

void relu(float* x, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* act, float* grad, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256 live = _mm256_cmp_ps(_mm256_loadu_ps(act + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(grad + i, _mm256_and_ps(live, _mm256_loadu_ps(grad + i)));
    }
    for (; i < n; ++i) grad[i] = act[i] > 0.0f ? grad[i] : 0.0f;
}

constexpr std::size_t kLanesPd = 4;

void lincomb4(const double* r0, const double* r1, const double* r2, const double* r3, const double* w,
              float* out, std::size_t n) {
    const __m256d w0 = _mm256_set1_pd(w[0]);
    const __m256d w1 = _mm256_set1_pd(w[1]);
    const __m256d w2 = _mm256_set1_pd(w[2]);
    const __m256d w3 = _mm256_set1_pd(w[3]);
    std::size_t j = 0;
    for (; j + kLanesPd <= n; j += kLanesPd) {
        __m256d acc = _mm256_mul_pd(w0, _mm256_loadu_pd(r0 + j));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w1, _mm256_loadu_pd(r1 + j)));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w2, _mm256_loadu_pd(r2 + j)));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w3, _mm256_loadu_pd(r3 + j)));
        _mm_storeu_ps(out + j, _mm256_cvtpd_ps(acc));
    }
    for (; j < n; ++j) {
        double acc = w[0] * r0[j];
        acc = acc + w[1] * r1[j];
        acc = acc + w[2] * r2[j];
        acc = acc + w[3] * r3[j];
        out[j] = static_cast<float>(acc);
    }
}

void gather4(const float* src, const std::int32_t* idx, const double* weights, double* out, std::size_t n) {
    std::size_t j = 0;
    for (; j + kLanesPd <= n; j += kLanesPd) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t k = 0; k < 4; ++k) {
            const __m128i ik = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k * n + j));
            const __m256d v = _mm256_cvtps_pd(_mm_i32gather_ps(src, ik, 4));
            const __m256d term = _mm256_mul_pd(_mm256_loadu_pd(weights + k * n + j), v);
            acc = k == 0 ? term : _mm256_add_pd(acc, term);
        }
        _mm256_storeu_pd(out + j, acc);
    }
    for (; j < n; ++j) {
        double acc = weights[j] * static_cast<double>(src[idx[j]]);
        acc = acc + weights[n + j] * static_cast<double>(src[idx[n + j]]);
        acc = acc + weights[2 * n + j] * static_cast<double>(src[idx[2 * n + j]]);
        acc = acc + weights[3 * n + j] * static_cast<double>(src[idx[3 * n + j]]);
        out[j] = acc;
    }
}

}  // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable table{
        Isa::Avx2,
        &subtract_nodata,
        &clamp_nonnegative,
        &minmax_valid,
        &normalize,
        &denormalize,
        &axpy,
        &dot,
        &relu,
        &relu_backward,
        &lincomb4,
        &gather4,
    };
    return table;
}

}  // namespace globus::simd::detail
