#include "globus/simd/kernels.hpp"

#include "globus/error.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace globus::simd {
namespace {

// -1 = no override; otherwise static_cast<int>(Isa).
std::atomic<int> g_forced{-1};

bool cpu_has_avx2() noexcept {
#if defined(GLOBUS_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa detect() noexcept {
    Isa best = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    if (const char* env = std::getenv("GLOBUS_ISA")) {
        const std::string want(env);
        if (want == "scalar") return Isa::Scalar;
        if (want == "avx2" && best == Isa::Avx2) return Isa::Avx2;
    }
    return best;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return cpu_has_avx2();
    }
    return false;
}

Isa active_isa() noexcept {
    const int forced = g_forced.load(std::memory_order_relaxed);
    if (forced >= 0) return static_cast<Isa>(forced);
    static const Isa detected = detect();
    return detected;
}

void force_isa(std::optional<Isa> isa) {
    if (isa && !isa_available(*isa)) {
        throw Error(ErrorKind::Config, "ISA " + std::string(to_string(*isa)) + " not available on this CPU");
    }
    g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) {
    if (!isa_available(isa)) {
        throw Error(ErrorKind::Config, "ISA " + std::string(to_string(isa)) + " not available on this CPU");
    }
#if defined(GLOBUS_HAVE_AVX2)
    if (isa == Isa::Avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

const KernelTable& kernels() noexcept {
#if defined(GLOBUS_HAVE_AVX2)
    if (active_isa() == Isa::Avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

void subtract_nodata(std::span<const float> a, std::span<const float> b, std::span<float> out, float nodata) {
    assert(a.size() == b.size() && a.size() == out.size());
    kernels().subtract_nodata(a.data(), b.data(), out.data(), out.size(), nodata);
}

void clamp_nonnegative(std::span<const float> in, std::span<float> out, float nodata) {
    assert(in.size() == out.size());
    kernels().clamp_nonnegative(in.data(), out.data(), out.size(), nodata);
}

MinMax minmax_valid(std::span<const float> in, float nodata) {
    return kernels().minmax_valid(in.data(), in.size(), nodata);
}

void normalize(std::span<const float> in, std::span<float> out, double min, double range, float nodata) {
    assert(in.size() == out.size());
    kernels().normalize(in.data(), out.data(), out.size(), min, range, nodata);
}

void denormalize(std::span<const float> in, std::span<float> out, double min, double range, float nodata) {
    assert(in.size() == out.size());
    kernels().denormalize(in.data(), out.data(), out.size(), min, range, nodata);
}

}  // namespace globus::simd
