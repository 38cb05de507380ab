#include "globus/error.hpp"
#include "globus/raster.hpp"
#include "globus/raster_io.hpp"
#include "globus/simd/kernels.hpp"

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

using namespace globus;

namespace {

Raster random_raster(std::mt19937_64& rng, int w, int h, double cs = 1.0, double lo = -20.0, double hi = 80.0) {
    std::uniform_real_distribution<float> v(static_cast<float>(lo), static_cast<float>(hi));
    Raster r(w, h, GeoRef{500.0, 1200.0, cs});
    for (float& x : r.values()) x = v(rng);
    return r;
}

bool bit_equal(const Raster& a, const Raster& b) {
    return a.aligned_with(b) && std::bit_cast<std::uint32_t>(a.nodata()) == std::bit_cast<std::uint32_t>(b.nodata()) &&
           std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

// Catmull-Rom weights, written out independently of the library.
double cr(double t) {
    t = std::abs(t);
    if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
    if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
    return 0.0;
}

}  // namespace

TEST_CASE("subtract") {
    Raster dsm(1, 1, GeoRef{}), dem(1, 1, GeoRef{});
    dsm.at(0, 0) = 110.0f;
    dem.at(0, 0) = 100.0f;
    CHECK(subtract(dsm, dem).at(0, 0) == 10.0f);
    dem.at(0, 0) = dem.nodata();
    CHECK(subtract(dsm, dem).is_nodata(0, 0));

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_raster(rng, 3, 3), b = random_raster(rng, 3, 3);
        a.at(trial % 3, 1) = a.nodata();
        const Raster d = subtract(a, b);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                if (a.is_nodata(c, r) || b.is_nodata(c, r)) CHECK(d.is_nodata(c, r));
                else CHECK(d.at(c, r) == a.at(c, r) - b.at(c, r));
            }
    }
    CHECK_THROWS_AS(subtract(Raster(2, 2, GeoRef{}), Raster(2, 3, GeoRef{})), Error);
}

TEST_CASE("subtract then add recovers the minuend") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_raster(rng, 17, 5), b = random_raster(rng, 17, 5);
        const Raster d = subtract(a, b);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs((d.values()[i] + b.values()[i]) - a.values()[i]) <= 1e-5f * 100.0f);
        }
    }
}

TEST_CASE("clamp_nonnegative") {
    Raster r(3, 1, GeoRef{});
    r.at(0, 0) = -2.5f;
    r.at(1, 0) = 7.0f;
    r.at(2, 0) = r.nodata();
    const Raster c = clamp_nonnegative(r);
    CHECK(c.at(0, 0) == 0.0f);
    CHECK(c.at(1, 0) == 7.0f);
    CHECK(c.is_nodata(2, 0));
}

TEST_CASE("resample_cubic reproduces constants") {
    Raster src(4, 3, GeoRef{0.0, 0.0, 30.0}, kDefaultNodata, 42.0f);
    const Raster out = resample_cubic(src, 1.0);
    CHECK(out.width() == 120);
    CHECK(out.height() == 90);
    CHECK(out.cell_size() == 1.0);
    for (float v : out.values()) REQUIRE(v == 42.0f);
}

TEST_CASE("resample_cubic reproduces affine fields on interior cells") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = coef(rng), b = coef(rng), c = 50.0 + coef(rng);
        const double cs = 4.0;
        Raster src(10, 8, GeoRef{100.0, 200.0, cs});
        for (int r = 0; r < src.height(); ++r)
            for (int col = 0; col < src.width(); ++col)
                src.at(col, r) = static_cast<float>(a * (src.center_x(col) - 100.0) + b * (src.center_y(r) - 200.0) + c);
        const Raster out = resample_cubic(src, 1.0);
        int checked = 0;
        for (int r = 0; r < out.height(); ++r)
            for (int col = 0; col < out.width(); ++col) {
                const double u = (out.center_x(col) - 100.0) / cs - 0.5;
                const double v = (out.center_y(r) - 200.0) / cs - 0.5;
                if (std::floor(u) < 1 || std::floor(u) + 2 > src.width() - 1) continue;
                if (std::floor(v) < 1 || std::floor(v) + 2 > src.height() - 1) continue;
                const double want = a * (out.center_x(col) - 100.0) + b * (out.center_y(r) - 200.0) + c;
                CHECK(std::abs(out.at(col, r) - want) <= 1e-4 * std::max(1.0, std::abs(want)));
                ++checked;
            }
        CHECK(checked > 100);
    }
}

TEST_CASE("resample_cubic matches a direct convolution oracle") {
    std::mt19937_64 rng(4);
    const auto src = random_raster(rng, 6, 5, 3.0);
    const Raster out = resample_cubic(src, 1.0);
    auto clampi = [](long i, long n) { return std::clamp(i, 0L, n - 1); };
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c) {
            const double u = (out.center_x(c) - src.origin_x()) / 3.0 - 0.5;
            const double v = (out.center_y(r) - src.origin_y()) / 3.0 - 0.5;
            const long iu = static_cast<long>(std::floor(u)), iv = static_cast<long>(std::floor(v));
            double s = 0.0;
            for (long j = iv - 1; j <= iv + 2; ++j)
                for (long i = iu - 1; i <= iu + 2; ++i)
                    s += cr(u - i) * cr(v - j) * src.at(clampi(i, src.width()), clampi(j, src.height()));
            CHECK(std::abs(out.at(c, r) - s) <= 1e-4);
        }
}

TEST_CASE("resample_cubic overshoot stays within the kernel bound") {
    Raster src(2, 2, GeoRef{0.0, 0.0, 4.0});
    src.at(0, 0) = 0.0f;
    src.at(1, 0) = 10.0f;
    src.at(0, 1) = 10.0f;
    src.at(1, 1) = 0.0f;
    const Raster out = resample_cubic(src, 1.0);
    for (float v : out.values()) {
        CHECK(v >= -5.0f);
        CHECK(v <= 15.0f);
    }
    CHECK_THROWS_AS(resample_cubic(src, 3.0), Error);
    CHECK_THROWS_AS(resample_cubic(src, 0.0), Error);
}

TEST_CASE("minmax_normalize and denormalize") {
    Raster r(3, 1, GeoRef{});
    r.at(0, 0) = 0.0f;
    r.at(1, 0) = 5.0f;
    r.at(2, 0) = 10.0f;
    const auto n = minmax_normalize(r);
    CHECK(n.params.min_value == 0.0);
    CHECK(n.params.max_value == 10.0);
    CHECK(n.raster.at(0, 0) == 0.0f);
    CHECK(n.raster.at(1, 0) == 0.5f);
    CHECK(n.raster.at(2, 0) == 1.0f);
    CHECK(denormalize(Raster(1, 1, GeoRef{}, kDefaultNodata, 0.5f), {0.0, 10.0}).at(0, 0) == 5.0f);

    Raster flat(3, 1, GeoRef{}, kDefaultNodata, 7.0f);
    const auto f = minmax_normalize(flat);
    CHECK(f.params.min_value == 7.0);
    CHECK(f.params.max_value == 7.0);
    for (float v : f.raster.values()) CHECK(v == 0.0f);
    const Raster back = denormalize(f.raster, f.params);
    for (float v : back.values()) CHECK(v == 7.0f);
    const Raster constant = denormalize(r, {3.0, 3.0});
    for (float v : constant.values()) CHECK(v == 3.0f);
}

TEST_CASE("normalize round trip and range") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto r = random_raster(rng, 8, 8);
        r.at(trial % 8, 3) = r.nodata();
        const auto n = minmax_normalize(r);
        const Raster back = denormalize(n.raster, n.params);
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r.values()[i] == r.nodata()) {
                CHECK(n.raster.values()[i] == r.nodata());
                CHECK(back.values()[i] == r.nodata());
                continue;
            }
            CHECK(n.raster.values()[i] >= 0.0f);
            CHECK(n.raster.values()[i] <= 1.0f);
            CHECK(std::abs(back.values()[i] - r.values()[i]) <= 1e-5 * std::max(1.0f, std::abs(r.values()[i])));
        }
    }
}

TEST_CASE("downsample_average") {
    Raster r(2, 2, GeoRef{});
    r.at(0, 0) = 1.0f;
    r.at(1, 0) = 2.0f;
    r.at(0, 1) = 3.0f;
    r.at(1, 1) = 4.0f;
    const Raster d = downsample_average(r, 2);
    CHECK(d.width() == 1);
    CHECK(d.cell_size() == 2.0);
    CHECK(d.at(0, 0) == 2.5f);

    const Raster flat = downsample_average(Raster(6, 6, GeoRef{}, kDefaultNodata, 3.25f), 3);
    for (float v : flat.values()) CHECK(v == 3.25f);

    std::mt19937_64 rng(6);
    const auto src = random_raster(rng, 8, 8);
    const Raster ds = downsample_average(src, 4);
    for (int br = 0; br < 2; ++br)
        for (int bc = 0; bc < 2; ++bc) {
            double s = 0.0;
            for (int r2 = 0; r2 < 4; ++r2)
                for (int c2 = 0; c2 < 4; ++c2) s += src.at(bc * 4 + c2, br * 4 + r2);
            CHECK(ds.at(bc, br) == doctest::Approx(s / 16.0).epsilon(1e-6));
        }
    CHECK_THROWS_AS(downsample_average(src, 3), Error);
}

TEST_CASE("valid_sum skips nodata") {
    Raster r(3, 1, GeoRef{}, kDefaultNodata, 2.0f);
    r.at(1, 0) = r.nodata();
    const auto s = valid_sum(r);
    CHECK(s.sum == 4.0);
    CHECK(s.count == 2);
}

TEST_CASE("raster kernels agree across instruction sets") {
    if (!simd::isa_available(simd::Isa::Avx2)) return;
    std::mt19937_64 rng(7);
    auto a = random_raster(rng, 37, 23, 30.0), b = random_raster(rng, 37, 23, 30.0);
    const Raster smooth = a;
    a.at(3, 3) = a.nodata();
    simd::force_isa(simd::Isa::Scalar);
    const Raster s1 = clamp_nonnegative(subtract(a, b));
    const Raster s2 = resample_cubic(smooth, 5.0);
    const auto s3 = minmax_normalize(a);
    simd::force_isa(simd::Isa::Avx2);
    const Raster v1 = clamp_nonnegative(subtract(a, b));
    const Raster v2 = resample_cubic(smooth, 5.0);
    const auto v3 = minmax_normalize(a);
    simd::force_isa(std::nullopt);
    CHECK(bit_equal(s1, v1));
    CHECK(bit_equal(s2, v2));
    CHECK(bit_equal(s3.raster, v3.raster));
}

TEST_CASE("GLBR round trip is bit exact") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto r = random_raster(rng, 1 + trial, 1 + 2 * trial, 0.5 + trial);
        r.at(0, 0) = r.nodata();
        std::stringstream ss;
        write_glbr(r, ss);
        CHECK(bit_equal(read_glbr(ss), r));
    }
    const auto dir = std::filesystem::temp_directory_path() / "globus_test_raster";
    std::filesystem::create_directories(dir);
    const auto r = random_raster(rng, 5, 4);
    write_raster(r, dir / "r.glbr");
    CHECK(bit_equal(read_raster(dir / "r.glbr"), r));
    std::filesystem::remove_all(dir);
}

TEST_CASE("GLBR rejects bad input") {
    std::stringstream bad("XXXX0000000000000000000000000000000000000000");
    CHECK_THROWS_AS(read_glbr(bad), FormatError);
    Raster r(2, 2, GeoRef{});
    std::stringstream ss;
    write_glbr(r, ss);
    std::string bytes = ss.str();
    bytes.pop_back();
    std::stringstream cut(bytes);
    try {
        read_glbr(cut);
        FAIL("truncated file accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }
}

TEST_CASE("ASCII grid parses nodata and orients rows north to south") {
    std::stringstream in(
        "ncols 3\nnrows 3\nxllcorner 10\nyllcorner 20\ncellsize 2\nNODATA_value -9999\n"
        "1 2 3\n4 -9999 6\n7 8 9\n");
    const Raster r = read_ascii_grid(in);
    CHECK(r.width() == 3);
    CHECK(r.origin_x() == 10.0);
    CHECK(r.origin_y() == 20.0);
    CHECK(r.cell_size() == 2.0);
    CHECK(r.is_nodata(1, 1));
    CHECK(r.at(0, 2) == 1.0f);  // first line is the northern row
    CHECK(r.at(2, 0) == 9.0f);

    std::stringstream out;
    write_ascii_grid(r, out);
    const Raster back = read_ascii_grid(out);
    CHECK(back == r);

    std::stringstream broken("ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n4 5\n");
    CHECK_THROWS_AS(read_ascii_grid(broken), Error);
}
