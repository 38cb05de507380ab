#include "globus/error.hpp"
#include "globus/pointcloud.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>

using namespace globus;

namespace {

LabeledPoint pt(double x, double y, double z, PointLabel l) { return {x, y, z, l}; }

}  // namespace

TEST_CASE("grid_elevation averages per cell and honours the filter") {
    const Raster templ(2, 2, GeoRef{0.0, 0.0, 1.0});
    const PointCloud pc({pt(0.2, 0.3, 10.0, PointLabel::Building), pt(0.7, 0.9, 12.0, PointLabel::Building),
                         pt(1.5, 1.5, 5.0, PointLabel::Ground)});
    const Raster g = grid_elevation(pc, {PointLabel::Building}, templ);
    CHECK(g.at(0, 0) == 11.0f);
    CHECK(g.is_nodata(1, 1));
    CHECK(g.is_nodata(1, 0));
    CHECK_THROWS_AS(grid_elevation(pc, {PointLabel::Other}, templ), Error);
}

TEST_CASE("grid_elevation matches a bucket oracle and ignores point order") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> xy(0.0, 10.0), z(0.0, 50.0);
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back(pt(xy(rng), xy(rng), z(rng), i % 3 ? PointLabel::Ground : PointLabel::Building));
    const Raster templ(10, 10, GeoRef{0.0, 0.0, 1.0});
    const Raster g = grid_elevation(PointCloud(pts), {PointLabel::Ground}, templ);

    std::map<std::pair<int, int>, std::pair<double, int>> buckets;
    for (const auto& p : pts) {
        if (p.label != PointLabel::Ground) continue;
        auto& b = buckets[{static_cast<int>(p.x), static_cast<int>(p.y)}];
        b.first += p.z;
        ++b.second;
    }
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            const auto it = buckets.find({c, r});
            if (it == buckets.end()) CHECK(g.is_nodata(c, r));
            else CHECK(g.at(c, r) == doctest::Approx(it->second.first / it->second.second).epsilon(1e-6));
        }

    std::shuffle(pts.begin(), pts.end(), rng);
    const Raster g2 = grid_elevation(PointCloud(pts), {PointLabel::Ground}, templ);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(g2.values()[i] == doctest::Approx(g.values()[i]).epsilon(1e-6));
    }
}

TEST_CASE("point cloud rejects non-finite coordinates") {
    CHECK_THROWS_AS(PointCloud({pt(0, 0, std::numeric_limits<double>::quiet_NaN(), PointLabel::Ground)}), Error);
    const PointCloud pc({pt(1, 2, 3, PointLabel::Ground), pt(-1, 5, 0, PointLabel::Other)});
    CHECK(pc.extent().min_x == -1.0);
    CHECK(pc.extent().max_y == 5.0);
    CHECK(pc.count(PointLabel::Ground) == 1);
}

TEST_CASE("fill_voids_nearest") {
    Raster one(4, 3, GeoRef{}, kDefaultNodata, kDefaultNodata);
    one.at(2, 1) = 6.0f;
    const Raster filled = fill_voids_nearest(one);
    for (float v : filled.values()) CHECK(v == 6.0f);

    Raster full(3, 3, GeoRef{}, kDefaultNodata, 1.5f);
    full.at(1, 1) = 4.0f;
    CHECK(fill_voids_nearest(full) == full);

    CHECK_THROWS_AS(fill_voids_nearest(Raster(2, 2, GeoRef{}, kDefaultNodata, kDefaultNodata)), Error);
}

TEST_CASE("fill_voids_nearest matches an all-pairs search") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> v(0.0f, 100.0f);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 5 + trial % 7, h = 5 + trial % 5;
        Raster r(w, h, GeoRef{});
        for (float& x : r.values()) x = v(rng);
        const int voids = trial == 0 ? 3 : 1 + static_cast<int>(rng() % (r.size() - 1));
        for (int k = 0; k < voids; ++k) r.values()[rng() % r.size()] = r.nodata();
        if (valid_sum(r).count == 0) continue;
        const Raster f = fill_voids_nearest(r);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (!r.is_nodata(x, y)) {
                    REQUIRE(f.at(x, y) == r.at(x, y));
                    continue;
                }
                long best = std::numeric_limits<long>::max();
                float want = 0.0f;
                for (int yy = 0; yy < h; ++yy)
                    for (int xx = 0; xx < w; ++xx) {
                        if (r.is_nodata(xx, yy)) continue;
                        const long d = long(xx - x) * (xx - x) + long(yy - y) * (yy - y);
                        if (d < best) {
                            best = d;
                            want = r.at(xx, yy);
                        }
                    }
                REQUIRE(f.at(x, y) == want);
            }
    }
}

TEST_CASE("reference nDSM") {
    const Raster templ(2, 1, GeoRef{0.0, 0.0, 1.0});
    const PointCloud pc({pt(0.5, 0.5, 15.0, PointLabel::Building), pt(1.5, 0.5, 5.0, PointLabel::Ground)});
    const Raster n = build_reference_ndsm(pc, templ);
    CHECK(n.at(0, 0) == 10.0f);
    CHECK(n.at(1, 0) == 0.0f);

    const PointCloud bare({pt(0.5, 0.5, 5.0, PointLabel::Ground)});
    const Raster zero = build_reference_ndsm(bare, templ);
    for (float v : zero.values()) CHECK(v == 0.0f);
}

TEST_CASE("reference nDSM recovers boxes on a ramp") {
    // Three boxes on terrain rising 0.2 m per meter eastwards, with returns
    // at cell centers so the ground under a roof is known exactly.
    const int n = 40;
    const Raster templ(n, n, GeoRef{0.0, 0.0, 1.0});
    struct Box { int x0, y0, x1, y1; double h; };
    const Box boxes[] = {{2, 2, 10, 8, 12.5}, {15, 20, 25, 30, 31.25}, {30, 3, 37, 12, 4.0}};
    std::vector<LabeledPoint> pts;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = c + 0.5, y = r + 0.5, g = 100.0 + 0.2 * x;
            double h = 0.0;
            for (const auto& b : boxes)
                if (c >= b.x0 && c < b.x1 && r >= b.y0 && r < b.y1) h = b.h;
            if (h > 0.0) {
                pts.push_back(pt(x, y, g + h, PointLabel::Building));
                // Ground returns through gaps beside the building edge.
                pts.push_back(pt(x, y, g, PointLabel::Ground));
            } else {
                pts.push_back(pt(x, y, g, PointLabel::Ground));
            }
        }
    const Raster nd = build_reference_ndsm(PointCloud(pts), templ);
    for (const auto& b : boxes)
        for (int r = b.y0; r < b.y1; ++r)
            for (int c = b.x0; c < b.x1; ++c) CHECK(std::abs(nd.at(c, r) - b.h) <= 0.01);
    for (float v : nd.values()) CHECK(v >= 0.0f);
}

TEST_CASE("reference nDSM is zero outside building returns and exact on flat ground") {
    const int n = 30;
    const Raster templ(n, n, GeoRef{0.0, 0.0, 1.0});
    std::vector<LabeledPoint> pts;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jit(0.1, 0.9);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const bool roof = c >= 5 && c < 15 && r >= 10 && r < 20;
            pts.push_back(pt(c + jit(rng), r + jit(rng), roof ? 117.5 : 100.0,
                             roof ? PointLabel::Building : PointLabel::Ground));
        }
    const Raster nd = build_reference_ndsm(PointCloud(pts), templ);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const bool roof = c >= 5 && c < 15 && r >= 10 && r < 20;
            CHECK(nd.at(c, r) == (roof ? 17.5f : 0.0f));
        }
}

TEST_CASE("point CSV round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "globus_test_points";
    std::filesystem::create_directories(dir);
    const PointCloud pc({pt(1.25, 2.5, 100.125, PointLabel::Ground), pt(3, 4, 110, PointLabel::Building),
                         pt(5, 6, 104.5, PointLabel::Other)});
    write_point_cloud(pc, dir / "p.csv");
    const PointCloud back = read_point_cloud(dir / "p.csv");
    REQUIRE(back.points().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.points()[i].x == pc.points()[i].x);
        CHECK(back.points()[i].z == pc.points()[i].z);
        CHECK(back.points()[i].label == pc.points()[i].label);
    }
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "x,y,z,label\n1,2,3,roof\n";
    }
    CHECK_THROWS_AS(read_point_cloud(dir / "bad.csv"), Error);
    std::filesystem::remove_all(dir);
}
