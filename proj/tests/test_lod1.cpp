#include "globus/error.hpp"
#include "globus/lod1.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace globus;
using oracle::rect;

namespace {

Raster random_pred(std::mt19937_64& rng, int w, int h, GeoRef g = GeoRef{}) {
    std::uniform_real_distribution<float> v(0.0f, 60.0f);
    Raster r(w, h, g);
    for (float& x : r.values()) x = v(rng);
    return r;
}

}  // namespace

TEST_CASE("mean of the owned cells") {
    Raster pred(3, 1, GeoRef{});
    pred.at(0, 0) = 10.0f;
    pred.at(1, 0) = 12.0f;
    pred.at(2, 0) = 11.0f;
    const std::vector<BuildingFootprint> fps{rect(1, 0, 0, 3, 1)};
    const auto res = assign_heights(pred, rasterize(fps, pred), fps);
    REQUIRE(res.buildings.size() == 1);
    CHECK(res.buildings[0].height == 11.0);
    CHECK(res.buildings[0].n_cells == 3);
    CHECK(res.warnings.empty());

    const auto med = assign_heights(pred, rasterize(fps, pred), fps, ZonalStat::Median);
    CHECK(med.buildings[0].height == 11.0);
}

TEST_CASE("footprint outside the raster gets height zero and a warning") {
    const Raster pred(4, 4, GeoRef{}, kDefaultNodata, 9.0f);
    const std::vector<BuildingFootprint> fps{rect(3, 50, 50, 60, 60), rect(1, 0, 0, 2, 2)};
    const auto res = assign_heights(pred, rasterize(fps, pred), fps);
    REQUIRE(res.buildings.size() == 2);
    CHECK(res.buildings[0].footprint.id == 1);
    CHECK(res.buildings[0].height == 9.0);
    CHECK(res.buildings[1].footprint.id == 3);
    CHECK(res.buildings[1].height == 0.0);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].id == 3);
}

TEST_CASE("nodata cells are skipped and duplicate ids rejected") {
    Raster pred(2, 1, GeoRef{}, kDefaultNodata, 4.0f);
    pred.at(1, 0) = pred.nodata();
    const std::vector<BuildingFootprint> fps{rect(1, 0, 0, 2, 1)};
    const auto res = assign_heights(pred, rasterize(fps, pred), fps);
    CHECK(res.buildings[0].height == 4.0);
    CHECK(res.buildings[0].n_cells == 1);

    const std::vector<BuildingFootprint> dup{rect(1, 0, 0, 1, 1), rect(1, 1, 0, 2, 1)};
    CHECK_THROWS_AS(assign_heights(pred, rasterize(dup, pred), dup), Error);
}

TEST_CASE("per-building means match a masked loop") {
    std::mt19937_64 rng(1);
    const int w = 120, h = 90;
    const auto pred = random_pred(rng, w, h);
    const auto fps = oracle::random_rects(rng, w, h, 50, 2, 15);
    REQUIRE(fps.size() == 50);
    const auto res = assign_heights(pred, rasterize(fps, pred), fps);
    REQUIRE(res.buildings.size() == fps.size());
    const auto own = oracle::owners(fps, pred);
    for (const auto& b : res.buildings) {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < own.size(); ++i)
            if (own[i] == b.footprint.id) {
                s += pred.values()[i];
                ++n;
            }
        CHECK(b.n_cells == n);
        CHECK(b.height == doctest::Approx(s / n).epsilon(1e-6));
    }
}

TEST_CASE("every footprint appears once, translation and scaling behave") {
    std::mt19937_64 rng(2);
    const int w = 60, h = 60;
    const auto pred = random_pred(rng, w, h);
    const auto fps = oracle::random_rects(rng, w, h, 20, 2, 8);
    const auto base = assign_heights(pred, rasterize(fps, pred), fps);
    CHECK(base.buildings.size() == fps.size());
    for (std::size_t i = 0; i + 1 < base.buildings.size(); ++i)
        CHECK(base.buildings[i].footprint.id < base.buildings[i + 1].footprint.id);

    // Shift the scene by whole cells.
    const Raster moved(w, h, GeoRef{37.0, -12.0, 1.0}, pred.nodata(),
                       std::vector<float>(pred.values().begin(), pred.values().end()));
    auto shifted = fps;
    for (auto& f : shifted)
        for (auto& p : f.exterior) p = {p.x + 37.0, p.y - 12.0};
    const auto t = assign_heights(moved, rasterize(shifted, moved), shifted);
    for (std::size_t i = 0; i < fps.size(); ++i) CHECK(t.buildings[i].height == base.buildings[i].height);

    Raster scaled = pred;
    for (float& v : scaled.values()) v *= 2.0f;
    const auto s = assign_heights(scaled, rasterize(fps, scaled), fps);
    for (std::size_t i = 0; i < fps.size(); ++i)
        CHECK(s.buildings[i].height == doctest::Approx(2.0 * base.buildings[i].height).epsilon(1e-12));
}

TEST_CASE("median picks the middle value") {
    Raster pred(4, 1, GeoRef{});
    pred.at(0, 0) = 1.0f;
    pred.at(1, 0) = 100.0f;
    pred.at(2, 0) = 3.0f;
    pred.at(3, 0) = 2.0f;
    const std::vector<BuildingFootprint> fps{rect(1, 0, 0, 4, 1)};
    CHECK(assign_heights(pred, rasterize(fps, pred), fps, ZonalStat::Median).buildings[0].height == 2.5);
}

TEST_CASE("LoD-1 GeoJSON round trip and errors") {
    const auto dir = std::filesystem::temp_directory_path() / "globus_test_lod1";
    std::filesystem::create_directories(dir);
    const std::vector<Lod1Building> bs{{rect(1, 0, 0, 10, 10), 12.34, 100}, {rect(2, 20, 0, 30, 15), 0.0, 150}};
    write_lod1(bs, dir / "b.geojson");
    const auto back = read_lod1(dir / "b.geojson");
    REQUIRE(back.size() == 2);
    CHECK(back[0].footprint.id == 1);
    CHECK(back[0].height == 12.34);
    CHECK(back[1].height == 0.0);
    CHECK(back[1].footprint.exterior.size() == 4);

    const std::string fixture = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":1,"height_m":5.0},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]]]}},
      {"type":"Feature","properties":{"id":2,"height_m":17.5},
       "geometry":{"type":"Polygon","coordinates":[[[10,0],[14,0],[14,6],[10,6],[10,0]]]}}]})";
    const auto parsed = parse_lod1(fixture);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].height == 5.0);
    CHECK(parsed[1].height == 17.5);

    const std::string missing = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"id":7},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]]]}}]})";
    try {
        parse_lod1(missing);
        FAIL("missing height accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
        CHECK(std::string(e.what()).find("id 7") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
