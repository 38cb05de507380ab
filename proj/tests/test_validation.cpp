#include "globus/error.hpp"
#include "globus/validation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace globus;
using oracle::rect;

namespace {

UcpGrid grid_2x2(const std::vector<std::size_t>& counts, const std::vector<double>& means,
                 const std::vector<double>& lp) {
    UcpGrid g;
    g.geometry = ucp_geometry(Raster(20, 20, GeoRef{}), 10.0);
    g.directions = {};
    for (std::size_t i = 0; i < 4; ++i) {
        UcpCell c;
        c.building_count = counts[i];
        c.mean_height = means[i];
        c.lambda_p = lp[i];
        c.histogram.assign(g.histogram.bins(), 0.0);
        if (counts[i]) c.histogram[g.histogram.bin_of(means[i])] = 1.0;
        c.frac_below_5m = c.histogram[0];
        g.cells.push_back(c);
    }
    return g;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("rmse hand cases") {
    CHECK(rmse({{1.0, 2.0}, {1.0, 2.0}, {}}) == 0.0);
    CHECK(rmse({{3.0, 4.0}, {0.0, 0.0}, {}}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK_THROWS_AS(rmse({}), Error);
}

TEST_CASE("mape hand cases") {
    const auto m = mape({{110.0}, {100.0}, {}});
    CHECK(m.percent == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(m.n == 1);
    CHECK(mape({{5.0, 6.0}, {5.0, 6.0}, {}}).percent == 0.0);
    const auto skipped = mape({{1.0, 10.0}, {0.5, 8.0}, {}}, 1.0);
    CHECK(skipped.n == 1);
    CHECK(skipped.excluded == 1);
    CHECK(skipped.percent == doctest::Approx(25.0));
    try {
        mape({{1.0}, {0.5}, {}}, 1.0);
        FAIL("empty mape accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Empty);
    }
}

TEST_CASE("metric properties on random series") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> v(-20.0, 60.0), k(0.1, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        PairedSeries s;
        const int n = 1 + trial % 40;
        for (int i = 0; i < n; ++i) {
            s.predicted.push_back(v(rng));
            s.reference.push_back(v(rng));
        }
        const double r = rmse(s);
        CHECK(oracle::rel_err(r, oracle::rmse(s.predicted, s.reference)) < 1e-9);
        CHECK(r >= 0.0);
        CHECK(rmse({s.reference, s.predicted, {}}) == doctest::Approx(r).epsilon(1e-14));
        double mp = 0.0, mr = 0.0;
        for (int i = 0; i < n; ++i) {
            mp += s.predicted[i];
            mr += s.reference[i];
        }
        CHECK(r >= std::abs(mp - mr) / n - 1e-12);

        const auto om = oracle::mape(s.predicted, s.reference, 1.0);
        if (om) CHECK(oracle::rel_err(mape(s, 1.0).percent, *om) < 1e-9);
        else CHECK_THROWS_AS(mape(s, 1.0), Error);

        const double scale = k(rng);
        PairedSeries scaled = s;
        for (auto& x : scaled.predicted) x *= scale;
        for (auto& x : scaled.reference) x *= scale;
        const auto ms = mape(scaled, 0.0);
        const auto m0 = mape(s, 0.0);
        CHECK(ms.percent == doctest::Approx(m0.percent).epsilon(1e-12));
    }
    CHECK(rmse({{2.0, 2.0}, {2.0, 2.0}, {}}) == 0.0);
}

TEST_CASE("pair_grids excludes cells empty in both grids") {
    const auto pred = grid_2x2({1, 0, 0, 2}, {10.0, 0.0, 0.0, 20.0}, {0.1, 0.05, 0.0, 0.2});
    const auto ref = grid_2x2({1, 1, 0, 2}, {12.0, 7.0, 0.0, 18.0}, {0.1, 0.1, 0.0, 0.3});
    const auto s = pair_grids(pred, ref, "mean");
    REQUIRE(s.predicted.size() == 3);
    CHECK(s.predicted == std::vector<double>{10.0, 0.0, 20.0});
    CHECK(s.reference == std::vector<double>{12.0, 7.0, 18.0});
    CHECK(s.cells[1] == std::pair<int, int>{0, 1});

    const auto self = pair_grids(ref, ref, "lambda_p");
    CHECK(rmse(self) == 0.0);

    UcpGrid other = ref;
    other.geometry.cols = 3;
    CHECK_THROWS_AS(pair_grids(pred, other, "mean"), Error);
}

TEST_CASE("export writes scatter, metrics and histogram tables") {
    const auto dir = std::filesystem::temp_directory_path() / "globus_test_validation";
    std::filesystem::remove_all(dir);
    const auto pred = grid_2x2({1, 0, 0, 2}, {3.0, 0.0, 0.0, 20.0}, {0.1, 0.0, 0.0, 0.2});
    const auto ref = grid_2x2({1, 0, 0, 2}, {7.0, 0.0, 0.0, 18.0}, {0.1, 0.0, 0.0, 0.3});
    const auto metrics = export_comparison(pred, ref, dir);
    const auto scatter = lines(dir / "scatter_mean.csv");
    CHECK(scatter.front() == "cell_row,cell_col,predicted,reference");
    CHECK(scatter.size() == 1 + pair_grids(pred, ref, "mean").predicted.size());
    const auto table = lines(dir / "metrics.csv");
    CHECK(table.front() == "field,n,rmse,mape,excluded");
    bool saw_lp = false;
    for (const auto& l : table)
        if (l.rfind("lambda_p,", 0) == 0) {
            saw_lp = true;
            CHECK(l.find(",,") != std::string::npos);  // every reference below the MAPE threshold
        }
    CHECK(saw_lp);
    const auto hist = lines(dir / "histogram_comparison.csv");
    CHECK(hist.front() == "cell_row,cell_col,bin,predicted,reference");
    // Cell (0,0): predicted 3 m in bin 0, reference 7 m in bin 1.
    CHECK(std::find(hist.begin(), hist.end(), "0,0,0,1,0") != hist.end());
    CHECK(std::find(hist.begin(), hist.end(), "0,0,1,0,1") != hist.end());
    CHECK(std::find(hist.begin(), hist.end(), "0,0,below_5m,1,0") != hist.end());
    CHECK(!metrics.empty());
    std::filesystem::remove_all(dir);

    const auto empty = grid_2x2({0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0});
    export_comparison(empty, empty, dir);
    CHECK(lines(dir / "scatter_mean.csv").size() == 1);
    CHECK(lines(dir / "histogram_comparison.csv").size() == 1);
    std::filesystem::remove_all(dir);
}
