#include "globus/synth.hpp"

#include "globus/error.hpp"
#include "globus/lod1.hpp"
#include "globus/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace globus {
namespace {

struct Rect {
    long x0, y0, x1, y1;
};

bool too_close(const Rect& a, const Rect& b, long gap) {
    return a.x0 < b.x1 + gap && b.x0 < a.x1 + gap && a.y0 < b.y1 + gap && b.y0 < a.y1 + gap;
}

// Mean over the 3x3 neighbourhood that lies inside the grid.
Raster box_blur(const Raster& r) {
    Raster out = r;
    for (int row = 0; row < r.height(); ++row) {
        for (int c = 0; c < r.width(); ++c) {
            double sum = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int cc = c + dx, rr = row + dy;
                    if (cc < 0 || rr < 0 || cc >= r.width() || rr >= r.height()) continue;
                    sum += r.at(cc, rr);
                    ++n;
                }
            }
            out.at(c, row) = static_cast<float>(sum / n);
        }
    }
    return out;
}

}  // namespace

void validate(const SyntheticCitySpec& s) {
    auto fail = [](const char* what) { throw Error(ErrorKind::Config, std::string("synthetic city: ") + what); };
    if (!(s.extent > 0.0)) fail("extent must be positive");
    if (s.building_count < 0) fail("building_count must be non-negative");
    if (!(s.footprint_min >= 1.0) || s.footprint_max < s.footprint_min) fail("footprint size range is invalid");
    if (!(s.height_min >= 0.0) || s.height_max < s.height_min) fail("height range is invalid");
    if (!(s.gap >= 0.0)) fail("gap must be non-negative");
    if (s.coarse_factor < 1) fail("coarse_factor must be at least 1");
    if (!(s.noise_sigma >= 0.0)) fail("noise_sigma must be non-negative");
    if (!(s.cell_size > 0.0)) fail("cell_size must be positive");
    if (!(s.tree_fraction >= 0.0 && s.tree_fraction <= 1.0)) fail("tree_fraction must be in [0, 1]");
    if (!std::isfinite(s.slope)) fail("slope must be finite");
}

SyntheticCity generate_city(const SyntheticCitySpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);

    const long coarse_cells = static_cast<long>(std::ceil(spec.extent / spec.cell_size / spec.coarse_factor - 1e-9));
    const int n = static_cast<int>(std::max(1L, coarse_cells) * spec.coarse_factor);
    const GeoRef fine{0.0, 0.0, spec.cell_size};
    const double side = n * spec.cell_size;

    // Footprints: axis-aligned rectangles with whole-meter corners.
    const long smin = static_cast<long>(std::ceil(spec.footprint_min));
    const long smax = static_cast<long>(std::floor(spec.footprint_max));
    const long gap = static_cast<long>(std::ceil(spec.gap));
    const long limit = static_cast<long>(std::floor(side));
    if (smax < smin) throw Error(ErrorKind::Config, "synthetic city: footprint range holds no whole-meter size");
    std::uniform_int_distribution<long> size_dist(smin, smax);
    std::uniform_real_distribution<double> height_dist(spec.height_min, spec.height_max);

    std::vector<BuildingFootprint> footprints;
    std::vector<double> heights;
    std::vector<Rect> placed;
    const long budget = 1000L * std::max(1, spec.building_count);
    long attempts = 0;
    while (static_cast<int>(placed.size()) < spec.building_count) {
        if (++attempts > budget) {
            throw Error(ErrorKind::Packing, "placed only " + std::to_string(placed.size()) + " of " +
                                                std::to_string(spec.building_count) + " buildings after " +
                                                std::to_string(budget) + " attempts");
        }
        const long w = size_dist(rng);
        const long h = size_dist(rng);
        if (w + 2 * gap > limit || h + 2 * gap > limit) continue;
        const long x0 = std::uniform_int_distribution<long>(gap, limit - gap - w)(rng);
        const long y0 = std::uniform_int_distribution<long>(gap, limit - gap - h)(rng);
        const Rect r{x0, y0, x0 + w, y0 + h};
        if (std::any_of(placed.begin(), placed.end(), [&](const Rect& p) { return too_close(r, p, gap); })) continue;
        placed.push_back(r);
        const double height = std::round(height_dist(rng) * 100.0) / 100.0;
        BuildingFootprint f;
        f.id = static_cast<std::int64_t>(placed.size());
        f.exterior = {{double(r.x0), double(r.y0)}, {double(r.x1), double(r.y0)}, {double(r.x1), double(r.y1)},
                      {double(r.x0), double(r.y1)}};
        footprints.push_back(std::move(f));
        heights.push_back(height);
    }

    const Raster templ(n, n, fine);
    const FootprintMask mask = rasterize(footprints, templ);
    auto ground = [&](double x) { return spec.ground_elevation + spec.slope * x; };

    Raster truth(n, n, fine);
    Raster dem(n, n, fine);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto id = mask.owner(c, r);
            truth.at(c, r) = id ? static_cast<float>(heights[static_cast<std::size_t>(id - 1)]) : 0.0f;
            dem.at(c, r) = static_cast<float>(ground(dem.center_x(c)));
        }
    }

    // One jittered return per cell; the roof follows the terrain so the
    // above-ground height is exact everywhere on the footprint.
    std::uniform_real_distribution<double> jitter(0.1, 0.9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> tree_height(4.0, 15.0);
    std::vector<LabeledPoint> pts;
    pts.reserve(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            LabeledPoint p;
            p.x = (c + jitter(rng)) * spec.cell_size;
            p.y = (r + jitter(rng)) * spec.cell_size;
            // Match the precision the CSV stores.
            p.x = std::round(p.x * 1000.0) / 1000.0;
            p.y = std::round(p.y * 1000.0) / 1000.0;
            const double g = ground(p.x);
            const auto id = mask.owner(c, r);
            if (id) {
                p.z = g + heights[static_cast<std::size_t>(id - 1)];
                p.label = PointLabel::Building;
            } else if (unit(rng) < spec.tree_fraction) {
                p.z = g + tree_height(rng);
                p.label = PointLabel::Other;
            } else {
                p.z = g;
                p.label = PointLabel::Ground;
            }
            p.z = std::round(p.z * 1000.0) / 1000.0;
            pts.push_back(p);
        }
    }

    Raster coarse_ndsm = downsample_average(truth, spec.coarse_factor);
    if (spec.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (float& v : coarse_ndsm.values()) v = static_cast<float>(v + noise(rng));
    }
    Raster coarse_dem = downsample_average(dem, spec.coarse_factor);
    Raster coarse_dsm = coarse_dem;
    for (std::size_t i = 0; i < coarse_dsm.size(); ++i) {
        coarse_dsm.values()[i] = coarse_dem.values()[i] + coarse_ndsm.values()[i];
    }

    // Population follows smoothed built density.
    Raster population = box_blur(downsample_average(mask.raster, spec.coarse_factor));
    for (float& v : population.values()) v = 50.0f + 4000.0f * v;

    return SyntheticCity{std::move(footprints), std::move(heights), std::move(truth), std::move(dem),
                         PointCloud(std::move(pts)), std::move(coarse_ndsm), std::move(coarse_dem),
                         std::move(coarse_dsm), std::move(population)};
}

void write_city(const SyntheticCity& city, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_footprints(city.footprints, dir / "footprints.geojson");
    std::vector<Lod1Building> truth;
    truth.reserve(city.footprints.size());
    for (std::size_t i = 0; i < city.footprints.size(); ++i) truth.push_back({city.footprints[i], city.heights[i], 0});
    write_lod1(truth, dir / "truth_lod1.geojson");
    write_raster(city.truth_ndsm, dir / "truth_ndsm.glbr");
    write_point_cloud(city.points, dir / "points.csv");
    write_raster(city.coarse_ndsm, dir / "coarse_ndsm.glbr");
    write_raster(city.coarse_dsm, dir / "coarse_dsm.glbr");
    write_raster(city.coarse_dem, dir / "coarse_dem.glbr");
    write_raster(city.population, dir / "population.glbr");
}

}  // namespace globus
