#include "globus/footprints.hpp"

#include "globus/error.hpp"
#include "geojson.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace globus {
namespace {

std::string id_str(const BuildingFootprint& f) { return "footprint " + std::to_string(f.id); }

// Twice the signed area and the first moments of a ring, relative to `ref`.
struct RingMoments {
    double area2 = 0.0;
    double mx6 = 0.0;  // 6 * A * cx
    double my6 = 0.0;  // 6 * A * cy
};

RingMoments moments(const Ring& ring, Point2 ref) {
    RingMoments m;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = ring[i].x - ref.x;
        const double y0 = ring[i].y - ref.y;
        const double x1 = ring[(i + 1) % n].x - ref.x;
        const double y1 = ring[(i + 1) % n].y - ref.y;
        const double cross = x0 * y1 - x1 * y0;
        m.area2 += cross;
        m.mx6 += (x0 + x1) * cross;
        m.my6 += (y0 + y1) * cross;
    }
    return m;
}

double ring_length(const Ring& ring) {
    double len = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % ring.size()];
        len += std::hypot(b.x - a.x, b.y - a.y);
    }
    return len;
}

double orient(Point2 a, Point2 b, Point2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool on_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const double d1 = orient(q1, q2, p1);
    const double d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1);
    const double d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

bool ring_self_intersects(const Ring& ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            // Adjacent edges share a vertex by construction.
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return true;
        }
    }
    return false;
}

std::size_t distinct_vertices(const Ring& ring) {
    Ring sorted = ring;
    std::sort(sorted.begin(), sorted.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

bool ring_contains(const Ring& ring, Point2 p, bool inside) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = ring[j];
        const Point2 b = ring[i];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

// Edge crossings of the horizontal line y = py, for all rings of `f`.
void crossings(const BuildingFootprint& f, double py, std::vector<double>& xs) {
    xs.clear();
    auto scan = [&](const Ring& ring) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Point2 a = ring[j];
            const Point2 b = ring[i];
            if ((a.y > py) != (b.y > py)) xs.push_back(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    };
    scan(f.exterior);
    for (const auto& h : f.holes) scan(h);
    std::sort(xs.begin(), xs.end());
}

struct Bounds {
    double min_x, min_y, max_x, max_y;
};

Bounds bounds_of(const Ring& ring) {
    Bounds b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
    for (const auto& p : ring) {
        b.min_x = std::min(b.min_x, p.x);
        b.max_x = std::max(b.max_x, p.x);
        b.min_y = std::min(b.min_y, p.y);
        b.max_y = std::max(b.max_y, p.y);
    }
    return b;
}

int clamp_index(double v, int n) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
}

}  // namespace

void validate_footprint(const BuildingFootprint& f) {
    if (f.id <= 0) throw Error(ErrorKind::Geometry, id_str(f) + ": id must be positive");
    auto check_ring = [&](const Ring& ring, const char* which) {
        if (ring.size() < 3 || distinct_vertices(ring) < 3) {
            throw Error(ErrorKind::Geometry, id_str(f) + ": " + which + " ring has fewer than 3 distinct vertices");
        }
        for (const auto& p : ring) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw Error(ErrorKind::Geometry, id_str(f) + ": non-finite coordinate");
            }
        }
        if (ring_self_intersects(ring)) {
            throw Error(ErrorKind::Geometry, id_str(f) + ": " + which + " ring self-intersects");
        }
        if (moments(ring, ring[0]).area2 == 0.0) {
            throw Error(ErrorKind::Geometry, id_str(f) + ": " + which + " ring has zero area");
        }
    };
    check_ring(f.exterior, "exterior");
    for (const auto& h : f.holes) {
        check_ring(h, "hole");
        for (const auto& p : h) {
            bool on_boundary = false;
            for (std::size_t i = 0; i < f.exterior.size() && !on_boundary; ++i) {
                const Point2 a = f.exterior[i];
                const Point2 b = f.exterior[(i + 1) % f.exterior.size()];
                on_boundary = orient(a, b, p) == 0 && on_segment(a, b, p);
            }
            if (!on_boundary && !ring_contains(f.exterior, p, false)) {
                throw Error(ErrorKind::Geometry, id_str(f) + ": hole lies outside the exterior");
            }
        }
    }
    if (!(polygon_area(f) > 0.0)) throw Error(ErrorKind::Geometry, id_str(f) + ": non-positive area");
}

double polygon_area(const BuildingFootprint& f) {
    if (f.exterior.size() < 3) throw Error(ErrorKind::Geometry, id_str(f) + ": degenerate ring");
    const Point2 ref = f.exterior[0];
    double area = std::abs(moments(f.exterior, ref).area2) / 2.0;
    for (const auto& h : f.holes) area -= std::abs(moments(h, ref).area2) / 2.0;
    if (!(area > 0.0)) throw Error(ErrorKind::Geometry, id_str(f) + ": zero area");
    return area;
}

double polygon_perimeter(const BuildingFootprint& f) {
    double len = ring_length(f.exterior);
    for (const auto& h : f.holes) len += ring_length(h);
    return len;
}

Point2 centroid(const BuildingFootprint& f) {
    if (f.exterior.size() < 3) throw Error(ErrorKind::Geometry, id_str(f) + ": degenerate ring");
    const Point2 ref = f.exterior[0];
    auto ext = moments(f.exterior, ref);
    const double s = ext.area2 < 0 ? -1.0 : 1.0;
    double a2 = s * ext.area2, mx = s * ext.mx6, my = s * ext.my6;
    for (const auto& h : f.holes) {
        auto hm = moments(h, ref);
        const double hs = hm.area2 < 0 ? -1.0 : 1.0;
        a2 -= hs * hm.area2;
        mx -= hs * hm.mx6;
        my -= hs * hm.my6;
    }
    if (!(a2 > 0.0)) throw Error(ErrorKind::Geometry, id_str(f) + ": zero area");
    // 6A = 3 * area2
    return {ref.x + mx / (3.0 * a2), ref.y + my / (3.0 * a2)};
}

double projected_width(const BuildingFootprint& f, double wind_direction) {
    if (!(wind_direction >= 0.0 && wind_direction < 360.0)) {
        throw Error(ErrorKind::Input, "wind direction must be in [0, 360), got " + std::to_string(wind_direction));
    }
    const double theta = wind_direction * std::numbers::pi / 180.0;
    // Axis perpendicular to the flow vector (sin, cos).
    const double ax = std::cos(theta);
    const double ay = -std::sin(theta);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : f.exterior) {
        const double t = p.x * ax + p.y * ay;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return hi - lo;
}

bool contains(const BuildingFootprint& f, Point2 p) {
    bool inside = ring_contains(f.exterior, p, false);
    for (const auto& h : f.holes) inside = ring_contains(h, p, inside);
    return inside;
}

FootprintMask rasterize(const std::vector<BuildingFootprint>& footprints, const Raster& templ,
                        std::vector<std::int64_t>* outside) {
    FootprintMask mask{Raster(templ.width(), templ.height(), templ.georef(), templ.nodata(), 0.0f),
                       std::vector<std::int64_t>(templ.size(), 0)};
    std::vector<const BuildingFootprint*> order;
    order.reserve(footprints.size());
    for (const auto& f : footprints) order.push_back(&f);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

    const double ox = templ.origin_x();
    const double oy = templ.origin_y();
    const double cs = templ.cell_size();
    std::vector<double> xs;
    for (const BuildingFootprint* f : order) {
        const Bounds b = bounds_of(f->exterior);
        if (b.max_x < ox || b.min_x > ox + templ.extent_x() || b.max_y < oy || b.min_y > oy + templ.extent_y()) {
            if (outside) outside->push_back(f->id);
            continue;
        }
        const int r0 = clamp_index(std::floor((b.min_y - oy) / cs - 0.5), templ.height());
        const int r1 = clamp_index(std::ceil((b.max_y - oy) / cs - 0.5), templ.height());
        for (int r = r0; r <= r1; ++r) {
            crossings(*f, templ.center_y(r), xs);
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                const double x0 = xs[k];
                const double x1 = xs[k + 1];
                // Columns whose center px satisfies x0 <= px < x1.
                int c = clamp_index(std::floor((x0 - ox) / cs - 0.5) - 1.0, templ.width());
                while (c < templ.width() && templ.center_x(c) < x0) ++c;
                for (; c < templ.width() && templ.center_x(c) < x1; ++c) {
                    const std::size_t i = mask.raster.index(c, r);
                    mask.raster.values()[i] = 1.0f;
                    mask.source_ids[i] = f->id;
                }
            }
        }
    }
    return mask;
}

std::vector<FootprintFeature> parse_footprint_geojson(const std::string& text) {
    return detail::parse_feature_collection(text);
}

std::vector<BuildingFootprint> read_footprints(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    std::vector<BuildingFootprint> out;
    for (auto& feat : parse_footprint_geojson(ss.str())) out.push_back(std::move(feat.footprint));
    return out;
}

void write_footprints(const std::vector<BuildingFootprint>& footprints, const std::filesystem::path& path) {
    std::vector<FootprintFeature> features;
    features.reserve(footprints.size());
    for (const auto& f : footprints) features.push_back({f, std::nullopt});
    detail::write_feature_collection(features, path);
}

}  // namespace globus
