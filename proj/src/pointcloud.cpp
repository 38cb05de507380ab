#include "globus/pointcloud.hpp"

#include "globus/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace globus {
namespace {

bool cell_of(const Raster& templ, double x, double y, int& col, int& row) {
    const double fc = std::floor((x - templ.origin_x()) / templ.cell_size());
    const double fr = std::floor((y - templ.origin_y()) / templ.cell_size());
    if (fc < 0 || fr < 0 || fc >= templ.width() || fr >= templ.height()) return false;
    col = static_cast<int>(fc);
    row = static_cast<int>(fr);
    return true;
}

std::int64_t isqrt(std::int64_t v) {
    auto s = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
    while (s * s > v) --s;
    while ((s + 1) * (s + 1) <= v) ++s;
    return s;
}

// Exact squared distance to the nearest valid cell (Felzenszwalb-Huttenlocher).
std::vector<std::int64_t> squared_distance_field(const Raster& r) {
    const int w = r.width();
    const int h = r.height();
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

    // Column pass: vertical distance to the nearest valid cell in the same column.
    std::vector<std::int64_t> g(r.size(), kInf);
    for (int c = 0; c < w; ++c) {
        std::int64_t last = -1;
        for (int row = 0; row < h; ++row) {
            if (!r.is_nodata(c, row)) last = row;
            if (last >= 0) g[r.index(c, row)] = row - last;
        }
        last = -1;
        for (int row = h - 1; row >= 0; --row) {
            if (!r.is_nodata(c, row)) last = row;
            if (last >= 0) g[r.index(c, row)] = std::min<std::int64_t>(g[r.index(c, row)], last - row);
        }
    }

    // Row pass: lower envelope of parabolas (c - q)^2 + g(q)^2.
    std::vector<std::int64_t> out(r.size(), kInf);
    std::vector<std::int64_t> f(static_cast<std::size_t>(w));
    std::vector<int> v(static_cast<std::size_t>(w));
    std::vector<double> z(static_cast<std::size_t>(w) + 1);
    for (int row = 0; row < h; ++row) {
        int k = -1;
        for (int q = 0; q < w; ++q) {
            const auto gq = g[r.index(q, row)];
            f[static_cast<std::size_t>(q)] = gq >= kInf ? kInf : gq * gq;
        }
        for (int q = 0; q < w; ++q) {
            if (f[static_cast<std::size_t>(q)] >= kInf) continue;
            double s = 0.0;
            while (k >= 0) {
                const int p = v[static_cast<std::size_t>(k)];
                s = (static_cast<double>(f[static_cast<std::size_t>(q)] + static_cast<std::int64_t>(q) * q) -
                     static_cast<double>(f[static_cast<std::size_t>(p)] + static_cast<std::int64_t>(p) * p)) /
                    (2.0 * (q - p));
                if (s <= z[static_cast<std::size_t>(k)]) --k;
                else break;
            }
            ++k;
            v[static_cast<std::size_t>(k)] = q;
            z[static_cast<std::size_t>(k)] = k == 0 ? -INFINITY : s;
            z[static_cast<std::size_t>(k) + 1] = INFINITY;
        }
        if (k < 0) continue;
        int j = 0;
        for (int c = 0; c < w; ++c) {
            while (z[static_cast<std::size_t>(j) + 1] < c) ++j;
            const int q = v[static_cast<std::size_t>(j)];
            const std::int64_t dx = c - q;
            out[r.index(c, row)] = dx * dx + f[static_cast<std::size_t>(q)];
        }
    }
    return out;
}

PointLabel parse_label(std::string_view s, std::size_t line) {
    if (s == "ground") return PointLabel::Ground;
    if (s == "building") return PointLabel::Building;
    if (s == "other") return PointLabel::Other;
    throw Error(ErrorKind::Format, "point cloud line " + std::to_string(line) + ": unknown label '" +
                                       std::string(s) + "'");
}

}  // namespace

std::string_view to_string(PointLabel label) noexcept {
    switch (label) {
        case PointLabel::Ground: return "ground";
        case PointLabel::Building: return "building";
        case PointLabel::Other: return "other";
    }
    return "other";
}

PointCloud::PointCloud(std::vector<LabeledPoint> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    extent_ = {points_[0].x, points_[0].y, points_[0].x, points_[0].y};
    for (const auto& p : points_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
            throw Error(ErrorKind::Input, "point cloud contains a non-finite coordinate");
        }
        extent_.min_x = std::min(extent_.min_x, p.x);
        extent_.max_x = std::max(extent_.max_x, p.x);
        extent_.min_y = std::min(extent_.min_y, p.y);
        extent_.max_y = std::max(extent_.max_y, p.y);
    }
}

std::size_t PointCloud::count(PointLabel label) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [&](const LabeledPoint& p) { return p.label == label; }));
}

Raster grid_elevation(const PointCloud& pc, LabelFilter filter, const Raster& templ) {
    std::vector<double> sum(templ.size(), 0.0);
    std::vector<std::uint32_t> count(templ.size(), 0);
    std::size_t accepted = 0;
    for (const auto& p : pc.points()) {
        if (!filter.accepts(p.label)) continue;
        ++accepted;
        int c = 0, r = 0;
        if (!cell_of(templ, p.x, p.y, c, r)) continue;
        const auto i = templ.index(c, r);
        sum[i] += p.z;
        ++count[i];
    }
    if (accepted == 0) throw Error(ErrorKind::EmptyCloud, "no points match the label filter");
    Raster out(templ.width(), templ.height(), templ.georef(), templ.nodata());
    auto values = out.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = count[i] ? static_cast<float>(sum[i] / count[i]) : templ.nodata();
    }
    return out;
}

Raster fill_voids_nearest(const Raster& r) {
    const auto valid = std::count_if(r.values().begin(), r.values().end(), [&](float v) { return v != r.nodata(); });
    if (valid == 0) throw Error(ErrorKind::EmptyStatistics, "fill_voids_nearest: raster has no valid cells");
    if (static_cast<std::size_t>(valid) == r.size()) return r;

    const auto dist2 = squared_distance_field(r);
    Raster out = r;
    for (int row = 0; row < r.height(); ++row) {
        for (int c = 0; c < r.width(); ++c) {
            if (!r.is_nodata(c, row)) continue;
            const std::int64_t d2 = dist2[r.index(c, row)];
            const std::int64_t reach = isqrt(d2);
            bool found = false;
            // Candidates at exactly d2, visited in row-major order.
            for (std::int64_t dy = -reach; dy <= reach && !found; ++dy) {
                const std::int64_t rr = row + dy;
                if (rr < 0 || rr >= r.height()) continue;
                const std::int64_t rem = d2 - dy * dy;
                const std::int64_t dx = isqrt(rem);
                if (dx * dx != rem) continue;
                for (const std::int64_t cc : {c - dx, c + dx}) {
                    if (cc < 0 || cc >= r.width()) continue;
                    if (!r.is_nodata(static_cast<int>(cc), static_cast<int>(rr))) {
                        out.at(c, row) = r.at(static_cast<int>(cc), static_cast<int>(rr));
                        found = true;
                        break;
                    }
                }
            }
            if (!found) throw Error(ErrorKind::EmptyStatistics, "internal: no donor at computed distance");
        }
    }
    return out;
}

Raster build_reference_ndsm(const PointCloud& pc, const Raster& templ) {
    const Raster dem = fill_voids_nearest(grid_elevation(pc, {PointLabel::Ground}, templ));
    if (pc.count(PointLabel::Building) == 0) {
        return Raster(templ.width(), templ.height(), templ.georef(), templ.nodata(), 0.0f);
    }
    const Raster dsm = grid_elevation(pc, {PointLabel::Building}, templ);
    Raster ndsm = clamp_nonnegative(subtract(dsm, dem));
    for (float& v : ndsm.values()) {
        if (v == ndsm.nodata()) v = 0.0f;
    }
    return ndsm;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    const std::string text(std::istreambuf_iterator<char>(in), {});
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        const std::size_t end = text.find('\n', pos);
        const std::size_t stop = end == std::string::npos ? text.size() : end;
        line = std::string_view(text).substr(pos, stop - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = stop + 1;
        ++line_no;
        return true;
    };
    std::string_view line;
    if (!next_line(line) || line != "x,y,z,label") {
        throw FormatError(path.string() + ": expected header 'x,y,z,label'", 0);
    }
    std::vector<LabeledPoint> points;
    while (true) {
        const std::size_t line_start = pos;
        if (!next_line(line)) break;
        if (line.empty()) continue;
        LabeledPoint p;
        double* fields[3] = {&p.x, &p.y, &p.z};
        const char* cur = line.data();
        const char* end = line.data() + line.size();
        for (double* f : fields) {
            const auto [ptr, ec] = std::from_chars(cur, end, *f);
            if (ec != std::errc() || ptr == end || *ptr != ',') {
                throw FormatError(path.string() + ": malformed row on line " + std::to_string(line_no),
                                  line_start + static_cast<std::size_t>(cur - line.data()));
            }
            cur = ptr + 1;
        }
        p.label = parse_label(std::string_view(cur, static_cast<std::size_t>(end - cur)), line_no);
        points.push_back(p);
    }
    return PointCloud(std::move(points));
}

void write_point_cloud(const PointCloud& pc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    std::string buf = "x,y,z,label\n";
    char tmp[128];
    for (const auto& p : pc.points()) {
        const int n = std::snprintf(tmp, sizeof(tmp), "%.3f,%.3f,%.3f,", p.x, p.y, p.z);
        buf.append(tmp, static_cast<std::size_t>(n));
        buf += to_string(p.label);
        buf += '\n';
        if (buf.size() > (1u << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace globus
