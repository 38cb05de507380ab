#include "globus/ucp.hpp"

#include "globus/error.hpp"
#include "globus/raster_io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace globus {
namespace {

struct Member {
    std::size_t cell;
    const Lod1Building* building;
};

// Centroid assignment; buildings whose centroid lies outside the mask extent
// are not counted anywhere.
std::vector<Member> assign(const std::vector<Lod1Building>& buildings, const UcpGeometry& g) {
    std::vector<Member> out;
    out.reserve(buildings.size());
    for (const auto& b : buildings) {
        const Point2 c = centroid(b.footprint);
        int col = 0, row = 0;
        if (g.locate(c.x, c.y, col, row)) out.push_back({g.index(col, row), &b});
    }
    return out;
}

std::vector<double> built_area(const FootprintMask& mask, const UcpGeometry& g) {
    if (mask.raster.width() != g.mask_width || mask.raster.height() != g.mask_height ||
        mask.raster.cell_size() != g.mask_cell_size || mask.raster.origin_x() != g.georef.origin_x ||
        mask.raster.origin_y() != g.georef.origin_y) {
        throw Error(ErrorKind::Alignment, "footprint mask does not match the UCP grid geometry");
    }
    std::vector<std::size_t> counts(g.size(), 0);
    const float nd = mask.raster.nodata();
    for (int r = 0; r < g.mask_height; ++r) {
        const auto row = mask.raster.row(r);
        const int ur = r / g.factor;
        for (int c = 0; c < g.mask_width; ++c) {
            if (row[static_cast<std::size_t>(c)] != 0.0f && row[static_cast<std::size_t>(c)] != nd) {
                ++counts[g.index(c / g.factor, ur)];
            }
        }
    }
    const double pixel = g.mask_cell_size * g.mask_cell_size;
    std::vector<double> area(g.size());
    for (std::size_t i = 0; i < area.size(); ++i) area[i] = static_cast<double>(counts[i]) * pixel;
    return area;
}

std::vector<double> divide_by_cell_area(std::vector<double> v, const UcpGeometry& g) {
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) v[g.index(c, r)] /= g.cell_area(c, r);
    }
    return v;
}

std::string format_csv(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorKind::Format, where + ": invalid number '" + s + "'");
    }
    return v;
}

std::string csv_header(const UcpGrid& grid) {
    std::string h = "cell_row,cell_col,count,mean,std,lambda_p,lambda_b";
    for (double d : grid.directions) h += ",lambda_f_" + format_number(d);
    for (std::size_t k = 0; k < grid.histogram.bins(); ++k) h += ",hist_bin_" + std::to_string(k);
    h += ",area_weighted_mean,frac_below_5m";
    return h;
}

}  // namespace

double UcpGeometry::cell_area(int col, int row) const noexcept {
    const int wc = std::min(factor, mask_width - col * factor);
    const int hc = std::min(factor, mask_height - row * factor);
    return (wc * mask_cell_size) * (hc * mask_cell_size);
}

bool UcpGeometry::locate(double x, double y, int& col, int& row) const noexcept {
    const double fx = (x - georef.origin_x) / mask_cell_size;
    const double fy = (y - georef.origin_y) / mask_cell_size;
    if (!(fx >= 0.0 && fy >= 0.0 && fx < mask_width && fy < mask_height)) return false;
    col = static_cast<int>(std::floor(fx)) / factor;
    row = static_cast<int>(std::floor(fy)) / factor;
    return true;
}

UcpGeometry ucp_geometry(const Raster& mask, double resolution) {
    const double ratio = resolution / mask.cell_size();
    const double factor = std::round(ratio);
    if (!(resolution > 0.0) || !std::isfinite(ratio) || factor < 1.0 || std::abs(ratio - factor) > 1e-9 * ratio) {
        throw Error(ErrorKind::Alignment, "UCP resolution " + format_number(resolution) +
                                              " m is not an integer multiple of the mask cell size " +
                                              format_number(mask.cell_size()) + " m");
    }
    UcpGeometry g;
    g.factor = static_cast<int>(factor);
    g.georef = {mask.origin_x(), mask.origin_y(), g.factor * mask.cell_size()};
    g.mask_width = mask.width();
    g.mask_height = mask.height();
    g.mask_cell_size = mask.cell_size();
    g.cols = (mask.width() + g.factor - 1) / g.factor;
    g.rows = (mask.height() + g.factor - 1) / g.factor;
    return g;
}

std::size_t HistogramSpec::bins() const {
    if (!(bin_width > 0.0) || !(cap > 0.0)) throw Error(ErrorKind::Config, "histogram bin width and cap must be positive");
    const double n = cap / bin_width;
    if (std::abs(n - std::round(n)) > 1e-9 * n) {
        throw Error(ErrorKind::Config, "histogram cap must be a multiple of the bin width");
    }
    return static_cast<std::size_t>(std::round(n)) + 1;
}

std::size_t HistogramSpec::bin_of(double height) const {
    const std::size_t open = bins() - 1;
    if (height >= cap) return open;
    return std::min(open - 1, static_cast<std::size_t>(std::floor(std::max(0.0, height) / bin_width)));
}

std::vector<double> lambda_p(const FootprintMask& mask, const UcpGeometry& g) {
    return divide_by_cell_area(built_area(mask, g), g);
}

std::vector<double> lambda_b(const std::vector<Lod1Building>& buildings, const FootprintMask& mask,
                             const UcpGeometry& g) {
    auto area = built_area(mask, g);
    for (const auto& m : assign(buildings, g)) area[m.cell] += polygon_perimeter(m.building->footprint) * m.building->height;
    return divide_by_cell_area(std::move(area), g);
}

std::vector<HeightStats> height_stats(const std::vector<Lod1Building>& buildings, const UcpGeometry& g) {
    const auto members = assign(buildings, g);
    std::vector<HeightStats> out(g.size());
    std::vector<double> sum(g.size(), 0.0);
    for (const auto& m : members) {
        sum[m.cell] += m.building->height;
        ++out[m.cell].count;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].count) out[i].mean = sum[i] / static_cast<double>(out[i].count);
    }
    std::vector<double> sq(g.size(), 0.0);
    for (const auto& m : members) {
        const double d = m.building->height - out[m.cell].mean;
        sq[m.cell] += d * d;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].count > 1) out[i].std = std::sqrt(sq[i] / static_cast<double>(out[i].count));
    }
    return out;
}

std::vector<std::vector<double>> height_histogram(const std::vector<Lod1Building>& buildings, const UcpGeometry& g,
                                                  const HistogramSpec& spec) {
    const std::size_t nb = spec.bins();
    std::vector<std::vector<std::size_t>> counts(g.size(), std::vector<std::size_t>(nb, 0));
    std::vector<std::size_t> totals(g.size(), 0);
    for (const auto& m : assign(buildings, g)) {
        ++counts[m.cell][spec.bin_of(m.building->height)];
        ++totals[m.cell];
    }
    std::vector<std::vector<double>> out(g.size(), std::vector<double>(nb, 0.0));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!totals[i]) continue;
        for (std::size_t k = 0; k < nb; ++k) {
            out[i][k] = static_cast<double>(counts[i][k]) / static_cast<double>(totals[i]);
        }
    }
    return out;
}

std::vector<double> lambda_f(const std::vector<Lod1Building>& buildings, const UcpGeometry& g, double wind_direction) {
    std::vector<double> frontal(g.size(), 0.0);
    for (const auto& m : assign(buildings, g)) {
        frontal[m.cell] += projected_width(m.building->footprint, wind_direction) * m.building->height;
    }
    return divide_by_cell_area(std::move(frontal), g);
}

std::vector<double> area_weighted_height(const std::vector<Lod1Building>& buildings, const UcpGeometry& g) {
    std::vector<double> num(g.size(), 0.0);
    std::vector<double> den(g.size(), 0.0);
    for (const auto& m : assign(buildings, g)) {
        const double a = polygon_area(m.building->footprint);
        num[m.cell] += a * m.building->height;
        den[m.cell] += a;
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] = den[i] > 0.0 ? num[i] / den[i] : 0.0;
    return num;
}

std::vector<std::string> UcpGrid::scalar_fields() const {
    std::vector<std::string> out{"count", "mean", "std", "area_weighted_mean", "lambda_p", "lambda_b"};
    for (double d : directions) out.push_back("lambda_f_" + format_number(d));
    out.push_back("frac_below_5m");
    return out;
}

double UcpGrid::field(const UcpCell& c, const std::string& name) const {
    if (name == "count") return static_cast<double>(c.building_count);
    if (name == "mean") return c.mean_height;
    if (name == "std") return c.std_height;
    if (name == "area_weighted_mean") return c.area_weighted_height;
    if (name == "lambda_p") return c.lambda_p;
    if (name == "lambda_b") return c.lambda_b;
    if (name == "frac_below_5m") return c.frac_below_5m;
    for (std::size_t i = 0; i < directions.size(); ++i) {
        if (name == "lambda_f_" + format_number(directions[i])) return c.lambda_f.at(i);
    }
    for (std::size_t k = 0; k < c.histogram.size(); ++k) {
        if (name == "hist_bin_" + std::to_string(k)) return c.histogram[k];
    }
    throw Error(ErrorKind::Input, "unknown UCP field '" + name + "'");
}

UcpGrid aggregate_all(const std::vector<Lod1Building>& buildings, const FootprintMask& mask, double resolution,
                      const std::vector<double>& directions, const HistogramSpec& spec) {
    UcpGrid grid;
    grid.geometry = ucp_geometry(mask.raster, resolution);
    grid.histogram = spec;
    grid.directions = directions;
    const auto& g = grid.geometry;

    const auto lp = lambda_p(mask, g);
    const auto lb = lambda_b(buildings, mask, g);
    const auto hs = height_stats(buildings, g);
    const auto hist = height_histogram(buildings, g, spec);
    const auto aw = area_weighted_height(buildings, g);
    std::vector<std::vector<double>> lf;
    for (double d : directions) lf.push_back(lambda_f(buildings, g, d));

    // Fraction below 5 m is counted directly, independent of the bin layout.
    std::vector<std::size_t> below(g.size(), 0);
    for (const auto& m : assign(buildings, g)) {
        if (m.building->height < 5.0) ++below[m.cell];
    }

    grid.cells.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto& c = grid.cells[i];
        c.building_count = hs[i].count;
        c.mean_height = hs[i].mean;
        c.std_height = hs[i].std;
        c.area_weighted_height = aw[i];
        c.histogram = hist[i];
        c.frac_below_5m = hs[i].count ? static_cast<double>(below[i]) / static_cast<double>(hs[i].count) : 0.0;
        c.lambda_p = lp[i];
        c.lambda_b = lb[i];
        for (const auto& v : lf) c.lambda_f.push_back(v[i]);
    }
    return grid;
}

std::string format_number(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_ucp(const UcpGrid& grid, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& g = grid.geometry;
    const std::string res = format_number(g.resolution()) + "m";

    for (const auto& name : grid.scalar_fields()) {
        Raster r(g.cols, g.rows, g.georef);
        for (std::size_t i = 0; i < g.size(); ++i) r.values()[i] = static_cast<float>(grid.field(grid.cells[i], name));
        write_raster(r, dir / ("ucp_" + name + "_" + res + ".glbr"));
    }

    const auto csv_path = dir / ("ucp_" + res + ".csv");
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(ErrorKind::Io, "cannot open " + csv_path.string() + " for writing");
    csv << csv_header(grid) << '\n';
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            const auto& cell = grid.cell(c, r);
            csv << r << ',' << c << ',' << cell.building_count << ',' << format_csv(cell.mean_height) << ','
                << format_csv(cell.std_height) << ',' << format_csv(cell.lambda_p) << ',' << format_csv(cell.lambda_b);
            for (double v : cell.lambda_f) csv << ',' << format_csv(v);
            for (double v : cell.histogram) csv << ',' << format_csv(v);
            csv << ',' << format_csv(cell.area_weighted_height) << ',' << format_csv(cell.frac_below_5m) << '\n';
        }
    }
    if (!csv) throw Error(ErrorKind::Io, "write failed: " + csv_path.string());

    nlohmann::ordered_json meta;
    meta["resolution"] = g.resolution();
    meta["origin_x"] = g.georef.origin_x;
    meta["origin_y"] = g.georef.origin_y;
    meta["cols"] = g.cols;
    meta["rows"] = g.rows;
    meta["factor"] = g.factor;
    meta["mask_width"] = g.mask_width;
    meta["mask_height"] = g.mask_height;
    meta["mask_cell_size"] = g.mask_cell_size;
    meta["bin_width"] = grid.histogram.bin_width;
    meta["cap"] = grid.histogram.cap;
    meta["directions"] = grid.directions;
    const auto meta_path = dir / ("ucp_" + res + ".json");
    std::ofstream mo(meta_path, std::ios::binary | std::ios::trunc);
    if (!mo) throw Error(ErrorKind::Io, "cannot open " + meta_path.string() + " for writing");
    mo << meta.dump(2) << '\n';
    if (!mo) throw Error(ErrorKind::Io, "write failed: " + meta_path.string());
}

UcpGrid read_ucp(const std::filesystem::path& dir, double resolution) {
    const std::string res = format_number(resolution) + "m";
    const auto meta_path = dir / ("ucp_" + res + ".json");
    const auto csv_path = dir / ("ucp_" + res + ".csv");

    std::ifstream mi(meta_path, std::ios::binary);
    if (!mi) throw Error(ErrorKind::Io, "cannot open " + meta_path.string());
    UcpGrid grid;
    try {
        const auto meta = nlohmann::json::parse(mi);
        auto& g = grid.geometry;
        g.georef = {meta.at("origin_x").get<double>(), meta.at("origin_y").get<double>(),
                    meta.at("resolution").get<double>()};
        g.cols = meta.at("cols").get<int>();
        g.rows = meta.at("rows").get<int>();
        g.factor = meta.at("factor").get<int>();
        g.mask_width = meta.at("mask_width").get<int>();
        g.mask_height = meta.at("mask_height").get<int>();
        g.mask_cell_size = meta.at("mask_cell_size").get<double>();
        grid.histogram = {meta.at("bin_width").get<double>(), meta.at("cap").get<double>()};
        grid.directions = meta.at("directions").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, meta_path.string() + ": " + e.what());
    }
    const auto& g = grid.geometry;
    if (g.cols < 1 || g.rows < 1 || g.factor < 1) throw Error(ErrorKind::Format, meta_path.string() + ": bad geometry");

    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line) || line != csv_header(grid)) {
        throw Error(ErrorKind::Format, csv_path.string() + ": unexpected header");
    }
    const std::size_t nb = grid.histogram.bins();
    const std::size_t nd = grid.directions.size();
    grid.cells.resize(g.size());
    std::vector<char> seen(g.size(), 0);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = csv_path.string() + " line " + std::to_string(line_no);
        const auto f = split_csv(line);
        if (f.size() != 7 + nd + nb + 2) throw Error(ErrorKind::Format, where + ": wrong column count");
        const int r = static_cast<int>(parse_double(f[0], where));
        const int c = static_cast<int>(parse_double(f[1], where));
        if (r < 0 || c < 0 || r >= g.rows || c >= g.cols || seen[g.index(c, r)]) {
            throw Error(ErrorKind::Format, where + ": bad or repeated cell coordinate");
        }
        seen[g.index(c, r)] = 1;
        auto& cell = grid.cells[g.index(c, r)];
        cell.building_count = static_cast<std::size_t>(parse_double(f[2], where));
        cell.mean_height = parse_double(f[3], where);
        cell.std_height = parse_double(f[4], where);
        cell.lambda_p = parse_double(f[5], where);
        cell.lambda_b = parse_double(f[6], where);
        std::size_t k = 7;
        for (std::size_t i = 0; i < nd; ++i) cell.lambda_f.push_back(parse_double(f[k++], where));
        for (std::size_t i = 0; i < nb; ++i) cell.histogram.push_back(parse_double(f[k++], where));
        cell.area_weighted_height = parse_double(f[k++], where);
        cell.frac_below_5m = parse_double(f[k], where);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) throw Error(ErrorKind::Format, csv_path.string() + ": missing cells");
    }
    return grid;
}

}  // namespace globus
