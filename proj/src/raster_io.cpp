#include "globus/raster_io.hpp"

#include "globus/error.hpp"
#include "le_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

namespace globus {
namespace {

constexpr char kMagic[4] = {'G', 'L', 'B', 'R'};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Whitespace tokenizer that remembers where each token started.
class Tokens {
public:
    explicit Tokens(std::string text) : text_(std::move(text)) {}

    bool next(std::string_view& tok, std::size_t& offset) {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ >= text_.size()) return false;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        tok = std::string_view(text_).substr(start, pos_ - start);
        offset = start;
        return true;
    }

    std::size_t size() const noexcept { return text_.size(); }

private:
    std::string text_;
    std::size_t pos_ = 0;
};

template <class T>
T parse_number(std::string_view tok, std::size_t offset, const char* what) {
    T value{};
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw FormatError(std::string("invalid ") + what + " '" + std::string(tok) + "'", offset);
    }
    return value;
}

void format_float(std::ostream& out, float v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
}

void format_double(std::ostream& out, double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
}

}  // namespace

void write_glbr(const Raster& r, std::ostream& out) {
    out.write(kMagic, 4);
    le::put<std::uint16_t>(out, kGlbrVersion);
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(r.width()));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(r.height()));
    le::put<double>(out, r.origin_x());
    le::put<double>(out, r.origin_y());
    le::put<double>(out, r.cell_size());
    le::put<float>(out, r.nodata());
    std::string body(r.size() * 4, '\0');
    std::size_t k = 0;
    for (float v : r.values()) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) body[k++] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

Raster read_glbr(std::istream& in) {
    le::Reader rd(in);
    char magic[4];
    rd.read_raw(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad magic, expected GLBR", 0);
    const auto version = rd.get<std::uint16_t>("version");
    if (version != kGlbrVersion) {
        throw FormatError("unsupported GLBR version " + std::to_string(version), 4);
    }
    const auto width = rd.get<std::uint32_t>("width");
    const auto height = rd.get<std::uint32_t>("height");
    if (width == 0 || width > 1u << 30) throw FormatError("invalid width", 6);
    if (height == 0 || height > 1u << 30) throw FormatError("invalid height", 10);
    const auto ox = rd.get<double>("origin_x");
    const auto oy = rd.get<double>("origin_y");
    const auto cs = rd.get<double>("cell_size");
    if (!(cs > 0.0) || !std::isfinite(cs)) throw FormatError("invalid cell size", 30);
    const auto nodata = rd.get<float>("nodata");
    if (!std::isfinite(nodata)) throw FormatError("non-finite nodata", 38);

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::string body(n * 4, '\0');
    rd.read_raw(body.data(), body.size(), "cell data");
    if (!rd.at_eof()) throw FormatError("trailing bytes after cell data", rd.offset());
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + b])) << (8 * b);
        values[i] = std::bit_cast<float>(bits);
        if (!std::isfinite(values[i])) throw FormatError("non-finite cell value", kGlbrHeaderBytes + 4 * i);
    }
    return Raster(static_cast<int>(width), static_cast<int>(height), GeoRef{ox, oy, cs}, nodata, std::move(values));
}

void write_ascii_grid(const Raster& r, std::ostream& out) {
    out << "ncols " << r.width() << '\n' << "nrows " << r.height() << '\n';
    out << "xllcorner ";
    format_double(out, r.origin_x());
    out << "\nyllcorner ";
    format_double(out, r.origin_y());
    out << "\ncellsize ";
    format_double(out, r.cell_size());
    out << "\nNODATA_value ";
    format_float(out, r.nodata());
    out << '\n';
    for (int row = r.height() - 1; row >= 0; --row) {
        const auto values = r.row(row);
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (c) out << ' ';
            format_float(out, values[c]);
        }
        out << '\n';
    }
}

Raster read_ascii_grid(std::istream& in) {
    Tokens tokens(std::string(std::istreambuf_iterator<char>(in), {}));
    std::string_view tok;
    std::size_t offset = 0;
    long long ncols = -1, nrows = -1;
    double x0 = NAN, y0 = NAN, cs = NAN;
    bool x_center = false, y_center = false;
    float nodata = kDefaultNodata;

    // Header: keyword/value pairs until the first bare number.
    std::string_view pending;
    std::size_t pending_offset = 0;
    bool have_pending = false;
    while (tokens.next(tok, offset)) {
        if (std::isalpha(static_cast<unsigned char>(tok.front())) == 0) {
            pending = tok;
            pending_offset = offset;
            have_pending = true;
            break;
        }
        const std::string key = lower(tok);
        std::string_view val;
        std::size_t voff = 0;
        if (!tokens.next(val, voff)) throw FormatError("missing value for header key " + key, tokens.size());
        if (key == "ncols") ncols = parse_number<long long>(val, voff, "ncols");
        else if (key == "nrows") nrows = parse_number<long long>(val, voff, "nrows");
        else if (key == "xllcorner") x0 = parse_number<double>(val, voff, "xllcorner");
        else if (key == "yllcorner") y0 = parse_number<double>(val, voff, "yllcorner");
        else if (key == "xllcenter") { x0 = parse_number<double>(val, voff, "xllcenter"); x_center = true; }
        else if (key == "yllcenter") { y0 = parse_number<double>(val, voff, "yllcenter"); y_center = true; }
        else if (key == "cellsize") cs = parse_number<double>(val, voff, "cellsize");
        else if (key == "nodata_value") nodata = parse_number<float>(val, voff, "NODATA_value");
        else throw FormatError("unknown header key '" + std::string(tok) + "'", offset);
    }
    if (ncols < 1 || nrows < 1) throw FormatError("missing or invalid ncols/nrows", 0);
    if (!(cs > 0.0) || std::isnan(x0) || std::isnan(y0)) throw FormatError("missing georeference header", 0);
    if (x_center) x0 -= cs / 2;
    if (y_center) y0 -= cs / 2;

    const auto w = static_cast<int>(ncols);
    const auto h = static_cast<int>(nrows);
    std::vector<float> values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i == 0 && have_pending) {
            tok = pending;
            offset = pending_offset;
        } else if (!tokens.next(tok, offset)) {
            throw FormatError("expected " + std::to_string(values.size()) + " cells, got " + std::to_string(i),
                              tokens.size());
        }
        const float v = parse_number<float>(tok, offset, "cell value");
        if (!std::isfinite(v)) throw FormatError("non-finite cell value", offset);
        const auto file_row = static_cast<int>(i / static_cast<std::size_t>(w));
        const auto col = static_cast<std::size_t>(i % static_cast<std::size_t>(w));
        values[static_cast<std::size_t>(h - 1 - file_row) * static_cast<std::size_t>(w) + col] = v;
    }
    if (tokens.next(tok, offset)) throw FormatError("trailing data after cell values", offset);
    return Raster(w, h, GeoRef{x0, y0, cs}, nodata, std::move(values));
}

void write_raster(const Raster& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    if (path.extension() == ".asc") write_ascii_grid(r, out);
    else write_glbr(r, out);
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    try {
        if (path.extension() == ".asc") return read_ascii_grid(in);
        return read_glbr(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.detail(), e.offset());
    }
}

}  // namespace globus
