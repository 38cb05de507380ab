#include "globus/tiler.hpp"

#include "globus/error.hpp"
#include "globus/raster_io.hpp"

#include <algorithm>
#include <string>

namespace globus {
namespace {

std::string coord(int row, int col) { return "(" + std::to_string(row) + "," + std::to_string(col) + ")"; }

}  // namespace

GeoRef TilePlan::tile_georef(int tile_row, int tile_col) const noexcept {
    const double span = tile_size * georef.cell_size;
    return {georef.origin_x + tile_col * span, georef.origin_y + tile_row * span, georef.cell_size};
}

int TilePlan::valid_cols(int tile_col) const noexcept {
    return std::min(tile_size, source_width - tile_col * tile_size);
}

int TilePlan::valid_rows(int tile_row) const noexcept {
    return std::min(tile_size, source_height - tile_row * tile_size);
}

TilePlan plan_tiles(int width, int height, GeoRef georef, float nodata, int tile_size) {
    if (width < 1 || height < 1) throw Error(ErrorKind::Shape, "plan_tiles: empty source");
    if (tile_size < 1) throw Error(ErrorKind::Shape, "plan_tiles: tile size must be positive");
    TilePlan p;
    p.source_width = width;
    p.source_height = height;
    p.tile_size = tile_size;
    p.tiles_x = (width + tile_size - 1) / tile_size;
    p.tiles_y = (height + tile_size - 1) / tile_size;
    p.pad_x = p.tiles_x * tile_size - width;
    p.pad_y = p.tiles_y * tile_size - height;
    p.georef = georef;
    p.nodata = nodata;
    return p;
}

SplitResult split(const std::vector<Raster>& channels, int tile_size) {
    if (channels.empty()) throw Error(ErrorKind::Shape, "split: no channels");
    const Raster& first = channels.front();
    for (std::size_t c = 1; c < channels.size(); ++c) {
        require_aligned(first, channels[c], ("split channel " + std::to_string(c)).c_str());
    }
    SplitResult out;
    out.plan = plan_tiles(first.width(), first.height(), first.georef(), first.nodata(), tile_size);
    const auto& plan = out.plan;
    const auto cells = static_cast<std::size_t>(tile_size) * tile_size;
    out.tiles.reserve(plan.tile_count());
    for (int tr = 0; tr < plan.tiles_y; ++tr) {
        for (int tc = 0; tc < plan.tiles_x; ++tc) {
            TileStack t;
            t.row_index = tr;
            t.col_index = tc;
            t.tile_size = tile_size;
            t.valid_rows = plan.valid_rows(tr);
            t.valid_cols = plan.valid_cols(tc);
            t.georef = plan.tile_georef(tr, tc);
            t.channels.reserve(channels.size());
            for (const Raster& ch : channels) {
                std::vector<float> data(cells, 0.0f);
                for (int r = 0; r < t.valid_rows; ++r) {
                    const auto src = ch.row(tr * tile_size + r).subspan(static_cast<std::size_t>(tc) * tile_size,
                                                                        static_cast<std::size_t>(t.valid_cols));
                    std::copy(src.begin(), src.end(), data.begin() + static_cast<std::ptrdiff_t>(r) * tile_size);
                }
                t.channels.push_back(std::move(data));
            }
            out.tiles.push_back(std::move(t));
        }
    }
    return out;
}

Raster stitch(const TilePlan& plan, const std::vector<TileData>& tiles) {
    const int ts = plan.tile_size;
    std::vector<char> seen(plan.tile_count(), 0);
    Raster out(plan.source_width, plan.source_height, plan.georef, plan.nodata);
    for (const auto& t : tiles) {
        if (t.row_index < 0 || t.row_index >= plan.tiles_y || t.col_index < 0 || t.col_index >= plan.tiles_x) {
            throw Error(ErrorKind::Coverage, "stitch: tile " + coord(t.row_index, t.col_index) + " is outside the plan");
        }
        auto& flag = seen[static_cast<std::size_t>(t.row_index) * plan.tiles_x + t.col_index];
        if (flag) throw Error(ErrorKind::Coverage, "stitch: duplicate tile " + coord(t.row_index, t.col_index));
        flag = 1;
        if (t.values.size() != static_cast<std::size_t>(ts) * ts) {
            throw Error(ErrorKind::Shape, "stitch: tile " + coord(t.row_index, t.col_index) + " has " +
                                              std::to_string(t.values.size()) + " cells");
        }
        const int vr = plan.valid_rows(t.row_index);
        const int vc = plan.valid_cols(t.col_index);
        for (int r = 0; r < vr; ++r) {
            const auto* src = t.values.data() + static_cast<std::size_t>(r) * ts;
            auto dst = out.row(t.row_index * ts + r).subspan(static_cast<std::size_t>(t.col_index) * ts);
            std::copy(src, src + vc, dst.begin());
        }
    }
    for (int tr = 0; tr < plan.tiles_y; ++tr) {
        for (int tc = 0; tc < plan.tiles_x; ++tc) {
            if (!seen[static_cast<std::size_t>(tr) * plan.tiles_x + tc]) {
                throw Error(ErrorKind::Coverage, "stitch: missing tile " + coord(tr, tc));
            }
        }
    }
    return out;
}

void dump_tiles(const std::vector<TileStack>& tiles, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& t : tiles) {
        for (std::size_t c = 0; c < t.channels.size(); ++c) {
            const Raster r(t.tile_size, t.tile_size, t.georef, kDefaultNodata, t.channels[c]);
            write_raster(r, dir / ("tile_" + std::to_string(t.row_index) + "_" + std::to_string(t.col_index) + "_" +
                                   std::to_string(c) + ".glbr"));
        }
    }
}

}  // namespace globus
