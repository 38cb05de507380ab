#pragma once

#include "globus/raster.hpp"

#include <filesystem>
#include <vector>

namespace globus {

inline constexpr int kTileSize = 256;

/// Layout of a source grid cut into square tiles. Padding sits at the
/// high-index end of each axis (east columns, north rows).
struct TilePlan {
    int source_width = 0;
    int source_height = 0;
    int tile_size = kTileSize;
    int tiles_x = 0;
    int tiles_y = 0;
    int pad_x = 0;
    int pad_y = 0;
    GeoRef georef;
    float nodata = kDefaultNodata;

    std::size_t tile_count() const noexcept { return static_cast<std::size_t>(tiles_x) * tiles_y; }
    GeoRef tile_georef(int tile_row, int tile_col) const noexcept;
    int valid_cols(int tile_col) const noexcept;
    int valid_rows(int tile_row) const noexcept;
};

TilePlan plan_tiles(int width, int height, GeoRef georef, float nodata = kDefaultNodata, int tile_size = kTileSize);

/// One tile across every channel; each channel holds tile_size^2 cells,
/// row-major, zero outside the valid extent.
struct TileStack {
    int row_index = 0;
    int col_index = 0;
    int tile_size = kTileSize;
    int valid_rows = 0;
    int valid_cols = 0;
    GeoRef georef;
    std::vector<std::vector<float>> channels;
};

struct SplitResult {
    TilePlan plan;
    std::vector<TileStack> tiles;  // row-major over the tile grid
};

/// Channels must be aligned. Nodata cells are copied as-is.
SplitResult split(const std::vector<Raster>& channels, int tile_size = kTileSize);

/// Single-channel tile payload, e.g. a network prediction.
struct TileData {
    int row_index = 0;
    int col_index = 0;
    std::vector<float> values;
};

/// Reassembles the plan's grid. Throws ErrorKind::Coverage on a missing,
/// duplicate, or out-of-range tile coordinate and ErrorKind::Shape on a
/// payload of the wrong size.
Raster stitch(const TilePlan& plan, const std::vector<TileData>& tiles);

/// Writes `tile_{row}_{col}_{channel}.glbr` for each tile channel.
void dump_tiles(const std::vector<TileStack>& tiles, const std::filesystem::path& dir);

}  // namespace globus
