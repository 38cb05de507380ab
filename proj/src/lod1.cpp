#include "globus/lod1.hpp"

#include "geojson.hpp"
#include "globus/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace globus {
namespace {

double median(std::vector<float>& v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lo + hi) / 2.0;
}

}  // namespace

Lod1Result assign_heights(const Raster& pred, const FootprintMask& mask,
                          const std::vector<BuildingFootprint>& footprints, ZonalStat stat) {
    require_aligned(pred, mask.raster, "assign_heights");

    std::vector<const BuildingFootprint*> order;
    order.reserve(footprints.size());
    for (const auto& f : footprints) order.push_back(&f);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::unordered_map<std::int64_t, std::size_t> slot;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!slot.emplace(order[i]->id, i).second) {
            throw Error(ErrorKind::Input, "duplicate footprint id " + std::to_string(order[i]->id));
        }
    }

    std::vector<std::vector<float>> zones(order.size());
    const auto values = pred.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto id = mask.source_ids[i];
        if (id == 0 || values[i] == pred.nodata()) continue;
        const auto it = slot.find(id);
        if (it != slot.end()) zones[it->second].push_back(values[i]);
    }

    Lod1Result out;
    out.buildings.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& zone = zones[i];
        Lod1Building b{*order[i], 0.0, zone.size()};
        if (zone.empty()) {
            out.warnings.push_back({b.footprint.id, "footprint owns no raster cells; height set to 0"});
        } else if (stat == ZonalStat::Mean) {
            double sum = 0.0;
            for (float v : zone) sum += v;
            b.height = std::max(0.0, sum / static_cast<double>(zone.size()));
        } else {
            b.height = std::max(0.0, median(zone));
        }
        out.buildings.push_back(std::move(b));
    }
    return out;
}

void write_lod1(const std::vector<Lod1Building>& buildings, const std::filesystem::path& path) {
    std::vector<FootprintFeature> features;
    features.reserve(buildings.size());
    for (const auto& b : buildings) {
        if (!std::isfinite(b.height) || b.height < 0.0) {
            throw Error(ErrorKind::Input, "building " + std::to_string(b.footprint.id) + " has an invalid height");
        }
        features.push_back({b.footprint, b.height});
    }
    detail::write_feature_collection(features, path);
}

std::vector<Lod1Building> parse_lod1(const std::string& text) {
    std::vector<Lod1Building> out;
    for (auto& feat : detail::parse_feature_collection(text)) {
        if (!feat.height_m) {
            throw Error(ErrorKind::Format, "feature id " + std::to_string(feat.footprint.id) + " has no height_m");
        }
        if (!std::isfinite(*feat.height_m) || *feat.height_m < 0.0) {
            throw Error(ErrorKind::Format, "feature id " + std::to_string(feat.footprint.id) + " has an invalid height_m");
        }
        out.push_back({std::move(feat.footprint), *feat.height_m, 0});
    }
    return out;
}

std::vector<Lod1Building> read_lod1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_lod1(ss.str());
}

}  // namespace globus
