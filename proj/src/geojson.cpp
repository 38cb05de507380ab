#include "geojson.hpp"

#include "globus/error.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <string>

namespace globus::detail {
namespace {

using json = nlohmann::json;

Ring parse_ring(const json& coords, const std::string& where) {
    if (!coords.is_array()) throw Error(ErrorKind::Format, where + ": ring is not an array");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
            throw Error(ErrorKind::Format, where + ": malformed coordinate");
        }
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    return ring;
}

json ring_json(const Ring& ring) {
    json coords = json::array();
    for (const auto& p : ring) coords.push_back({p.x, p.y});
    if (!ring.empty()) coords.push_back({ring.front().x, ring.front().y});
    return coords;
}

// Shortest decimal that reads back to the same float.
double float_decimal(double v) {
    const auto f = static_cast<float>(v);
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), f);
    double out = 0.0;
    std::from_chars(buf, ptr, out);
    return out;
}

}  // namespace

std::vector<FootprintFeature> parse_feature_collection(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
        throw FormatError("expected a GeoJSON FeatureCollection", 0);
    }
    std::vector<FootprintFeature> out;
    std::size_t index = 0;
    for (const auto& feat : doc["features"]) {
        const std::string where = "feature #" + std::to_string(index++);
        if (!feat.is_object() || !feat.contains("properties") || !feat["properties"].is_object()) {
            throw Error(ErrorKind::Format, where + ": missing properties");
        }
        const auto& props = feat["properties"];
        if (!props.contains("id") || !props["id"].is_number_integer()) {
            throw Error(ErrorKind::Format, where + ": missing integer `id` property");
        }
        FootprintFeature ff;
        ff.footprint.id = props["id"].get<std::int64_t>();
        const std::string fid = "feature id " + std::to_string(ff.footprint.id);
        if (!feat.contains("geometry") || !feat["geometry"].is_object() ||
            feat["geometry"].value("type", "") != "Polygon") {
            throw Error(ErrorKind::Format, fid + ": geometry must be a Polygon");
        }
        const auto& rings = feat["geometry"]["coordinates"];
        if (!rings.is_array() || rings.empty()) throw Error(ErrorKind::Format, fid + ": empty coordinates");
        ff.footprint.exterior = parse_ring(rings[0], fid);
        for (std::size_t k = 1; k < rings.size(); ++k) ff.footprint.holes.push_back(parse_ring(rings[k], fid));
        if (props.contains("height_m")) {
            if (!props["height_m"].is_number()) throw Error(ErrorKind::Format, fid + ": `height_m` is not a number");
            ff.height_m = props["height_m"].get<double>();
        }
        validate_footprint(ff.footprint);
        out.push_back(std::move(ff));
    }
    return out;
}

std::string format_feature_collection(const std::vector<FootprintFeature>& features) {
    std::string text = "{\"type\":\"FeatureCollection\",\"features\":[";
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        nlohmann::ordered_json feat;
        feat["type"] = "Feature";
        feat["properties"]["id"] = f.footprint.id;
        if (f.height_m) feat["properties"]["height_m"] = float_decimal(*f.height_m);
        json rings = json::array();
        rings.push_back(ring_json(f.footprint.exterior));
        for (const auto& h : f.footprint.holes) rings.push_back(ring_json(h));
        feat["geometry"] = {{"type", "Polygon"}, {"coordinates", rings}};
        text += i ? ",\n" : "\n";
        text += feat.dump();
    }
    text += "\n]}\n";
    return text;
}

void write_feature_collection(const std::vector<FootprintFeature>& features, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << format_feature_collection(features);
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace globus::detail
