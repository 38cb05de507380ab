#pragma once

// Shared GeoJSON FeatureCollection reader/writer for footprints and LoD-1
// buildings.

#include "globus/footprints.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace globus::detail {

std::vector<FootprintFeature> parse_feature_collection(const std::string& text);
void write_feature_collection(const std::vector<FootprintFeature>& features, const std::filesystem::path& path);
std::string format_feature_collection(const std::vector<FootprintFeature>& features);

}  // namespace globus::detail
