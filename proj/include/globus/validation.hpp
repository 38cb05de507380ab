#pragma once

#include "globus/ucp.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace globus {

struct PairedSeries {
    std::vector<double> predicted;
    std::vector<double> reference;
    std::vector<std::pair<int, int>> cells;  // (row, col) of each pair

    std::size_t size() const noexcept { return predicted.size(); }
};

/// sqrt(mean((pred - ref)^2)). Throws ErrorKind::Empty on an empty series.
double rmse(const PairedSeries& s);

struct MapeResult {
    double percent = 0.0;
    std::size_t n = 0;         // pairs used
    std::size_t excluded = 0;  // pairs with |ref| < min_reference
};

/// 100/N * sum(|pred - ref| / |ref|) over pairs with |ref| >= min_reference.
/// Throws ErrorKind::Empty when every pair is filtered out.
MapeResult mape(const PairedSeries& s, double min_reference = 1.0);

/// One pair per cell, skipping cells with neither buildings nor built pixels
/// in both grids. Throws ErrorKind::Alignment on differing geometry.
PairedSeries pair_grids(const UcpGrid& pred, const UcpGrid& ref, const std::string& field);

struct FieldMetrics {
    std::string field;
    std::size_t n = 0;
    std::optional<double> rmse;
    std::optional<double> mape;
    std::size_t excluded = 0;
};

std::vector<FieldMetrics> compare_fields(const UcpGrid& pred, const UcpGrid& ref, double min_reference = 1.0);

/// Writes scatter_{field}.csv, metrics.csv and histogram_comparison.csv.
std::vector<FieldMetrics> export_comparison(const UcpGrid& pred, const UcpGrid& ref,
                                            const std::filesystem::path& out_dir, double min_reference = 1.0);

}  // namespace globus
