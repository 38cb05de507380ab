#include "globus/validation.hpp"

#include "globus/error.hpp"

#include <cmath>
#include <fstream>

namespace globus {
namespace {

bool is_empty(const UcpCell& c) { return c.building_count == 0 && c.lambda_p == 0.0; }

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

double rmse(const PairedSeries& s) {
    if (s.predicted.size() != s.reference.size()) throw Error(ErrorKind::Shape, "rmse: series lengths differ");
    if (s.predicted.empty()) throw Error(ErrorKind::Empty, "rmse: empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
        const double d = s.predicted[i] - s.reference[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(s.predicted.size()));
}

MapeResult mape(const PairedSeries& s, double min_reference) {
    if (s.predicted.size() != s.reference.size()) throw Error(ErrorKind::Shape, "mape: series lengths differ");
    MapeResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
        const double ref = std::abs(s.reference[i]);
        if (ref < min_reference || ref == 0.0) {
            ++r.excluded;
            continue;
        }
        sum += std::abs(s.predicted[i] - s.reference[i]) / ref;
        ++r.n;
    }
    if (r.n == 0) throw Error(ErrorKind::Empty, "mape: no pairs with |reference| >= " + format_number(min_reference));
    r.percent = 100.0 * sum / static_cast<double>(r.n);
    return r;
}

PairedSeries pair_grids(const UcpGrid& pred, const UcpGrid& ref, const std::string& field) {
    if (!(pred.geometry == ref.geometry)) throw Error(ErrorKind::Alignment, "pair_grids: grid geometries differ");
    PairedSeries s;
    const auto& g = pred.geometry;
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            const auto& a = pred.cell(c, r);
            const auto& b = ref.cell(c, r);
            if (is_empty(a) && is_empty(b)) continue;
            s.predicted.push_back(pred.field(a, field));
            s.reference.push_back(ref.field(b, field));
            s.cells.emplace_back(r, c);
        }
    }
    return s;
}

std::vector<FieldMetrics> compare_fields(const UcpGrid& pred, const UcpGrid& ref, double min_reference) {
    std::vector<FieldMetrics> out;
    for (const auto& field : ref.scalar_fields()) {
        const auto s = pair_grids(pred, ref, field);
        FieldMetrics m{field, s.size(), std::nullopt, std::nullopt, s.size()};
        if (s.size()) {
            m.rmse = rmse(s);
            try {
                const auto mp = mape(s, min_reference);
                m.mape = mp.percent;
                m.excluded = mp.excluded;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Empty) throw;
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<FieldMetrics> export_comparison(const UcpGrid& pred, const UcpGrid& ref,
                                            const std::filesystem::path& out_dir, double min_reference) {
    std::filesystem::create_directories(out_dir);
    const auto metrics = compare_fields(pred, ref, min_reference);

    for (const auto& field : ref.scalar_fields()) {
        const auto s = pair_grids(pred, ref, field);
        const auto path = out_dir / ("scatter_" + field + ".csv");
        auto out = open_csv(path);
        out << "cell_row,cell_col,predicted,reference\n";
        for (std::size_t i = 0; i < s.size(); ++i) {
            out << s.cells[i].first << ',' << s.cells[i].second << ',' << format_number(s.predicted[i]) << ','
                << format_number(s.reference[i]) << '\n';
        }
        finish(out, path);
    }

    {
        const auto path = out_dir / "metrics.csv";
        auto out = open_csv(path);
        out << "field,n,rmse,mape,excluded\n";
        for (const auto& m : metrics) {
            out << m.field << ',' << m.n << ',' << (m.rmse ? format_number(*m.rmse) : "") << ','
                << (m.mape ? format_number(*m.mape) : "") << ',' << m.excluded << '\n';
        }
        finish(out, path);
    }

    {
        const auto path = out_dir / "histogram_comparison.csv";
        auto out = open_csv(path);
        out << "cell_row,cell_col,bin,predicted,reference\n";
        if (!(pred.histogram == ref.histogram)) {
            throw Error(ErrorKind::Alignment, "export_comparison: histogram layouts differ");
        }
        const auto s = pair_grids(pred, ref, "count");
        for (const auto& [r, c] : s.cells) {
            const auto& a = pred.cell(c, r);
            const auto& b = ref.cell(c, r);
            for (std::size_t k = 0; k < a.histogram.size(); ++k) {
                out << r << ',' << c << ',' << k << ',' << format_number(a.histogram[k]) << ','
                    << format_number(b.histogram[k]) << '\n';
            }
            out << r << ',' << c << ",below_5m," << format_number(a.frac_below_5m) << ','
                << format_number(b.frac_below_5m) << '\n';
        }
        finish(out, path);
    }
    return metrics;
}

}  // namespace globus
