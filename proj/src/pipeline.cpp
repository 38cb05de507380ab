#include "globus/pipeline.hpp"

#include "globus/error.hpp"
#include "globus/pointcloud.hpp"
#include "globus/raster_io.hpp"
#include "globus/simd/kernels.hpp"
#include "globus/tiler.hpp"
#include "globus/validation.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace globus {
namespace {

// Standard filenames inside out_dir.
constexpr const char* kDsmFine = "dsm_1m.glbr";
constexpr const char* kDemFine = "dem_1m.glbr";
constexpr const char* kNdsmRef = "ndsm_ref_1m.glbr";
constexpr const char* kNdsmCoarse = "ndsm_coarse.glbr";
constexpr const char* kNdsmResampled = "ndsm_resampled_1m.glbr";
constexpr const char* kPopulationFine = "population_1m.glbr";
constexpr const char* kMaskFine = "mask_1m.glbr";
constexpr const char* kNormalization = "normalization.csv";
constexpr const char* kWeights = "weights.glbw";
constexpr const char* kLossHistory = "loss_history.csv";
constexpr const char* kPrediction = "pred_1m.glbr";
constexpr const char* kLod1 = "lod1.geojson";
constexpr const char* kLod1Ref = "lod1_ref.geojson";
constexpr const char* kLod1Warnings = "lod1_warnings.csv";

void log(const PipelineConfig& cfg, const std::string& msg) {
    if (cfg.verbose) std::cerr << "globus: " << msg << '\n';
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorKind::Config, "config key '" + key + "': " + why + " (got '" + value + "')");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "expected a number");
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "expected an integer");
    return out;
}

int to_int32(const std::string& key, const std::string& v) {
    const auto x = to_int(key, v);
    if (x < -(1LL << 31) || x >= (1LL << 31)) bad_value(key, v, "integer out of range");
    return static_cast<int>(x);
}

int to_int_at_least(const std::string& key, const std::string& v, int lo) {
    const int x = to_int32(key, v);
    if (x < lo) bad_value(key, v, "must be at least " + std::to_string(lo));
    return x;
}

double to_positive(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (!(x > 0.0)) bad_value(key, v, "must be positive");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "expected a non-negative integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "expected true or false");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) bad_value(key, v, "expected a comma-separated list");
    return out;
}

fs::path out_path(const PipelineConfig& cfg, const char* name) { return cfg.out_dir / name; }

Raster load(const PipelineConfig& cfg, const char* name) {
    const auto p = out_path(cfg, name);
    if (!fs::exists(p)) {
        throw Error(ErrorKind::Input, "missing intermediate " + p.string() + "; run the earlier stages first");
    }
    return read_raster(p);
}

fs::path require_input(const PipelineConfig& cfg, const std::string& key) {
    const auto p = cfg.input(key);
    if (!fs::exists(p)) throw Error(ErrorKind::Config, "input '" + key + "' not found: " + p.string());
    return p;
}

// Fine grid covering the coarse raster's extent.
Raster fine_template(const Raster& coarse, double cell) {
    const double w = coarse.extent_x() / cell;
    const double h = coarse.extent_y() / cell;
    if (std::abs(w - std::round(w)) > 1e-6 || std::abs(h - std::round(h)) > 1e-6) {
        throw Error(ErrorKind::Shape, "coarse extent is not a whole number of fine cells");
    }
    return Raster(static_cast<int>(std::round(w)), static_cast<int>(std::round(h)),
                  GeoRef{coarse.origin_x(), coarse.origin_y(), cell});
}

FootprintMask footprint_mask(const PipelineConfig& cfg, const Raster& templ,
                             std::vector<BuildingFootprint>* out_footprints = nullptr) {
    auto fps = read_footprints(require_input(cfg, "footprints"));
    std::vector<std::int64_t> outside;
    auto mask = rasterize(fps, templ, &outside);
    if (!outside.empty()) log(cfg, std::to_string(outside.size()) + " footprints lie outside the raster");
    if (out_footprints) *out_footprints = std::move(fps);
    return mask;
}

const std::vector<std::string> kLayers{"ndsm", "population", "mask", "target"};

void write_normalization(const std::vector<NormalizationParams>& params, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << "layer,min,max\n";
    for (std::size_t i = 0; i < params.size(); ++i) {
        out << kLayers[i] << ',' << format_number(params[i].min_value) << ',' << format_number(params[i].max_value)
            << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<NormalizationParams> read_normalization(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Input, "missing " + path.string() + "; run the tile stage first");
    std::string line;
    std::getline(in, line);
    if (trim(line) != "layer,min,max") throw Error(ErrorKind::Format, path.string() + ": unexpected header");
    std::vector<NormalizationParams> out;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string name, lo, hi;
        std::getline(ss, name, ',');
        std::getline(ss, lo, ',');
        std::getline(ss, hi, ',');
        if (out.size() >= kLayers.size() || name != kLayers[out.size()]) {
            throw Error(ErrorKind::Format, path.string() + ": unexpected layer '" + name + "'");
        }
        out.push_back({to_double(path.string(), lo), to_double(path.string(), hi)});
    }
    if (out.size() != kLayers.size()) throw Error(ErrorKind::Format, path.string() + ": missing layers");
    return out;
}

// Channels normalized with stored params, so train and predict see the same scaling.
NormalizedInputs normalized_inputs(const PipelineConfig& cfg, const std::vector<NormalizationParams>* stored) {
    const Raster ndsm = load(cfg, kNdsmResampled);
    const Raster pop = load(cfg, kPopulationFine);
    const Raster mask = load(cfg, kMaskFine);
    NormalizedInputs out;
    std::size_t i = 0;
    for (const Raster* r : {&ndsm, &pop, &mask}) {
        auto n = stored ? minmax_normalize(*r, (*stored)[i]) : minmax_normalize(*r);
        out.channels.push_back(std::move(n.raster));
        out.params.push_back(n.params);
        ++i;
    }
    return out;
}

Tensor target_tensor(const std::vector<float>& values, int tile_size) {
    Tensor t(1, tile_size, tile_size);
    std::copy(values.begin(), values.end(), t.data.begin());
    return t;
}

ModelConfig model_config(const PipelineConfig& cfg) {
    ModelConfig m = cfg.model;
    m.in_channels = 3;
    m.seed = cfg.model_seed.value_or(cfg.seed);
    return m;
}

std::string res_dir(double res) { return format_number(res) + "m"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

fs::path PipelineConfig::input(const std::string& key) const {
    auto pick = [&](const fs::path& configured, const char* fallback) {
        return configured.empty() ? out_dir / fallback : configured;
    };
    if (key == "point_cloud") return pick(point_cloud, "points.csv");
    if (key == "coarse_dsm") return pick(coarse_dsm, "coarse_dsm.glbr");
    if (key == "coarse_dem") return pick(coarse_dem, "coarse_dem.glbr");
    if (key == "population") return pick(population, "population.glbr");
    if (key == "footprints") return pick(footprints, "footprints.geojson");
    throw Error(ErrorKind::Config, "unknown input key '" + key + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "out", "seed", "model_seed", "verbose",
        "extent", "building_count", "footprint_min", "footprint_max", "height_min", "height_max", "gap", "slope",
        "ground_elevation", "tree_fraction", "coarse_factor", "noise_sigma",
        "point_cloud", "coarse_dsm", "coarse_dem", "population", "footprints",
        "fine_cell_size", "resolutions", "directions",
        "predictor", "depth", "base_filters", "kernel_size", "learning_rate", "epochs", "batch_size", "tile_size",
        "dump_tiles",
        "zonal", "bin_width", "hist_cap", "min_reference"};
    return keys;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    auto& s = cfg.synth;
    if (key == "out") cfg.out_dir = value;
    else if (key == "seed") cfg.seed = to_u64(key, value);
    else if (key == "model_seed") cfg.model_seed = to_u64(key, value);
    else if (key == "verbose") cfg.verbose = to_bool(key, value);
    else if (key == "extent") s.extent = to_double(key, value);
    else if (key == "building_count") s.building_count = to_int_at_least(key, value, 0);
    else if (key == "footprint_min") s.footprint_min = to_double(key, value);
    else if (key == "footprint_max") s.footprint_max = to_double(key, value);
    else if (key == "height_min") s.height_min = to_double(key, value);
    else if (key == "height_max") s.height_max = to_double(key, value);
    else if (key == "gap") s.gap = to_double(key, value);
    else if (key == "slope") s.slope = to_double(key, value);
    else if (key == "ground_elevation") s.ground_elevation = to_double(key, value);
    else if (key == "tree_fraction") s.tree_fraction = to_double(key, value);
    else if (key == "coarse_factor") s.coarse_factor = to_int_at_least(key, value, 1);
    else if (key == "noise_sigma") s.noise_sigma = to_double(key, value);
    else if (key == "point_cloud") cfg.point_cloud = value;
    else if (key == "coarse_dsm") cfg.coarse_dsm = value;
    else if (key == "coarse_dem") cfg.coarse_dem = value;
    else if (key == "population") cfg.population = value;
    else if (key == "footprints") cfg.footprints = value;
    else if (key == "fine_cell_size") {
        cfg.fine_cell_size = to_double(key, value);
        if (!(cfg.fine_cell_size > 0.0)) bad_value(key, value, "must be positive");
        s.cell_size = cfg.fine_cell_size;
    } else if (key == "resolutions") {
        cfg.resolutions = to_list(key, value);
        for (double r : cfg.resolutions) {
            if (!(r > 0.0)) bad_value(key, value, "resolutions must be positive");
        }
    } else if (key == "directions") {
        cfg.directions = to_list(key, value);
        for (double d : cfg.directions) {
            if (!(d >= 0.0 && d < 360.0)) bad_value(key, value, "directions must be in [0, 360)");
        }
    } else if (key == "predictor") {
        if (value != "baseline" && value != "network") bad_value(key, value, "expected baseline or network");
        cfg.predictor = value;
    } else if (key == "depth") cfg.model.depth = to_int_at_least(key, value, 1);
    else if (key == "base_filters") cfg.model.base_filters = to_int_at_least(key, value, 1);
    else if (key == "kernel_size") cfg.model.kernel_size = to_int_at_least(key, value, 1);
    else if (key == "learning_rate") {
        cfg.train.learning_rate = to_double(key, value);
        if (cfg.train.learning_rate < 0.0) bad_value(key, value, "must be non-negative");
    } else if (key == "epochs") cfg.train.epochs = to_int_at_least(key, value, 1);
    else if (key == "batch_size") cfg.train.batch_size = to_int_at_least(key, value, 1);
    else if (key == "tile_size") {
        cfg.tile_size = to_int32(key, value);
        if (cfg.tile_size < 1) bad_value(key, value, "must be positive");
    } else if (key == "dump_tiles") cfg.dump_tiles = to_bool(key, value);
    else if (key == "zonal") {
        if (value == "mean") cfg.zonal = ZonalStat::Mean;
        else if (value == "median") cfg.zonal = ZonalStat::Median;
        else bad_value(key, value, "expected mean or median");
    } else if (key == "bin_width") cfg.histogram.bin_width = to_positive(key, value);
    else if (key == "hist_cap") cfg.histogram.cap = to_positive(key, value);
    else if (key == "min_reference") cfg.min_reference = to_double(key, value);
    else throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
}

void stage_synth(const PipelineConfig& cfg) {
    SyntheticCitySpec spec = cfg.synth;
    spec.seed = cfg.seed;
    spec.cell_size = cfg.fine_cell_size;
    const auto city = generate_city(spec);
    write_city(city, cfg.out_dir);
    log(cfg, "synth: " + std::to_string(city.footprints.size()) + " buildings, " +
                 std::to_string(city.truth_ndsm.width()) + "x" + std::to_string(city.truth_ndsm.height()) + " cells");
}

void stage_rasterize_points(const PipelineConfig& cfg) {
    const Raster coarse = read_raster(require_input(cfg, "coarse_dsm"));
    const Raster templ = fine_template(coarse, cfg.fine_cell_size);
    const PointCloud pc = read_point_cloud(require_input(cfg, "point_cloud"));
    const Raster dem = fill_voids_nearest(grid_elevation(pc, {PointLabel::Ground}, templ));
    fs::create_directories(cfg.out_dir);
    write_raster(dem, out_path(cfg, kDemFine));
    Raster dsm = templ;
    if (pc.count(PointLabel::Building)) dsm = grid_elevation(pc, {PointLabel::Building}, templ);
    else for (float& v : dsm.values()) v = dsm.nodata();
    write_raster(dsm, out_path(cfg, kDsmFine));
    write_raster(build_reference_ndsm(pc, templ), out_path(cfg, kNdsmRef));
    log(cfg, "rasterize-points: " + std::to_string(pc.points().size()) + " points");
}

void stage_ndsm(const PipelineConfig& cfg) {
    const Raster dsm = read_raster(require_input(cfg, "coarse_dsm"));
    const Raster dem = read_raster(require_input(cfg, "coarse_dem"));
    fs::create_directories(cfg.out_dir);
    write_raster(clamp_nonnegative(subtract(dsm, dem)), out_path(cfg, kNdsmCoarse));
}

void stage_resample(const PipelineConfig& cfg) {
    const Raster ndsm = load(cfg, kNdsmCoarse);
    const Raster pop = read_raster(require_input(cfg, "population"));
    require_aligned(ndsm, pop, "population vs coarse nDSM");
    const Raster ndsm_fine = clamp_nonnegative(resample_cubic(ndsm, cfg.fine_cell_size));
    const Raster pop_fine = clamp_nonnegative(resample_cubic(pop, cfg.fine_cell_size));
    write_raster(ndsm_fine, out_path(cfg, kNdsmResampled));
    write_raster(pop_fine, out_path(cfg, kPopulationFine));
    write_raster(footprint_mask(cfg, ndsm_fine).raster, out_path(cfg, kMaskFine));
}

void stage_tile(const PipelineConfig& cfg) {
    auto inputs = normalized_inputs(cfg, nullptr);
    const Raster ref = load(cfg, kNdsmRef);
    require_aligned(inputs.channels.front(), ref, "reference nDSM vs inputs");
    inputs.params.push_back(minmax_normalize(ref).params);
    write_normalization(inputs.params, out_path(cfg, kNormalization));
    const auto sp = split(inputs.channels, cfg.tile_size);
    if (cfg.dump_tiles) dump_tiles(sp.tiles, cfg.out_dir / "tiles");
    log(cfg, "tile: " + std::to_string(sp.plan.tiles_y) + "x" + std::to_string(sp.plan.tiles_x) + " tiles");
}

void stage_train(const PipelineConfig& cfg) {
    const auto params = read_normalization(out_path(cfg, kNormalization));
    const auto inputs = normalized_inputs(cfg, &params);
    const Raster target = minmax_normalize(load(cfg, kNdsmRef), params[3]).raster;
    const auto sp = split(inputs.channels, cfg.tile_size);
    const auto tp = split({target}, cfg.tile_size);
    std::vector<Sample> data;
    for (std::size_t i = 0; i < sp.tiles.size(); ++i) {
        data.push_back({tile_tensor(sp.tiles[i]), target_tensor(tp.tiles[i].channels[0], cfg.tile_size)});
    }
    const auto result = train(init_weights(model_config(cfg)), data, cfg.train);
    write_weights(result.weights, out_path(cfg, kWeights));
    write_loss_history(result.loss_history, out_path(cfg, kLossHistory));
    log(cfg, "train: final mean loss " + format_number(result.loss_history.back()));
}

void stage_predict(const PipelineConfig& cfg) {
    Raster pred = [&] {
        if (cfg.predictor == "network") {
            const auto params = read_normalization(out_path(cfg, kNormalization));
            const auto inputs = normalized_inputs(cfg, &params);
            const auto wpath = out_path(cfg, kWeights);
            if (!fs::exists(wpath)) throw Error(ErrorKind::Input, "missing " + wpath.string() + "; run train first");
            return predict_city(read_weights(wpath), inputs.channels, params[3], cfg.tile_size);
        }
        const Raster ndsm = load(cfg, kNdsmResampled);
        return baseline_predict(ndsm, footprint_mask(cfg, ndsm));
    }();
    write_raster(pred, out_path(cfg, kPrediction));
}

void stage_lod1(const PipelineConfig& cfg) {
    const Raster pred = load(cfg, kPrediction);
    const Raster ref = load(cfg, kNdsmRef);
    require_aligned(pred, ref, "prediction vs reference nDSM");
    std::vector<BuildingFootprint> fps;
    const auto mask = footprint_mask(cfg, pred, &fps);
    const auto result = assign_heights(pred, mask, fps, cfg.zonal);
    write_lod1(result.buildings, out_path(cfg, kLod1));
    write_lod1(assign_heights(ref, mask, fps, cfg.zonal).buildings, out_path(cfg, kLod1Ref));

    std::ofstream w(out_path(cfg, kLod1Warnings), std::ios::binary | std::ios::trunc);
    w << "id,message\n";
    for (const auto& warn : result.warnings) w << warn.id << ",\"" << warn.message << "\"\n";
    if (!w) throw Error(ErrorKind::Io, "write failed: " + out_path(cfg, kLod1Warnings).string());
    if (!result.warnings.empty()) log(cfg, "lod1: " + std::to_string(result.warnings.size()) + " warnings");
}

void stage_ucp(const PipelineConfig& cfg) {
    const Raster pred = load(cfg, kPrediction);
    const auto mask = footprint_mask(cfg, pred);
    const auto buildings = read_lod1(out_path(cfg, kLod1));
    const auto truth = read_lod1(out_path(cfg, kLod1Ref));
    for (double res : cfg.resolutions) {
        write_ucp(aggregate_all(buildings, mask, res, cfg.directions, cfg.histogram), cfg.out_dir / "ucp" / "pred");
        write_ucp(aggregate_all(truth, mask, res, cfg.directions, cfg.histogram), cfg.out_dir / "ucp" / "ref");
    }
}

void stage_validate(const PipelineConfig& cfg) {
    for (double res : cfg.resolutions) {
        const auto pred = read_ucp(cfg.out_dir / "ucp" / "pred", res);
        const auto ref = read_ucp(cfg.out_dir / "ucp" / "ref", res);
        export_comparison(pred, ref, cfg.out_dir / "validation" / res_dir(res), cfg.min_reference);
    }
}

std::string stage_report(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "globus report\n";
    out << "output directory: " << cfg.out_dir.string() << '\n';
    out << "seed: " << cfg.seed << "\n";
    out << "predictor: " << cfg.predictor << "\n";
    out << "kernels: " << simd::to_string(simd::active_isa()) << "\n";
    bool any = false;
    for (double res : cfg.resolutions) {
        const auto path = cfg.out_dir / "validation" / res_dir(res) / "metrics.csv";
        if (!fs::exists(path)) continue;
        any = true;
        out << "\n[" << res_dir(res) << "] " << path.string() << '\n' << slurp(path);
    }
    const auto loss = out_path(cfg, kLossHistory);
    if (fs::exists(loss)) {
        std::istringstream lines(slurp(loss));
        std::string line, last;
        while (std::getline(lines, line)) {
            if (!line.empty()) last = line;
        }
        out << "\nlast training epoch (epoch,mean_loss): " << last << '\n';
    }
    if (!any) throw Error(ErrorKind::Input, "no validation metrics under " + cfg.out_dir.string() + "; run validate first");
    return out.str();
}

void run_all(const PipelineConfig& cfg) {
    if (cfg.point_cloud.empty()) run_stage("synth", stage_synth, cfg);
    run_stage("rasterize-points", stage_rasterize_points, cfg);
    run_stage("ndsm", stage_ndsm, cfg);
    run_stage("resample", stage_resample, cfg);
    run_stage("tile", stage_tile, cfg);
    if (cfg.predictor == "network") run_stage("train", stage_train, cfg);
    run_stage("predict", stage_predict, cfg);
    run_stage("lod1", stage_lod1, cfg);
    run_stage("ucp", stage_ucp, cfg);
    run_stage("validate", stage_validate, cfg);
}

}  // namespace globus
