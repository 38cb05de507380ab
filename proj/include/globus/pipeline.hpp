#pragma once

// Stage-by-stage orchestration over files in one output directory. Each
// stage reads the standard filenames written by earlier stages (or the
// configured input paths) and overwrites its own outputs deterministically.

#include "globus/error.hpp"
#include "globus/lod1.hpp"
#include "globus/predictor.hpp"
#include "globus/synth.hpp"
#include "globus/ucp.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace globus {

struct PipelineConfig {
    std::filesystem::path out_dir = "globus_out";
    std::uint64_t seed = 42;
    std::optional<std::uint64_t> model_seed;  // defaults to seed
    SyntheticCitySpec synth;                   // its seed field is ignored

    // Inputs; empty means the synthetic outputs inside out_dir.
    std::filesystem::path point_cloud;
    std::filesystem::path coarse_dsm;
    std::filesystem::path coarse_dem;
    std::filesystem::path population;
    std::filesystem::path footprints;

    double fine_cell_size = 1.0;
    std::vector<double> resolutions{300.0, 1000.0};
    std::vector<double> directions{0.0, 45.0, 90.0, 135.0};

    std::string predictor = "baseline";  // or "network"
    ModelConfig model;
    TrainConfig train;
    int tile_size = kTileSize;
    bool dump_tiles = false;

    ZonalStat zonal = ZonalStat::Mean;
    HistogramSpec histogram;
    double min_reference = 1.0;
    bool verbose = false;

    std::filesystem::path input(const std::string& key) const;
};

/// Parses `key = value` lines; `#` starts a comment. Throws ErrorKind::Config
/// with the line number on malformed lines.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Every key accepted by `apply_setting`, in documentation order.
const std::vector<std::string>& config_keys();

/// Throws ErrorKind::Config naming the key on an unknown key or bad value.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Layers normalized for the network, in channel order.
struct NormalizedInputs {
    std::vector<Raster> channels;  // resampled nDSM, population, footprint mask
    std::vector<NormalizationParams> params;
};

// Stages. All throw globus::Error.
void stage_synth(const PipelineConfig& cfg);
void stage_rasterize_points(const PipelineConfig& cfg);
void stage_ndsm(const PipelineConfig& cfg);
void stage_resample(const PipelineConfig& cfg);
void stage_tile(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_predict(const PipelineConfig& cfg);
void stage_lod1(const PipelineConfig& cfg);
void stage_ucp(const PipelineConfig& cfg);
void stage_validate(const PipelineConfig& cfg);
/// Read-only summary of earlier outputs.
std::string stage_report(const PipelineConfig& cfg);

/// A failure tagged with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), cause.what()), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Runs `fn(cfg)` and rethrows any globus::Error as a StageError.
template <class Fn>
decltype(auto) run_stage(const std::string& name, Fn&& fn, const PipelineConfig& cfg) {
    try {
        return fn(cfg);
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

/// Every stage in order; synth runs only when no point cloud is configured.
void run_all(const PipelineConfig& cfg);

}  // namespace globus
