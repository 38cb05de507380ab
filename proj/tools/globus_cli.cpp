// Command-line front end: one subcommand per pipeline stage plus `run`.

#include "globus/error.hpp"
#include "globus/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

namespace {

using globus::ErrorKind;
using globus::PipelineConfig;

std::string quote(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += (c == '\n') ? ' ' : c;
    }
    return out;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Io:
        case ErrorKind::Format:
        case ErrorKind::Input:
            return 2;
        default:
            return 1;
    }
}

int report(const std::string& stage, const std::string& kind, const std::string& message, int code) {
    std::cerr << "error stage=" << stage << " kind=" << kind << " message=\"" << quote(message) << "\"\n";
    return code;
}

PipelineConfig build_config(const std::string& config_file, const std::map<std::string, std::string>& overrides) {
    PipelineConfig cfg;
    if (!config_file.empty()) {
        std::ifstream in(config_file, std::ios::binary);
        if (!in) throw globus::Error(ErrorKind::Config, "cannot read config file " + config_file);
        std::stringstream ss;
        ss << in.rdbuf();
        for (const auto& [k, v] : globus::parse_config_text(ss.str())) globus::apply_setting(cfg, k, v);
    }
    for (const auto& [k, v] : overrides) globus::apply_setting(cfg, k, v);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"globus: building heights and urban canopy parameters from coarse elevation data"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    bool verbose = false;
    app.add_option("--config", config_file, "key = value configuration file");
    app.add_flag("-v,--verbose", verbose, "progress messages on stderr");

    std::map<std::string, std::string> values;
    for (const auto& key : globus::config_keys()) {
        if (key == "verbose") continue;
        std::string names = "--" + key;
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (dashed != key) names += ",--" + dashed;
        app.add_option(names, values[key], "override config key '" + key + "'");
    }

    using Stage = std::function<void(const PipelineConfig&)>;
    struct Entry {
        std::string name, help;
        Stage fn;
    };
    const std::vector<Entry> stages{
        {"synth", "generate a synthetic city and its coarse inputs", globus::stage_synth},
        {"rasterize-points", "grid the point cloud into a fine DSM", globus::stage_rasterize_points},
        {"ndsm", "derive the coarse and reference height-above-ground grids", globus::stage_ndsm},
        {"resample", "resample the coarse nDSM onto the fine grid", globus::stage_resample},
        {"tile", "cut the fine inputs into model tiles", globus::stage_tile},
        {"train", "train the network predictor", globus::stage_train},
        {"predict", "predict fine building heights", globus::stage_predict},
        {"lod1", "assign one height per footprint", globus::stage_lod1},
        {"ucp", "aggregate canopy parameters at each resolution", globus::stage_ucp},
        {"validate", "compare predicted and reference canopy parameters", globus::stage_validate},
        {"report", "print the validation tables", [](const PipelineConfig& c) { std::cout << globus::stage_report(c); }},
        {"run", "run every stage in order", globus::run_all},
    };
    for (const auto& e : stages) app.add_subcommand(e.name, e.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string stage = "config";
    try {
        std::map<std::string, std::string> overrides;
        for (const auto& [k, v] : values) {
            if (app.count("--" + k) > 0) overrides[k] = v;
        }
        if (verbose) overrides["verbose"] = "true";
        const PipelineConfig cfg = build_config(config_file, overrides);
        for (const auto& e : stages) {
            if (!app.got_subcommand(e.name)) continue;
            stage = e.name;
            globus::run_stage(e.name, e.fn, cfg);
        }
        return 0;
    } catch (const globus::StageError& e) {
        return report(e.stage(), std::string(globus::to_string(e.kind())), e.what(), exit_code(e.kind()));
    } catch (const globus::Error& e) {
        return report(stage, std::string(globus::to_string(e.kind())), e.what(), exit_code(e.kind()));
    } catch (const std::filesystem::filesystem_error& e) {
        return report(stage, "io", e.what(), 2);
    } catch (const std::exception& e) {
        return report(stage, "internal", e.what(), 1);
    }
}
