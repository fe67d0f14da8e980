#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svlp/core_model.hpp"
#include "svlp/particle_system.hpp"

namespace svlp {

enum class RunMode { Particles, Spde, Both };

struct SchemeConfig {
    double cfl_1d = 0.5;
    double cfl_2d = 2.0;
};

struct OutputConfig {
    std::string dir = "runs";
    bool market_path = false;
    bool trajectories = false;
    std::vector<double> field_times;  // 2D field snapshot exports
};

struct TrancheConfig {
    double attachment = 0.0;
    double detachment = 1.0;
    int n_market_paths = 8;
};

struct RunConfig {
    RunMode mode = RunMode::Both;
    double T = 1.0;
    int steps = 1000;
    int N = 10000;
    int n_coeff_samples = 1;
    bool strict = true;
    uint64_t master_seed = 1;
    std::optional<uint64_t> market_seed;  // default: derived from master
    std::optional<uint64_t> coeff_seed;
    CoeffDistribution coeffs;
    GlobalParams global;
    InitialLaw initial;
    Grid2D grid;
    bool ymax_explicit = false;  // otherwise theta + 10 stationary sds (point coeffs)
    SchemeConfig scheme;
    OutputConfig output;
    TrancheConfig tranche;
    std::vector<int> ladder = {1000, 4000, 16000};
    int workers = 1;

    uint64_t market_key() const;
    uint64_t coeff_key() const;
    void validate() const;
};

// Strict parser: unknown keys anywhere in the document are rejected, and
// every reported problem names the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);

// canonical echo of the parsed config (sorted keys, stable formatting)
nlohmann::json config_to_json(const RunConfig& cfg);

// FNV-1a over the canonical dump; names the run directory
std::string config_hash(const RunConfig& cfg);

// --set key.path=value override on the raw document (value parsed as JSON
// when possible, else taken as a string)
void apply_override(nlohmann::json& doc, const std::string& keypath,
                    const std::string& value);

}  // namespace svlp
