#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fssfda/adaptation.hpp"
#include "fssfda/model.hpp"
#include "fssfda/scenario.hpp"

namespace fssfda {

inline constexpr const char* kDataDirEnv = "FSSFDA_DATA_DIR";

// Fully-resolved experiment description. `canonical_json` is the effective
// config after include resolution with sorted keys; `digest` is its SHA-256
// and keys every persisted record.
struct ExperimentConfig {
    std::filesystem::path data_root;
    std::vector<std::string> domains;
    ScenarioSpec scenario;
    ModelSpec model;
    std::vector<AdaptationRecipe> methods;
    std::vector<int> shots = {1, 3};
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    double split_ratio = 0.8;
    SourceTrainConfig source_train;
    std::filesystem::path output_dir = "out";
    int sweep_iterations = 0;  // 0 = use the method's iteration budget

    std::string canonical_json;
    std::string digest;

    void validate() const;
};

// Loads a config file, resolving "include" chains (string or array of
// paths, relative to the including file) with later fields overriding
// earlier ones, then validates and digests the result.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Same, from an already-resolved JSON text (no includes).
ExperimentConfig parse_experiment_config(const std::string& json_text);

}  // namespace fssfda
