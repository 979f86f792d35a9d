#include "fssfda/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "fssfda/digest.hpp"
#include "fssfda/error.hpp"

using nlohmann::json;

namespace fs = std::filesystem;

namespace fssfda {

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
}

// Depth-first include resolution; `current` overrides whatever it includes.
json resolve_includes(const fs::path& path, std::set<fs::path>& visiting) {
    const fs::path canon = fs::weakly_canonical(path);
    if (visiting.count(canon)) throw ConfigError("config include cycle at " + canon.string());
    visiting.insert(canon);

    json current = load_json_file(path);
    json base = json::object();
    if (current.contains("include")) {
        std::vector<std::string> includes;
        if (current["include"].is_string()) {
            includes.push_back(current["include"].get<std::string>());
        } else if (current["include"].is_array()) {
            for (const auto& e : current["include"]) includes.push_back(e.get<std::string>());
        } else {
            throw ConfigError("config field 'include' must be a string or array in " + path.string());
        }
        for (const auto& inc : includes) {
            json layer = resolve_includes(path.parent_path() / inc, visiting);
            base.merge_patch(layer);
        }
        current.erase("include");
    }
    base.merge_patch(current);
    visiting.erase(canon);
    return base;
}

template <typename T>
T require(const json& j, const std::string& field) {
    if (!j.contains(field)) throw ConfigError("config missing required field '" + field + "'");
    try {
        return j.at(field).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field '" + field + "' has the wrong type: " + e.what());
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (domains.empty()) throw ConfigError("config field 'domains' must list at least one domain");
    if (seeds.empty()) throw ConfigError("config field 'seeds' must be non-empty");
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size()) throw ConfigError("config field 'seeds' must be distinct");
    for (std::size_t i = 0; i < shots.size(); ++i) {
        if (shots[i] < 1) {
            throw ConfigError("config field 'shots[" + std::to_string(i) + "]' must be positive");
        }
    }
    if (methods.empty()) throw ConfigError("config field 'methods' must list at least one recipe");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        try {
            methods[i].validate();
        } catch (const ConfigError& e) {
            throw ConfigError("config field 'methods[" + std::to_string(i) + "]': " + e.what());
        }
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw ConfigError("config field 'split_ratio' must be in (0,1)");
    }
    model.validate();
    for (const auto& d : domains) {
        if (!fs::is_directory(data_root / d)) {
            throw ConfigError("config field 'domains': '" + d + "' not found under data root " + data_root.string());
        }
    }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("data_root")) {
        cfg.data_root = j.at("data_root").get<std::string>();
    } else if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') {
        cfg.data_root = env;
    } else {
        throw ConfigError(std::string("config missing required field 'data_root' (or set ") + kDataDirEnv + ")");
    }
    cfg.domains = require<std::vector<std::string>>(j, "domains");

    if (j.contains("scenario")) cfg.scenario = ScenarioSpec::from_json(j.at("scenario").dump());
    if (j.contains("model")) {
        cfg.model = ModelSpec::from_json(j.at("model").dump());
    } else {
        throw ConfigError("config missing required field 'model'");
    }

    if (!j.contains("methods") || !j.at("methods").is_array()) {
        throw ConfigError("config missing required array field 'methods'");
    }
    for (const auto& m : j.at("methods")) {
        try {
            cfg.methods.push_back(AdaptationRecipe::from_json(m.dump()));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config field 'methods': ") + e.what());
        }
    }

    if (j.contains("shots")) cfg.shots = j.at("shots").get<std::vector<int>>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.split_ratio = j.value("split_ratio", 0.8);
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.sweep_iterations = j.value("sweep_iterations", 0);

    if (j.contains("source_train")) {
        const json& st = j.at("source_train");
        cfg.source_train.epochs = st.value("epochs", 20);
        cfg.source_train.lr = st.value("lr", 1e-3);
        cfg.source_train.batch_size = st.value("batch_size", 32);
        cfg.source_train.label_smoothing = st.value("label_smoothing", 0.1);
        cfg.source_train.augmentation = st.value("augmentation", true);
    }

    // Canonical form: nlohmann objects iterate in sorted key order, so the
    // dump is stable under input field reordering.
    cfg.canonical_json = j.dump();
    cfg.digest = sha256_hex(cfg.canonical_json);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::set<fs::path> visiting;
    json resolved = resolve_includes(path, visiting);
    return parse_experiment_config(resolved.dump());
}

}  // namespace fssfda
