#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fssfda/dataset.hpp"
#include "fssfda/splits.hpp"

namespace fssfda {

enum class ScenarioKind { Clean, Ood, Imbalance };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& s);

// Declarative description of the experiment condition. Serializes so a run
// is replayable byte-for-byte.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Clean;
    int n_known = 0;                   // ood only; 15 / 25 / 6 presets
    std::vector<int> known_classes;    // ood only; resolved from seed when empty
    double imbalance_factor = 10.0;    // imbalance only; >= 1
    std::string imbalance_profile = "rsut";
    std::uint64_t seed = 0;

    std::string to_json() const;
    static ScenarioSpec from_json(const std::string& text);
};

// Output of the OoD scenario generator. The source vocabulary is restricted
// to the known classes and relabeled densely; unknown-class target training
// examples carry kUnknownLabel.
struct OodScenario {
    std::vector<int> known_classes;        // original class ids, ascending
    DomainDataset source_known;            // known classes only, relabeled
    DomainDataset target_train_clean;      // known-class target train
    DomainDataset target_train_ood;        // full target train, unknowns = -1
    DomainDataset target_test_known;       // known-class target test
    SplitPlan target_split;                // the underlying 8:2 split
};

// Selects n_known classes with the scenario seed, splits the target 8:2 with
// the same seed, and builds the four datasets of the OoD protocol.
OodScenario make_ood_scenario(const DomainDataset& source_ds, const DomainDataset& target_ds, int n_known,
                              std::uint64_t seed, double split_ratio = 0.8);

// Same, with an externally fixed known-class set (the orchestrator fixes
// classes once per scenario and varies only the split seed across runs).
OodScenario make_ood_scenario(const DomainDataset& source_ds, const DomainDataset& target_ds,
                              const std::vector<int>& known_classes, std::uint64_t split_seed,
                              double split_ratio = 0.8);

std::vector<int> choose_known_classes(int num_classes, int n_known, std::uint64_t seed);

struct RsutPair {
    DomainDataset source_sub;
    DomainDataset target_sub;
};

// Reversed Source / Unbalanced Target subsampling: source class counts follow
// a geometric long-tail n_max * factor^(-i/(K-1)) over a seed-chosen class
// ordering; target counts follow the reversed ordering of the same profile.
// No class is emptied.
RsutPair make_rsut_imbalance(const DomainDataset& source_ds, const DomainDataset& target_ds, double factor,
                             std::uint64_t seed);

// The geometric profile itself, for diagnostics and tests:
// counts[i] = max(1, round(n_max * factor^(-i / (K-1)))).
std::vector<int> rsut_profile(int n_max, int num_classes, double factor);

}  // namespace fssfda
