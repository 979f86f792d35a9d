#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fssfda/augment.hpp"
#include "fssfda/model.hpp"
#include "fssfda/splits.hpp"

namespace fssfda {

enum class Method { LP, FT, LP_FT, PL_IM };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct AdaptationRecipe {
    Method method = Method::FT;
    double lr = 1e-3;
    int iterations = 1000;
    int batch_size = 32;
    double sam_rho = 0.05;  // 0 disables sharpness-aware minimization
    bool augmentation = true;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double weight_decay = 0.0;
    // Orchestrator knobs: `label` renames the result row ("No adapt" is
    // FT with 0 iterations); `shots_override` replaces the experiment-wide
    // shot list (0 = no labeled shots, legal only when nothing consumes them).
    std::string label;
    std::vector<int> shots_override;

    std::string display_name() const { return label.empty() ? to_string(method) : label; }
    void validate() const;
    std::string to_json() const;
    static AdaptationRecipe from_json(const std::string& text);
};

struct TrainLogEntry {
    int index = 0;
    std::string phase;  // "lp", "ft" or "pl_im"
    double loss = 0.0;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    double wall_time_s = 0.0;

    int size() const { return static_cast<int>(entries.size()); }
    // JSON-lines: one record per iteration plus a trailing summary line.
    void save_jsonl(const std::filesystem::path& path) const;
};

// Trains only the weight-normalized head on the few-shot set; the body
// (parameters and normalization statistics) stays bit-identical.
TrainLog linear_probe(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
                      const AdaptationRecipe& recipe);

// End-to-end fine-tuning of every parameter on augmented few-shot batches.
TrainLog fine_tune(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
                   const AdaptationRecipe& recipe);

// Linear probe for recipe.iterations, then end-to-end fine-tuning for
// another recipe.iterations from the probed model (2000 iterations total at
// defaults). The log carries both phases.
TrainLog lp_ft(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
               const AdaptationRecipe& recipe);

// Source-free baseline on unlabeled target data: the classifier head is
// frozen and the body minimizes prediction entropy, maximizes marginal
// diversity, and fits centroid-based pseudo-labels that are refreshed once
// per pass over the target set. Labels in `target_unlabeled` are never read.
TrainLog pseudo_label_adapt(AdaptableModel& model, const DomainDataset& target_unlabeled,
                            const AdaptationRecipe& recipe);

// Dispatch on recipe.method. Few-shot methods require fewshot; PL_IM ignores
// it and consumes the unlabeled pool instead.
TrainLog adapt(AdaptableModel& model, const DomainDataset& ds, const FewShotSet* fewshot,
               const AdaptationRecipe& recipe);

}  // namespace fssfda
