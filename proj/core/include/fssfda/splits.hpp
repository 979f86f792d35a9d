#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fssfda/dataset.hpp"

namespace fssfda {

// Stratified train/test partition of one domain. Train and test ids are
// disjoint, sorted, and together cover the whole dataset.
struct SplitPlan {
    std::uint64_t seed = 0;
    double ratio = 0.8;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    bool contains_train(const std::string& id) const;

    std::string to_json() const;
    static SplitPlan from_json(const std::string& text);
};

// k labeled example ids per class, all drawn from the governing SplitPlan's
// train side.
struct FewShotSet {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<int, std::vector<std::string>> ids_by_class;  // class id -> k ids

    std::vector<std::string> all_ids() const;
    int total() const;

    std::string to_json() const;
    static FewShotSet from_json(const std::string& text);
};

// Class-stratified split: per-class train count = round(ratio * n_c) clamped
// to [1, n_c - 1]. Every class needs at least 2 examples. Same seed, same
// plan.
SplitPlan split_train_test(const DomainDataset& ds, double ratio, std::uint64_t seed);

// k per class, uniform without replacement from the plan's train ids.
// Requires k + 1 train examples per class so that a 1-shot validation
// example can still be drawn afterwards.
FewShotSet sample_few_shot(const DomainDataset& ds, const SplitPlan& plan, int k, std::uint64_t seed);

// One validation example per class, disjoint from the few-shot set.
FewShotSet sample_validation_set(const DomainDataset& ds, const SplitPlan& plan, const FewShotSet& fewshot,
                                 std::uint64_t seed);

}  // namespace fssfda
