#include "fssfda/splits.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fssfda/error.hpp"
#include "fssfda/rng.hpp"

using nlohmann::json;

namespace fssfda {

namespace {

// Example ids grouped by class, in dataset order.
std::vector<std::vector<std::string>> ids_per_class(const DomainDataset& ds) {
    std::vector<std::vector<std::string>> by_class(static_cast<std::size_t>(ds.num_classes()));
    for (const auto& ex : ds.examples) {
        if (ex.class_id >= 0 && ex.class_id < ds.num_classes()) {
            by_class[static_cast<std::size_t>(ex.class_id)].push_back(ex.example_id);
        }
    }
    return by_class;
}

}  // namespace

bool SplitPlan::contains_train(const std::string& id) const {
    return std::binary_search(train_ids.begin(), train_ids.end(), id);
}

SplitPlan split_train_test(const DomainDataset& ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw SamplingError("split_train_test: ratio must be in (0,1), got " + std::to_string(ratio));
    }
    if (ds.size() < 2) throw SamplingError("split_train_test: dataset has fewer than 2 examples");

    auto by_class = ids_per_class(ds);
    SplitPlan plan;
    plan.seed = seed;
    plan.ratio = ratio;

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& ids = by_class[c];
        const int n_c = static_cast<int>(ids.size());
        if (n_c < 2) {
            throw SamplingError("split_train_test: class '" + ds.vocabulary[c] + "' has " + std::to_string(n_c) +
                                " examples; cannot hold out a test example");
        }
        int n_train = static_cast<int>(std::lround(ratio * n_c));
        n_train = std::clamp(n_train, 1, n_c - 1);

        // Per-class stream so one class's draw never disturbs another's.
        Rng rng(mix_seed(seed, "split", static_cast<std::uint64_t>(c)));
        rng.shuffle(ids);
        for (int i = 0; i < n_c; ++i) {
            if (i < n_train) {
                plan.train_ids.push_back(ids[static_cast<std::size_t>(i)]);
            } else {
                plan.test_ids.push_back(ids[static_cast<std::size_t>(i)]);
            }
        }
    }
    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    return plan;
}

std::vector<std::string> FewShotSet::all_ids() const {
    std::vector<std::string> out;
    for (const auto& [cls, ids] : ids_by_class) {
        (void)cls;
        out.insert(out.end(), ids.begin(), ids.end());
    }
    return out;
}

int FewShotSet::total() const {
    int n = 0;
    for (const auto& [cls, ids] : ids_by_class) {
        (void)cls;
        n += static_cast<int>(ids.size());
    }
    return n;
}

FewShotSet sample_few_shot(const DomainDataset& ds, const SplitPlan& plan, int k, std::uint64_t seed) {
    if (k < 1) throw SamplingError("sample_few_shot: k must be positive, got " + std::to_string(k));

    auto by_class = ids_per_class(ds);
    FewShotSet out;
    out.k = k;
    out.seed = seed;

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::vector<std::string> pool;
        for (const auto& id : by_class[c]) {
            if (plan.contains_train(id)) pool.push_back(id);
        }
        // One extra example stays available for the 1-shot validation draw.
        if (static_cast<int>(pool.size()) < k + 1) {
            throw SamplingError("sample_few_shot: class '" + ds.vocabulary[c] + "' has only " +
                                std::to_string(pool.size()) + " train examples; " + std::to_string(k + 1) +
                                " required (k shots + 1 validation); class does not have enough images");
        }
        Rng rng(mix_seed(seed, "fewshot", static_cast<std::uint64_t>(c)));
        auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), k);
        std::vector<std::string> chosen;
        for (int i : picks) chosen.push_back(pool[static_cast<std::size_t>(i)]);
        std::sort(chosen.begin(), chosen.end());
        out.ids_by_class[static_cast<int>(c)] = std::move(chosen);
    }
    return out;
}

FewShotSet sample_validation_set(const DomainDataset& ds, const SplitPlan& plan, const FewShotSet& fewshot,
                                 std::uint64_t seed) {
    auto by_class = ids_per_class(ds);
    FewShotSet out;
    out.k = 1;
    out.seed = seed;

    for (std::size_t c = 0; c < by_class.size(); ++c) {
        std::unordered_set<std::string> taken;
        auto it = fewshot.ids_by_class.find(static_cast<int>(c));
        if (it != fewshot.ids_by_class.end()) taken.insert(it->second.begin(), it->second.end());

        std::vector<std::string> pool;
        for (const auto& id : by_class[c]) {
            if (plan.contains_train(id) && !taken.count(id)) pool.push_back(id);
        }
        if (pool.empty()) {
            throw SamplingError("sample_validation_set: class '" + ds.vocabulary[c] +
                                "' has no train example left outside the few-shot set");
        }
        Rng rng(mix_seed(seed, "val", static_cast<std::uint64_t>(c)));
        int pick = rng.below_int(static_cast<int>(pool.size()));
        out.ids_by_class[static_cast<int>(c)] = {pool[static_cast<std::size_t>(pick)]};
    }
    return out;
}

std::string SplitPlan::to_json() const {
    json j;
    j["seed"] = seed;
    j["ratio"] = ratio;
    j["train_ids"] = train_ids;
    j["test_ids"] = test_ids;
    return j.dump(2);
}

SplitPlan SplitPlan::from_json(const std::string& text) {
    json j = json::parse(text);
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.ratio = j.at("ratio").get<double>();
    plan.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    plan.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return plan;
}

std::string FewShotSet::to_json() const {
    json j;
    j["k"] = k;
    j["seed"] = seed;
    json ids = json::object();
    for (const auto& [cls, list] : ids_by_class) ids[std::to_string(cls)] = list;
    j["ids_by_class"] = ids;
    return j.dump(2);
}

FewShotSet FewShotSet::from_json(const std::string& text) {
    json j = json::parse(text);
    FewShotSet out;
    out.k = j.at("k").get<int>();
    out.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("ids_by_class").items()) {
        out.ids_by_class[std::stoi(key)] = value.get<std::vector<std::string>>();
    }
    return out;
}

}  // namespace fssfda
