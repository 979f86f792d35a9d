#include "fssfda/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fssfda/error.hpp"
#include "fssfda/rng.hpp"

using nlohmann::json;

namespace fssfda {

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Clean: return "clean";
        case ScenarioKind::Ood: return "ood";
        case ScenarioKind::Imbalance: return "imbalance";
    }
    return "clean";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "clean") return ScenarioKind::Clean;
    if (s == "ood") return ScenarioKind::Ood;
    if (s == "imbalance") return ScenarioKind::Imbalance;
    throw ScenarioError("unknown scenario kind: '" + s + "'");
}

std::string ScenarioSpec::to_json() const {
    json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    if (kind == ScenarioKind::Ood) {
        j["n_known"] = n_known;
        if (!known_classes.empty()) j["known_classes"] = known_classes;
    }
    if (kind == ScenarioKind::Imbalance) {
        j["imbalance"] = {{"factor", imbalance_factor}, {"profile", imbalance_profile}};
    }
    return j.dump(2);
}

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    ScenarioSpec spec;
    spec.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    spec.seed = j.value("seed", 0ULL);
    spec.n_known = j.value("n_known", 0);
    if (j.contains("known_classes")) spec.known_classes = j["known_classes"].get<std::vector<int>>();
    if (j.contains("imbalance")) {
        spec.imbalance_factor = j["imbalance"].value("factor", 10.0);
        spec.imbalance_profile = j["imbalance"].value("profile", std::string("rsut"));
    }
    return spec;
}

std::vector<int> choose_known_classes(int num_classes, int n_known, std::uint64_t seed) {
    if (n_known >= num_classes) {
        throw ScenarioError("make_ood_scenario: n_known (" + std::to_string(n_known) +
                            ") must be smaller than the vocabulary size (" + std::to_string(num_classes) + ")");
    }
    if (n_known < 2) throw ScenarioError("make_ood_scenario: n_known must be at least 2");
    Rng rng(mix_seed(seed, "ood-classes"));
    auto picks = rng.sample_without_replacement(num_classes, n_known);
    std::sort(picks.begin(), picks.end());
    return picks;
}

namespace {

// Dataset restricted to `known` (original ids, ascending), relabeled densely
// in original vocabulary order. Examples outside `known` are dropped unless
// keep_unknown, in which case they stay with kUnknownLabel.
DomainDataset relabel_known(const DomainDataset& ds, const std::vector<int>& known, bool keep_unknown) {
    std::unordered_map<int, int> dense;
    for (std::size_t i = 0; i < known.size(); ++i) dense[known[i]] = static_cast<int>(i);

    DomainDataset out;
    out.domain_id = ds.domain_id;
    for (int c : known) out.vocabulary.push_back(ds.vocabulary[static_cast<std::size_t>(c)]);
    for (const auto& ex : ds.examples) {
        auto it = dense.find(ex.class_id);
        if (it != dense.end()) {
            LabeledExample e = ex;
            e.class_id = it->second;
            out.examples.push_back(std::move(e));
        } else if (keep_unknown) {
            LabeledExample e = ex;
            e.class_id = kUnknownLabel;
            out.examples.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace

OodScenario make_ood_scenario(const DomainDataset& source_ds, const DomainDataset& target_ds,
                              const std::vector<int>& known_classes, std::uint64_t split_seed, double split_ratio) {
    if (!same_vocabulary(source_ds, target_ds)) {
        throw ScenarioError("make_ood_scenario: source and target vocabularies differ");
    }
    for (int c : known_classes) {
        if (c < 0 || c >= source_ds.num_classes()) {
            throw ScenarioError("make_ood_scenario: known class id " + std::to_string(c) + " out of range");
        }
    }

    OodScenario sc;
    sc.known_classes = known_classes;
    std::sort(sc.known_classes.begin(), sc.known_classes.end());

    sc.target_split = split_train_test(target_ds, split_ratio, split_seed);
    DomainDataset target_train = subset_by_ids(target_ds, sc.target_split.train_ids);
    DomainDataset target_test = subset_by_ids(target_ds, sc.target_split.test_ids);

    sc.source_known = relabel_known(source_ds, sc.known_classes, /*keep_unknown=*/false);
    sc.target_train_clean = relabel_known(target_train, sc.known_classes, /*keep_unknown=*/false);
    sc.target_train_ood = relabel_known(target_train, sc.known_classes, /*keep_unknown=*/true);
    sc.target_test_known = relabel_known(target_test, sc.known_classes, /*keep_unknown=*/false);
    return sc;
}

OodScenario make_ood_scenario(const DomainDataset& source_ds, const DomainDataset& target_ds, int n_known,
                              std::uint64_t seed, double split_ratio) {
    auto known = choose_known_classes(source_ds.num_classes(), n_known, seed);
    return make_ood_scenario(source_ds, target_ds, known, seed, split_ratio);
}

std::vector<int> rsut_profile(int n_max, int num_classes, double factor) {
    std::vector<int> counts(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < num_classes; ++i) {
        double expo = num_classes > 1 ? static_cast<double>(i) / static_cast<double>(num_classes - 1) : 0.0;
        double want = static_cast<double>(n_max) * std::pow(factor, -expo);
        counts[static_cast<std::size_t>(i)] = std::max(1, static_cast<int>(std::lround(want)));
    }
    return counts;
}

namespace {

// Subsamples ds so class order[i] keeps exactly counts[i] examples, chosen
// uniformly without replacement.
DomainDataset subsample_to_profile(const DomainDataset& ds, const std::vector<int>& order,
                                   const std::vector<int>& counts, std::uint64_t seed, const char* tag) {
    std::vector<std::vector<std::string>> by_class(static_cast<std::size_t>(ds.num_classes()));
    for (const auto& ex : ds.examples) by_class[static_cast<std::size_t>(ex.class_id)].push_back(ex.example_id);

    std::vector<std::string> keep;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& pool = by_class[static_cast<std::size_t>(order[i])];
        int want = std::min<int>(counts[i], static_cast<int>(pool.size()));
        Rng rng(mix_seed(seed, tag, static_cast<std::uint64_t>(order[i])));
        auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), want);
        for (int p : picks) keep.push_back(pool[static_cast<std::size_t>(p)]);
    }
    return subset_by_ids(ds, keep);
}

}  // namespace

RsutPair make_rsut_imbalance(const DomainDataset& source_ds, const DomainDataset& target_ds, double factor,
                             std::uint64_t seed) {
    if (factor < 1.0) {
        throw ScenarioError("make_rsut_imbalance: factor must be >= 1, got " + std::to_string(factor));
    }
    if (!same_vocabulary(source_ds, target_ds)) {
        throw ScenarioError("make_rsut_imbalance: source and target vocabularies differ");
    }
    const int k = source_ds.num_classes();
    auto src_counts = source_ds.class_counts();
    auto tgt_counts = target_ds.class_counts();
    for (int c = 0; c < k; ++c) {
        if (src_counts[static_cast<std::size_t>(c)] < 1 || tgt_counts[static_cast<std::size_t>(c)] < 1) {
            throw ScenarioError("make_rsut_imbalance: class '" + source_ds.vocabulary[static_cast<std::size_t>(c)] +
                                "' is empty in one of the domains");
        }
    }

    // The profile head must be realizable for every class, so anchor at the
    // smallest class count per domain.
    const int n_max_src = *std::min_element(src_counts.begin(), src_counts.end());
    const int n_max_tgt = *std::min_element(tgt_counts.begin(), tgt_counts.end());

    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(mix_seed(seed, "rsut-order"));
    rng.shuffle(order);

    auto src_profile = rsut_profile(n_max_src, k, factor);
    auto tgt_profile = rsut_profile(n_max_tgt, k, factor);
    std::reverse(tgt_profile.begin(), tgt_profile.end());

    RsutPair pair;
    pair.source_sub = subsample_to_profile(source_ds, order, src_profile, seed, "rsut-src");
    pair.target_sub = subsample_to_profile(target_ds, order, tgt_profile, seed, "rsut-tgt");
    return pair;
}

}  // namespace fssfda
