#include "fssfda/distributions.hpp"

#include <cmath>
#include <limits>

#include "fssfda/error.hpp"

namespace fssfda {

LabelDistribution empirical_label_distribution(const DomainDataset& ds) {
    if (ds.examples.empty()) {
        throw EvaluationError("empirical_label_distribution: dataset '" + ds.domain_id + "' is empty");
    }
    const int k = ds.num_classes();
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (const auto& ex : ds.examples) {
        if (ex.class_id < 0 || ex.class_id >= k) {
            throw EvaluationError("empirical_label_distribution: example '" + ex.example_id +
                                  "' has label outside the vocabulary");
        }
        counts[static_cast<std::size_t>(ex.class_id)] += 1.0;
    }
    LabelDistribution dist;
    dist.probs.resize(counts.size());
    const double n = static_cast<double>(ds.examples.size());
    for (std::size_t c = 0; c < counts.size(); ++c) dist.probs[c] = counts[c] / n;
    return dist;
}

bool is_valid_distribution(const LabelDistribution& p) {
    double sum = 0.0;
    for (double v : p.probs) {
        if (v < 0.0 || !std::isfinite(v)) return false;
        sum += v;
    }
    return std::fabs(sum - 1.0) <= 1e-9;
}

double bhattacharyya_distance(const LabelDistribution& p, const LabelDistribution& q) {
    if (p.size() != q.size()) {
        throw EvaluationError("bhattacharyya_distance: length mismatch " + std::to_string(p.size()) + " vs " +
                              std::to_string(q.size()));
    }
    // Identical distributions are 0 by definition; short-circuiting avoids
    // sqrt/log rounding noise on the p == q diagonal.
    if (p.probs == q.probs) return 0.0;
    double coeff = 0.0;
    for (std::size_t y = 0; y < p.probs.size(); ++y) {
        coeff += std::sqrt(p.probs[y] * q.probs[y]);
    }
    if (coeff <= 0.0) return std::numeric_limits<double>::infinity();
    // Clamp tiny overshoot from rounding so identical inputs give exactly 0.
    if (coeff > 1.0) coeff = 1.0;
    return -std::log(coeff);
}

double average_pairwise_shift(const std::vector<DomainDataset>& domains) {
    if (domains.size() < 2) {
        throw EvaluationError("average_pairwise_shift: need at least 2 domains");
    }
    for (std::size_t i = 1; i < domains.size(); ++i) {
        if (!same_vocabulary(domains[0], domains[i])) {
            throw EvaluationError("average_pairwise_shift: vocabulary mismatch between '" + domains[0].domain_id +
                                  "' and '" + domains[i].domain_id + "'");
        }
    }
    std::vector<LabelDistribution> dists;
    dists.reserve(domains.size());
    for (const auto& d : domains) dists.push_back(empirical_label_distribution(d));

    double total = 0.0;
    int pairs = 0;
    for (std::size_t s = 0; s < dists.size(); ++s) {
        for (std::size_t t = 0; t < dists.size(); ++t) {
            if (s == t) continue;
            double d = bhattacharyya_distance(dists[s], dists[t]);
            if (std::isinf(d)) return std::numeric_limits<double>::infinity();
            total += d;
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

}  // namespace fssfda
