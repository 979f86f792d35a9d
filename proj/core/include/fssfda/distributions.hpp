#pragma once

#include <vector>

#include "fssfda/dataset.hpp"

namespace fssfda {

// Empirical label distribution over a K-class vocabulary.
struct LabelDistribution {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
};

// probs[c] = n_c / N. Throws on an empty dataset or a label outside [0, K).
LabelDistribution empirical_label_distribution(const DomainDataset& ds);

// Validates nonnegativity and sum-to-one within 1e-9.
bool is_valid_distribution(const LabelDistribution& p);

// -ln(sum_y sqrt(P(y) Q(y))). Returns +infinity when the Bhattacharyya
// coefficient is 0 (disjoint supports), so sweep aggregation stays total.
double bhattacharyya_distance(const LabelDistribution& p, const LabelDistribution& q);

// Mean of bhattacharyya_distance over all ordered domain pairs (s, t), s != t.
// Any infinite pair propagates to +infinity.
double average_pairwise_shift(const std::vector<DomainDataset>& domains);

}  // namespace fssfda
