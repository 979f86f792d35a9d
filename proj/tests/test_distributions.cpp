#include <doctest.h>

#include <cmath>
#include <limits>

#include "fssfda/distributions.hpp"
#include "fssfda/error.hpp"
#include "fssfda/rng.hpp"

using namespace fssfda;

namespace {

// Independent oracle: direct summation in long double, no shortcuts shared
// with the implementation.
long double bhattacharyya_oracle(const std::vector<double>& p, const std::vector<double>& q) {
    long double coeff = 0.0L;
    for (std::size_t i = 0; i < p.size(); ++i) {
        coeff += std::sqrt(static_cast<long double>(p[i]) * static_cast<long double>(q[i]));
    }
    if (coeff <= 0.0L) return std::numeric_limits<long double>::infinity();
    if (coeff > 1.0L) coeff = 1.0L;
    return -std::log(coeff);
}

std::vector<double> random_distribution(Rng& rng, int k, bool sparse) {
    std::vector<double> p(static_cast<std::size_t>(k), 0.0);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        double v = rng.uniform();
        if (sparse && rng.bernoulli(0.3)) v = 0.0;
        p[static_cast<std::size_t>(i)] = v;
        sum += v;
    }
    if (sum == 0.0) {
        p[0] = 1.0;
        sum = 1.0;
    }
    for (auto& v : p) v /= sum;
    return p;
}

DomainDataset dataset_with_counts(const std::vector<int>& counts, const std::string& domain = "d") {
    DomainDataset ds;
    ds.domain_id = domain;
    for (std::size_t c = 0; c < counts.size(); ++c) ds.vocabulary.push_back("c" + std::to_string(c));
    int n = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (int i = 0; i < counts[c]; ++i) {
            LabeledExample ex;
            ex.example_id = domain + "/" + std::to_string(n++);
            ex.class_id = static_cast<int>(c);
            ds.examples.push_back(ex);
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("empirical label distribution") {
    CHECK(empirical_label_distribution(dataset_with_counts({2, 2})).probs == std::vector<double>{0.5, 0.5});
    CHECK(empirical_label_distribution(dataset_with_counts({9, 1})).probs == std::vector<double>{0.9, 0.1});
    CHECK_THROWS_AS(empirical_label_distribution(dataset_with_counts({0, 0})), EvaluationError);

    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> counts;
        for (int c = 0; c < 5; ++c) counts.push_back(1 + rng.below_int(10));
        auto dist = empirical_label_distribution(dataset_with_counts(counts));
        CHECK(is_valid_distribution(dist));
    }
}

TEST_CASE("bhattacharyya distance: pinned examples") {
    LabelDistribution uniform{{0.5, 0.5}};
    CHECK(bhattacharyya_distance(uniform, uniform) == 0.0);

    LabelDistribution a{{1.0, 0.0}};
    LabelDistribution b{{0.0, 1.0}};
    CHECK(std::isinf(bhattacharyya_distance(a, b)));

    // sqrt(0.45) + sqrt(0.05) = 0.894427..., -ln -> 0.111572
    LabelDistribution skew{{0.9, 0.1}};
    CHECK(bhattacharyya_distance(uniform, skew) == doctest::Approx(0.111572).epsilon(1e-5));
    CHECK(bhattacharyya_distance(uniform, skew) == doctest::Approx(bhattacharyya_distance(skew, uniform)));

    LabelDistribution short_one{{1.0}};
    CHECK_THROWS_AS(bhattacharyya_distance(uniform, short_one), EvaluationError);
}

TEST_CASE("bhattacharyya distance matches the direct-summation oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + rng.below_int(19);  // K <= 20
        auto p = random_distribution(rng, k, trial % 3 == 0);
        auto q = random_distribution(rng, k, trial % 3 == 0);
        const long double expect = bhattacharyya_oracle(p, q);
        const double got = bhattacharyya_distance({p}, {q});
        if (std::isinf(expect)) {
            CHECK(std::isinf(got));
        } else {
            CHECK(got == doctest::Approx(static_cast<double>(expect)).epsilon(1e-9));
        }
    }
}

TEST_CASE("bhattacharyya is zero iff equal and decreases under mixing") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + rng.below_int(9);  // K <= 10
        auto p = random_distribution(rng, k, false);
        auto q = random_distribution(rng, k, false);
        CHECK(bhattacharyya_distance({p}, {p}) <= 1e-9);

        // Mixing q toward p must not increase the distance.
        double prev = bhattacharyya_distance({p}, {q});
        for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
            std::vector<double> mix(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) mix[i] = (1.0 - alpha) * q[i] + alpha * p[i];
            const double d = bhattacharyya_distance({p}, {mix});
            CHECK(d <= prev + 1e-9);
            prev = d;
        }
    }
}

TEST_CASE("average pairwise shift") {
    DomainDataset d1 = dataset_with_counts({4, 4, 2}, "a");
    DomainDataset d2 = dataset_with_counts({1, 4, 5}, "b");
    DomainDataset d3 = dataset_with_counts({3, 3, 3}, "c");

    // identical domains -> 0
    CHECK(average_pairwise_shift({d3, dataset_with_counts({3, 3, 3}, "c2")}) == 0.0);

    // brute force over the 6 ordered pairs (symmetric pairs appear twice)
    auto p1 = empirical_label_distribution(d1);
    auto p2 = empirical_label_distribution(d2);
    auto p3 = empirical_label_distribution(d3);
    const double expect = (bhattacharyya_distance(p1, p2) + bhattacharyya_distance(p1, p3) +
                           bhattacharyya_distance(p2, p3)) /
                          3.0;
    CHECK(average_pairwise_shift({d1, d2, d3}) == doctest::Approx(expect).epsilon(1e-12));

    // disjoint supports -> infinity
    DomainDataset e1 = dataset_with_counts({5, 0}, "e1");
    DomainDataset e2 = dataset_with_counts({0, 5}, "e2");
    CHECK(std::isinf(average_pairwise_shift({e1, e2})));

    // vocabulary mismatch -> error
    DomainDataset other = dataset_with_counts({1, 1}, "other");
    other.vocabulary = {"x", "y"};
    CHECK_THROWS_AS(average_pairwise_shift({d1, other}), EvaluationError);
}
