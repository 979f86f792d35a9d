#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fssfda/error.hpp"
#include "fssfda/metrics.hpp"
#include "fssfda/rng.hpp"

using namespace fssfda;

TEST_CASE("accuracy pinned examples") {
    CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(accuracy({0, 1, 1, 1}, {0, 0, 1, 1}) == 0.75);
    CHECK_THROWS_AS(accuracy({}, {}), EvaluationError);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), EvaluationError);
}

TEST_CASE("per_class_accuracy pinned examples") {
    // class 0: 1/2, class 1: 2/2 -> 0.75
    CHECK(per_class_accuracy({0, 1, 1, 1}, {0, 0, 1, 1}, 2) == 0.75);

    // majority predictor on 90/10 labels: accuracy 0.9, per-class 0.5
    std::vector<int> labels, preds;
    for (int i = 0; i < 90; ++i) labels.push_back(0);
    for (int i = 0; i < 10; ++i) labels.push_back(1);
    preds.assign(100, 0);
    CHECK(accuracy(preds, labels) == 0.9);
    CHECK(per_class_accuracy(preds, labels, 2) == 0.5);

    try {
        per_class_accuracy({0, 0}, {0, 0}, 2);
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("metrics match brute force on random instances") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + rng.below_int(49);  // K <= 50
        const int n = k + rng.below_int(1000 - k);
        std::vector<int> labels, preds;
        // every class present at least once
        for (int c = 0; c < k; ++c) labels.push_back(c);
        while (static_cast<int>(labels.size()) < n) labels.push_back(rng.below_int(k));
        for (int i = 0; i < n; ++i) preds.push_back(rng.below_int(k));

        // brute force
        int correct = 0;
        std::vector<int> per_total(static_cast<std::size_t>(k), 0), per_correct(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) ++correct;
            per_total[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
            if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) {
                per_correct[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
            }
        }
        double pca = 0.0;
        for (int c = 0; c < k; ++c) {
            pca += static_cast<double>(per_correct[static_cast<std::size_t>(c)]) /
                   per_total[static_cast<std::size_t>(c)] / k;
        }
        CHECK(accuracy(preds, labels) == static_cast<double>(correct) / n);
        CHECK(per_class_accuracy(preds, labels, k) == doctest::Approx(pca).epsilon(1e-12));
    }
}

TEST_CASE("per_class_accuracy equals accuracy on balanced labels") {
    Rng rng(5);
    const int k = 4, per = 25;
    std::vector<int> labels, preds;
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per; ++i) labels.push_back(c);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) preds.push_back(rng.below_int(k));
    CHECK(per_class_accuracy(preds, labels, k) == doctest::Approx(accuracy(preds, labels)).epsilon(1e-12));
}

namespace {

PairResult make_result(const std::string& src, const std::string& tgt, const std::string& method, int shots,
                       std::uint64_t seed, double acc) {
    PairResult r;
    r.source_id = src;
    r.target_id = tgt;
    r.scenario = "clean";
    r.method = method;
    r.shots = shots;
    r.seed = seed;
    r.accuracy = acc;
    r.per_class_accuracy = acc;
    r.n_test = 10;
    return r;
}

}  // namespace

TEST_CASE("aggregate: mean and population std over seeds {1,2,3}") {
    std::vector<PairResult> results = {
        make_result("a", "b", "FT", 3, 0, 1.0),
        make_result("a", "b", "FT", 3, 1, 2.0),
        make_result("a", "b", "FT", 3, 2, 3.0),
    };
    AggregateTable table = aggregate(results, {0, 1, 2}, TableMetric::Accuracy);
    REQUIRE(table.row_keys.size() == 1);
    REQUIRE(table.column_keys.size() == 2);  // pair + Avg
    CHECK(table.cells[0][0].mean == doctest::Approx(2.0));
    CHECK(table.cells[0][0].stddev == doctest::Approx(0.816497).epsilon(1e-6));
    // single pair: Avg column equals the pair column
    CHECK(table.cells[0][1].mean == doctest::Approx(2.0));
}

TEST_CASE("aggregate: duplicate and missing cells abort with the cell named") {
    std::vector<PairResult> dup = {
        make_result("a", "b", "FT", 3, 0, 0.5),
        make_result("a", "b", "FT", 3, 0, 0.6),
    };
    CHECK_THROWS_AS(aggregate(dup, {0}, TableMetric::Accuracy), EvaluationError);

    std::vector<PairResult> missing = {make_result("a", "b", "FT", 3, 0, 0.5)};
    try {
        aggregate(missing, {0, 1}, TableMetric::Accuracy);
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("a->b") != std::string::npos);
        CHECK(std::string(e.what()).find("seed 1") != std::string::npos);
    }
}

TEST_CASE("aggregate: Avg column is the unweighted pair mean; permutation invariant") {
    std::vector<PairResult> results;
    Rng rng(9);
    const std::vector<std::pair<std::string, std::string>> pairs = {{"a", "b"}, {"b", "a"}, {"a", "c"}};
    for (const auto& [s, t] : pairs) {
        for (std::uint64_t seed : {0ULL, 1ULL}) {
            results.push_back(make_result(s, t, "FT", 1, seed, rng.uniform()));
        }
    }
    AggregateTable table = aggregate(results, {0, 1}, TableMetric::Accuracy);
    const std::size_t avg_col = table.column_keys.size() - 1;
    double mean_of_means = 0.0;
    for (std::size_t c = 0; c < avg_col; ++c) mean_of_means += table.cells[0][c].mean / avg_col;
    CHECK(table.cells[0][avg_col].mean == doctest::Approx(mean_of_means).epsilon(1e-12));

    std::vector<PairResult> shuffled = results;
    std::reverse(shuffled.begin(), shuffled.end());
    AggregateTable table2 = aggregate(shuffled, {0, 1}, TableMetric::Accuracy);
    for (std::size_t c = 0; c < table.column_keys.size(); ++c) {
        CHECK(table.cells[0][c].mean == table2.cells[0][c].mean);
        CHECK(table.cells[0][c].stddev == table2.cells[0][c].stddev);
    }
}

TEST_CASE("aggregate: 6 pairs make 7 columns including Avg") {
    std::vector<PairResult> results;
    const char* domains[3] = {"A", "D", "W"};
    for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < 3; ++t) {
            if (s == t) continue;
            results.push_back(make_result(domains[s], domains[t], "FT", 1, 0, 0.5));
        }
    }
    AggregateTable table = aggregate(results, {0}, TableMetric::Accuracy);
    CHECK(table.column_keys.size() == 7);
    CHECK(table.column_keys.back() == "Avg");
}

TEST_CASE("cell rendering matches the percent convention") {
    TableCell cell;
    cell.mean = 0.6445;
    cell.stddev = 0.0094;
    cell.n = 3;
    CHECK(render_cell(cell) == "64.45 (0.94)");

    TableCell one_seed;
    one_seed.mean = 0.6445;
    one_seed.n = 1;
    CHECK(render_cell(one_seed) == "64.45 (–)");
}

TEST_CASE("table renderings: text aligns, csv parses back") {
    std::vector<PairResult> results = {
        make_result("a", "b", "FT", 3, 0, 0.64),   make_result("a", "b", "FT", 3, 1, 0.66),
        make_result("a", "b", "LP-FT", 3, 0, 0.7), make_result("a", "b", "LP-FT", 3, 1, 0.72),
    };
    AggregateTable table = aggregate(results, {0, 1}, TableMetric::Accuracy);
    const std::string text = render_table_text(table);
    CHECK(text.find("FT 3-shot") != std::string::npos);
    CHECK(text.find("Avg") != std::string::npos);

    const std::string csv = render_table_csv(table);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "Method,a->b,Avg");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        // quoted cells, 3 columns
        CHECK(std::count(line.begin(), line.end(), ',') >= 2);
        CHECK(line.front() == '"');
    }
    CHECK(rows == 2);
}

TEST_CASE("pair result json round-trip") {
    PairResult r = make_result("art", "clipart", "LP-FT", 5, 2, 0.7455);
    r.per_class_accuracy = 0.71;
    r.n_test = 123;
    PairResult back = PairResult::from_json(r.to_json());
    CHECK(back.source_id == "art");
    CHECK(back.pair_key() == "art->clipart");
    CHECK(back.accuracy == 0.7455);
    CHECK(back.per_class_accuracy == 0.71);
    CHECK(back.n_test == 123);
    CHECK(back.seed == 2);
}
