#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fssfda {

// Fraction of exact matches.
double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Mean over classes 0..K-1 of within-class accuracy; every class must be
// present in the labels.
double per_class_accuracy(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes);

// One (source, target, scenario, method, shots, seed) result cell.
struct PairResult {
    std::string source_id;
    std::string target_id;
    std::string scenario;  // scenario digest / kind
    std::string method;
    int shots = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double per_class_accuracy = 0.0;
    int n_test = 0;

    std::string pair_key() const { return source_id + "->" + target_id; }
    std::string to_json() const;
    static PairResult from_json(const std::string& text);
};

enum class TableMetric { Accuracy, PerClassAccuracy };

struct TableCell {
    double mean = 0.0;
    double stddev = 0.0;  // population convention over the declared seeds
    int n = 0;
};

// Rows keyed by (method, shots); columns by domain pair plus "Avg". The Avg
// column is the unweighted mean over pair columns.
struct AggregateTable {
    TableMetric metric = TableMetric::Accuracy;
    std::vector<std::string> row_keys;     // "method shots-shot"
    std::vector<std::string> column_keys;  // pair keys + "Avg"
    std::vector<std::vector<TableCell>> cells;
    std::vector<std::uint64_t> seeds;
};

// Mean and population standard deviation per cell over exactly the declared
// seed set; missing or duplicate cells abort with the offending cell named.
AggregateTable aggregate(const std::vector<PairResult>& results, const std::vector<std::uint64_t>& seeds,
                         TableMetric metric);

// "64.45 (0.94)" percent rendering; single-seed cells render "64.45 (–)".
std::string render_cell(const TableCell& cell);
std::string render_table_text(const AggregateTable& table);
std::string render_table_csv(const AggregateTable& table);

}  // namespace fssfda
