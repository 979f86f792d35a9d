#include "fssfda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fssfda/error.hpp"

using nlohmann::json;

namespace fssfda {

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.empty()) throw EvaluationError("accuracy: empty prediction vector");
    if (preds.size() != labels.size()) {
        throw EvaluationError("accuracy: length mismatch " + std::to_string(preds.size()) + " vs " +
                              std::to_string(labels.size()));
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double per_class_accuracy(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes) {
    if (preds.empty()) throw EvaluationError("per_class_accuracy: empty prediction vector");
    if (preds.size() != labels.size()) {
        throw EvaluationError("per_class_accuracy: length mismatch");
    }
    std::vector<std::int64_t> total(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::int64_t> correct(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes) {
            throw EvaluationError("per_class_accuracy: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        }
        total[static_cast<std::size_t>(y)]++;
        if (preds[i] == y) correct[static_cast<std::size_t>(y)]++;
    }
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        if (total[static_cast<std::size_t>(c)] == 0) {
            throw EvaluationError("per_class_accuracy: class " + std::to_string(c) + " absent from labels");
        }
        sum += static_cast<double>(correct[static_cast<std::size_t>(c)]) /
               static_cast<double>(total[static_cast<std::size_t>(c)]);
    }
    return sum / num_classes;
}

std::string PairResult::to_json() const {
    json j;
    j["source_id"] = source_id;
    j["target_id"] = target_id;
    j["scenario"] = scenario;
    j["method"] = method;
    j["shots"] = shots;
    j["seed"] = seed;
    j["accuracy"] = accuracy;
    j["per_class_accuracy"] = per_class_accuracy;
    j["n_test"] = n_test;
    return j.dump(2);
}

PairResult PairResult::from_json(const std::string& text) {
    json j = json::parse(text);
    PairResult r;
    r.source_id = j.at("source_id").get<std::string>();
    r.target_id = j.at("target_id").get<std::string>();
    r.scenario = j.value("scenario", std::string());
    r.method = j.at("method").get<std::string>();
    r.shots = j.at("shots").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.per_class_accuracy = j.at("per_class_accuracy").get<double>();
    r.n_test = j.at("n_test").get<int>();
    return r;
}

AggregateTable aggregate(const std::vector<PairResult>& results, const std::vector<std::uint64_t>& seeds,
                         TableMetric metric) {
    if (results.empty()) throw EvaluationError("aggregate: no results");
    if (seeds.empty()) throw EvaluationError("aggregate: no seeds declared");

    std::set<std::string> row_set;
    std::set<std::string> pair_set;
    // (row, pair, seed) -> value
    std::map<std::string, double> values;

    auto row_of = [](const PairResult& r) { return r.method + " " + std::to_string(r.shots) + "-shot"; };

    for (const auto& r : results) {
        const std::string row = row_of(r);
        const std::string pair = r.pair_key();
        row_set.insert(row);
        pair_set.insert(pair);
        const std::string key = row + "|" + pair + "|" + std::to_string(r.seed);
        if (values.count(key)) {
            throw EvaluationError("aggregate: duplicate cell (" + row + ", " + pair + ", seed " +
                                  std::to_string(r.seed) + ")");
        }
        values[key] = metric == TableMetric::Accuracy ? r.accuracy : r.per_class_accuracy;
    }

    AggregateTable table;
    table.metric = metric;
    table.seeds = seeds;
    table.row_keys.assign(row_set.begin(), row_set.end());
    table.column_keys.assign(pair_set.begin(), pair_set.end());
    table.column_keys.push_back("Avg");

    for (const auto& row : table.row_keys) {
        std::vector<TableCell> cells;
        // Per-seed averages across pairs feed the Avg column.
        std::vector<double> avg_per_seed(seeds.size(), 0.0);
        for (const auto& pair : table.column_keys) {
            if (pair == "Avg") continue;
            std::vector<double> vals;
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                const std::string key = row + "|" + pair + "|" + std::to_string(seeds[s]);
                auto it = values.find(key);
                if (it == values.end()) {
                    throw EvaluationError("aggregate: missing cell (" + row + ", " + pair + ", seed " +
                                          std::to_string(seeds[s]) + ")");
                }
                vals.push_back(it->second);
                avg_per_seed[s] += it->second / static_cast<double>(pair_set.size());
            }
            TableCell cell;
            cell.n = static_cast<int>(vals.size());
            for (double v : vals) cell.mean += v / vals.size();
            double sq = 0.0;
            for (double v : vals) sq += (v - cell.mean) * (v - cell.mean);
            cell.stddev = std::sqrt(sq / vals.size());
            cells.push_back(cell);
        }
        TableCell avg;
        avg.n = static_cast<int>(seeds.size());
        for (double v : avg_per_seed) avg.mean += v / avg_per_seed.size();
        double sq = 0.0;
        for (double v : avg_per_seed) sq += (v - avg.mean) * (v - avg.mean);
        avg.stddev = std::sqrt(sq / avg_per_seed.size());
        cells.push_back(avg);
        table.cells.push_back(std::move(cells));
    }
    return table;
}

std::string render_cell(const TableCell& cell) {
    char buf[64];
    if (cell.n < 2) {
        std::snprintf(buf, sizeof(buf), "%.2f (–)", cell.mean * 100.0);
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", cell.mean * 100.0, cell.stddev * 100.0);
    }
    return buf;
}

std::string render_table_text(const AggregateTable& table) {
    if (table.row_keys.empty()) throw EvaluationError("render_table: empty table");
    std::vector<std::size_t> widths;
    widths.push_back(std::string("Method").size());
    for (const auto& r : table.row_keys) widths[0] = std::max(widths[0], r.size());
    for (std::size_t c = 0; c < table.column_keys.size(); ++c) {
        std::size_t w = table.column_keys[c].size();
        for (std::size_t r = 0; r < table.row_keys.size(); ++r) {
            w = std::max(w, render_cell(table.cells[r][c]).size());
        }
        widths.push_back(w);
    }

    std::ostringstream os;
    os << std::string(widths[0], ' ').replace(0, 6, "Method");
    for (std::size_t c = 0; c < table.column_keys.size(); ++c) {
        os << "  " << table.column_keys[c]
           << std::string(widths[c + 1] - table.column_keys[c].size(), ' ');
    }
    os << "\n";
    for (std::size_t r = 0; r < table.row_keys.size(); ++r) {
        os << table.row_keys[r] << std::string(widths[0] - table.row_keys[r].size(), ' ');
        for (std::size_t c = 0; c < table.column_keys.size(); ++c) {
            const std::string cell = render_cell(table.cells[r][c]);
            os << "  " << cell;
            // The en dash is 3 bytes but 1 column.
            std::size_t display = cell.size();
            if (cell.find("–") != std::string::npos) display -= 2;
            os << std::string(widths[c + 1] > display ? widths[c + 1] - display : 0, ' ');
        }
        os << "\n";
    }
    return os.str();
}

std::string render_table_csv(const AggregateTable& table) {
    if (table.row_keys.empty()) throw EvaluationError("render_table: empty table");
    std::ostringstream os;
    os << "Method";
    for (const auto& c : table.column_keys) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < table.row_keys.size(); ++r) {
        os << "\"" << table.row_keys[r] << "\"";
        for (std::size_t c = 0; c < table.column_keys.size(); ++c) {
            os << ",\"" << render_cell(table.cells[r][c]) << "\"";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace fssfda
