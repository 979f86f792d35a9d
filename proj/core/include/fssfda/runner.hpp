#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fssfda/config.hpp"
#include "fssfda/metrics.hpp"
#include "fssfda/selection.hpp"

namespace fssfda {

struct EnvironmentFingerprint {
    std::string platform;
    std::string compiler;
    std::string artifact_version;

    static EnvironmentFingerprint current();
};

// Persisted outcome of one matrix cell. Immutable once written; re-runs of
// an unchanged config skip cells whose records carry the same digest.
struct RunRecord {
    std::string config_digest;
    PairResult result;
    std::string train_log;   // path relative to the output dir
    std::string checkpoint;  // path relative to the output dir (may be empty)
    EnvironmentFingerprint env;

    std::string to_json() const;
    static RunRecord from_json(const std::string& text);
};

struct MatrixSummary {
    int executed = 0;
    int skipped = 0;
    int failed = 0;
    std::vector<std::string> failures;  // "cell: error"
    std::vector<RunRecord> records;
};

// Runs every (ordered pair, method, shot, seed) cell of the config:
// source checkpoint, splits, few-shot/validation sets, adaptation,
// evaluation on the target test split, one JSON record per cell under
// <output_dir>/<scenario>/<source>__<target>/. Partial failures are
// recorded and the matrix continues. dry_run prints the cell list and
// writes nothing.
MatrixSummary run_matrix(const ExperimentConfig& config, bool dry_run, std::ostream& log);

struct SensitivityResult {
    std::string pair;  // "source->target"
    SelectionOutcome outcome;
    SndReport report;
};

// Learning-rate sweep per ordered pair with the SND criterion plus target
// accuracy per candidate; emits the scatter + CSV per pair.
std::vector<SensitivityResult> run_sensitivity(const ExperimentConfig& config, const SweepGrid& grid,
                                               std::ostream& log);

struct PretrainingComparison {
    AggregateTable table;
    std::string rendered_text;
    std::string rendered_csv;
};

// LP / FT / LP-FT at the configured shots for both a generic pretrained
// backbone (resolved from FSSFDA_WEIGHTS_DIR) and the source checkpoint,
// plus a "No adapt" row.
PretrainingComparison run_pretraining_comparison(const ExperimentConfig& config, std::ostream& log);

// Re-aggregates the records below `output_dir` into per-scenario tables.
struct ReportTables {
    std::string scenario;
    AggregateTable accuracy;
    AggregateTable per_class;
};
std::vector<ReportTables> report_tables(const std::filesystem::path& output_dir);

// Writes the generic-weights archive (body tensors only) for the model's
// backbone id into `weights_dir`, making the model usable as a
// "generic pretrained" origin.
void export_generic_weights(const AdaptableModel& model, const std::filesystem::path& weights_dir);

}  // namespace fssfda
