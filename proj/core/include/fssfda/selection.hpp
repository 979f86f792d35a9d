#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fssfda/model.hpp"
#include "fssfda/splits.hpp"
#include "fssfda/tensor.hpp"

namespace fssfda {

enum class Criterion { ValLoss, Snd };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

// Mean cross-entropy over the 1-shot validation set under deterministic
// eval preprocessing.
double validation_loss(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& valset);

// Soft Neighborhood Density: L2-normalize feature rows, softmax each row's
// cosine similarities to every other row at the given temperature, return
// the mean Shannon entropy (natural log) of those N distributions.
double snd_score(const Tensor& features, double temperature = 0.05);

// Learning-rate grid. Absolute values are used as-is; multiplier values
// scale a base learning rate.
struct SweepGrid {
    enum class Mode { Absolute, Multiplier };
    Mode mode = Mode::Multiplier;
    std::vector<double> values;

    static SweepGrid absolute_default();    // {1e-6, 1e-5, 1e-4, 1e-3}
    static SweepGrid multiplier_default();  // {0.1, 0.5, 1, 5, 10}

    void validate() const;
    std::vector<double> resolve(double base_lr) const;
};

struct SweepCandidate {
    double lr = 0.0;
    double criterion_value = 0.0;
    std::optional<double> accuracy;  // present when an eval hook was supplied
};

struct SelectionOutcome {
    Criterion criterion = Criterion::ValLoss;
    std::vector<SweepCandidate> candidates;
    int chosen = -1;

    std::string to_json() const;
    static SelectionOutcome from_json(const std::string& text);
};

struct CandidateEval {
    double criterion_value = 0.0;
    std::optional<double> accuracy;
};

// Runs one candidate per grid value and picks argmin (val_loss) or argmax
// (snd). Ties break toward the smallest learning rate. A candidate failure
// aborts the sweep with an error naming the learning rate.
SelectionOutcome sweep(const std::function<CandidateEval(double lr)>& run_candidate, double base_lr,
                       const SweepGrid& grid, Criterion criterion);

// Spearman rank correlation with average ranks on ties. NaN when either
// side is constant.
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

struct SndReport {
    double spearman = 0.0;
    std::filesystem::path scatter_png;
    std::filesystem::path points_csv;
};

// Scatter of (SND, accuracy) with one point per candidate plus the rank
// correlation; requires accuracies on every candidate.
SndReport snd_accuracy_report(const SelectionOutcome& outcome, const std::filesystem::path& out_prefix);

}  // namespace fssfda
