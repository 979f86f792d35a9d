#include "fssfda/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fssfda/batches.hpp"
#include "fssfda/error.hpp"
#include "fssfda/inference.hpp"
#include "fssfda/nn.hpp"
#include "fssfda/plot.hpp"

using nlohmann::json;

namespace fssfda {

std::string to_string(Criterion c) { return c == Criterion::ValLoss ? "val_loss" : "snd"; }

Criterion criterion_from_string(const std::string& s) {
    if (s == "val_loss") return Criterion::ValLoss;
    if (s == "snd") return Criterion::Snd;
    throw SelectionError("unknown selection criterion: '" + s + "'");
}

std::vector<int> predict_labels(AdaptableModel& model, const ImageBank& bank, int batch_size) {
    AugmentConfig aug;
    aug.crop = model.input_size();
    std::vector<int> preds;
    preds.reserve(static_cast<std::size_t>(bank.size()));
    for (int start = 0; start < bank.size(); start += batch_size) {
        std::vector<int> idx;
        for (int i = start; i < std::min(bank.size(), start + batch_size); ++i) idx.push_back(i);
        Tensor images = make_eval_batch(bank, idx, aug);
        Tensor logits = model.forward(images, /*train_body=*/false);
        for (int p : nn::argmax_rows(logits)) preds.push_back(p);
    }
    return preds;
}

Tensor extract_features(AdaptableModel& model, const ImageBank& bank, int batch_size) {
    AugmentConfig aug;
    aug.crop = model.input_size();
    const int d = model.spec().bottleneck_dim;
    Tensor feats({bank.size(), d});
    for (int start = 0; start < bank.size(); start += batch_size) {
        std::vector<int> idx;
        for (int i = start; i < std::min(bank.size(), start + batch_size); ++i) idx.push_back(i);
        Tensor images = make_eval_batch(bank, idx, aug);
        Tensor f = model.features(images, /*train_body=*/false);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (int j = 0; j < d; ++j) feats.at(idx[i], j) = f.at(static_cast<int>(i), j);
        }
    }
    return feats;
}

double validation_loss(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& valset) {
    auto ids = valset.all_ids();
    if (ids.empty()) throw SelectionError("validation_loss: empty validation set");
    ImageBank bank(ds, ids);
    for (int i = 0; i < bank.size(); ++i) {
        if (bank.label(i) < 0 || bank.label(i) >= model.spec().n_classes) {
            throw SelectionError("validation_loss: label outside the model vocabulary");
        }
    }
    AugmentConfig aug;
    aug.crop = model.input_size();

    double total = 0.0;
    const int bs = 64;
    for (int start = 0; start < bank.size(); start += bs) {
        std::vector<int> idx;
        std::vector<int> labels;
        for (int i = start; i < std::min(bank.size(), start + bs); ++i) {
            idx.push_back(i);
            labels.push_back(bank.label(i));
        }
        Tensor images = make_eval_batch(bank, idx, aug);
        Tensor logits = model.forward(images, /*train_body=*/false);
        total += nn::cross_entropy(logits, labels, 0.0, nullptr) * static_cast<double>(idx.size());
    }
    return total / bank.size();
}

double snd_score(const Tensor& features, double temperature) {
    if (features.ndim() != 2) throw SelectionError("snd_score: features must be a 2-d matrix");
    const int n = features.dim(0), d = features.dim(1);
    if (n < 2) throw SelectionError("snd_score: at least 2 feature rows required, got " + std::to_string(n));
    if (!(temperature > 0.0)) throw SelectionError("snd_score: temperature must be positive");

    // Row-normalize in double so similarities are cosines; double precision
    // keeps the score invariant to uniform rescaling well below 1e-9.
    std::vector<double> unit(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        const float* row = features.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) sq += static_cast<double>(row[j]) * row[j];
        const double norm = std::sqrt(sq);
        if (norm <= 0.0) throw SelectionError("snd_score: zero-norm feature row " + std::to_string(i));
        double* out = unit.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) out[j] = row[j] / norm;
    }

    double total_entropy = 0.0;
    std::vector<double> sims(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* ri = unit.data() + static_cast<std::size_t>(i) * d;
        double max_sim = -1e300;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* rj = unit.data() + static_cast<std::size_t>(j) * d;
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += ri[k] * rj[k];
            sims[static_cast<std::size_t>(j)] = dot / temperature;
            max_sim = std::max(max_sim, dot / temperature);
        }
        double z = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            sims[static_cast<std::size_t>(j)] = std::exp(sims[static_cast<std::size_t>(j)] - max_sim);
            z += sims[static_cast<std::size_t>(j)];
        }
        double h = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double q = sims[static_cast<std::size_t>(j)] / z;
            if (q > 0.0) h -= q * std::log(q);
        }
        total_entropy += h;
    }
    return total_entropy / n;
}

SweepGrid SweepGrid::absolute_default() {
    SweepGrid g;
    g.mode = Mode::Absolute;
    g.values = {1e-6, 1e-5, 1e-4, 1e-3};
    return g;
}

SweepGrid SweepGrid::multiplier_default() {
    SweepGrid g;
    g.mode = Mode::Multiplier;
    g.values = {0.1, 0.5, 1.0, 5.0, 10.0};
    return g;
}

void SweepGrid::validate() const {
    if (values.empty()) throw SelectionError("sweep grid is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw SelectionError("sweep grid values must be positive");
        if (i > 0 && values[i] <= values[i - 1]) {
            throw SelectionError("sweep grid values must be strictly increasing");
        }
    }
}

std::vector<double> SweepGrid::resolve(double base_lr) const {
    validate();
    std::vector<double> lrs;
    lrs.reserve(values.size());
    for (double v : values) lrs.push_back(mode == Mode::Absolute ? v : v * base_lr);
    return lrs;
}

std::string SelectionOutcome::to_json() const {
    json j;
    j["criterion"] = to_string(criterion);
    j["chosen"] = chosen;
    json cand = json::array();
    for (const auto& c : candidates) {
        json e;
        e["lr"] = c.lr;
        e["criterion_value"] = c.criterion_value;
        if (c.accuracy) e["accuracy"] = *c.accuracy;
        cand.push_back(e);
    }
    j["candidates"] = cand;
    return j.dump(2);
}

SelectionOutcome SelectionOutcome::from_json(const std::string& text) {
    json j = json::parse(text);
    SelectionOutcome out;
    out.criterion = criterion_from_string(j.at("criterion").get<std::string>());
    out.chosen = j.at("chosen").get<int>();
    for (const auto& e : j.at("candidates")) {
        SweepCandidate c;
        c.lr = e.at("lr").get<double>();
        c.criterion_value = e.at("criterion_value").get<double>();
        if (e.contains("accuracy")) c.accuracy = e["accuracy"].get<double>();
        out.candidates.push_back(c);
    }
    return out;
}

SelectionOutcome sweep(const std::function<CandidateEval(double lr)>& run_candidate, double base_lr,
                       const SweepGrid& grid, Criterion criterion) {
    const auto lrs = grid.resolve(base_lr);
    SelectionOutcome outcome;
    outcome.criterion = criterion;

    for (double lr : lrs) {
        CandidateEval eval;
        try {
            eval = run_candidate(lr);
        } catch (const std::exception& e) {
            throw SelectionError("sweep candidate lr=" + std::to_string(lr) + " failed: " + e.what());
        }
        SweepCandidate c;
        c.lr = lr;
        c.criterion_value = eval.criterion_value;
        c.accuracy = eval.accuracy;
        outcome.candidates.push_back(c);
    }

    // Grid values ascend, so a strict comparison keeps the smallest lr on
    // ties.
    int best = 0;
    for (int i = 1; i < static_cast<int>(outcome.candidates.size()); ++i) {
        const double v = outcome.candidates[static_cast<std::size_t>(i)].criterion_value;
        const double b = outcome.candidates[static_cast<std::size_t>(best)].criterion_value;
        if (criterion == Criterion::ValLoss ? v < b : v > b) best = i;
    }
    outcome.chosen = best;
    return outcome;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw SelectionError("spearman_rank_correlation: need two equal-length series of size >= 2");
    }
    const auto ra = ranks_with_ties(a);
    const auto rb = ranks_with_ties(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i] / n;
        mb += rb[i] / n;
    }
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);  // NaN when a side is constant
}

SndReport snd_accuracy_report(const SelectionOutcome& outcome, const std::filesystem::path& out_prefix) {
    std::vector<double> snd, acc;
    for (const auto& c : outcome.candidates) {
        if (!c.accuracy) {
            throw SelectionError("snd_accuracy_report: candidate lr=" + std::to_string(c.lr) +
                                 " carries no accuracy");
        }
        snd.push_back(c.criterion_value);
        acc.push_back(*c.accuracy);
    }
    if (snd.empty()) throw SelectionError("snd_accuracy_report: no candidates");

    SndReport report;
    report.spearman = spearman_rank_correlation(snd, acc);
    report.points_csv = out_prefix;
    report.points_csv += ".csv";
    report.scatter_png = out_prefix;
    report.scatter_png += ".png";

    std::ofstream csv(report.points_csv);
    if (!csv) throw SelectionError("cannot write " + report.points_csv.string());
    csv << "lr,snd,accuracy\n";
    for (const auto& c : outcome.candidates) {
        csv << c.lr << "," << c.criterion_value << "," << *c.accuracy << "\n";
    }

    std::vector<ScatterPoint> points;
    for (std::size_t i = 0; i < snd.size(); ++i) points.push_back({snd[i], acc[i]});
    plot_scatter(report.scatter_png, points, "SND", "ACCURACY");
    return report;
}

}  // namespace fssfda
