#include "fssfda/adaptation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fssfda/batches.hpp"
#include "fssfda/error.hpp"
#include "fssfda/optim.hpp"
#include "fssfda/rng.hpp"

using nlohmann::json;

namespace fssfda {

std::string to_string(Method m) {
    switch (m) {
        case Method::LP: return "LP";
        case Method::FT: return "FT";
        case Method::LP_FT: return "LP-FT";
        case Method::PL_IM: return "PL-IM";
    }
    return "FT";
}

Method method_from_string(const std::string& s) {
    if (s == "LP" || s == "lp") return Method::LP;
    if (s == "FT" || s == "ft") return Method::FT;
    if (s == "LP-FT" || s == "LP_FT" || s == "lp-ft" || s == "lp_ft" || s == "LPFT") return Method::LP_FT;
    if (s == "PL-IM" || s == "PL_IM" || s == "pl-im" || s == "pl_im" || s == "PLIM") return Method::PL_IM;
    throw ConfigError("unknown adaptation method: '" + s + "'");
}

void AdaptationRecipe::validate() const {
    if (!(lr > 0.0)) throw ConfigError("recipe.lr must be positive");
    if (iterations < 0) throw ConfigError("recipe.iterations must be >= 0");
    if (batch_size < 1) throw ConfigError("recipe.batch_size must be >= 1");
    if (sam_rho < 0.0) throw ConfigError("recipe.sam_rho must be >= 0");
}

std::string AdaptationRecipe::to_json() const {
    json j;
    j["method"] = to_string(method);
    j["lr"] = lr;
    j["iterations"] = iterations;
    j["batch_size"] = batch_size;
    j["sam_rho"] = sam_rho;
    j["augmentation"] = augmentation;
    j["seed"] = seed;
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["weight_decay"] = weight_decay;
    if (!label.empty()) j["label"] = label;
    if (!shots_override.empty()) j["shots"] = shots_override;
    return j.dump(2);
}

AdaptationRecipe AdaptationRecipe::from_json(const std::string& text) {
    json j = json::parse(text);
    AdaptationRecipe r;
    r.method = method_from_string(j.value("method", std::string("FT")));
    r.lr = j.value("lr", 1e-3);
    r.iterations = j.value("iterations", 1000);
    r.batch_size = j.value("batch_size", 32);
    r.sam_rho = j.value("sam_rho", 0.05);
    r.augmentation = j.value("augmentation", true);
    r.seed = j.value("seed", 0ULL);
    r.adam_beta1 = j.value("adam_beta1", 0.9);
    r.adam_beta2 = j.value("adam_beta2", 0.999);
    r.weight_decay = j.value("weight_decay", 0.0);
    r.label = j.value("label", std::string());
    if (j.contains("shots")) r.shots_override = j["shots"].get<std::vector<int>>();
    r.validate();
    return r;
}

void TrainLog::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw TrainingError("cannot write train log: " + path.string());
    for (const auto& e : entries) {
        json j;
        j["index"] = e.index;
        j["phase"] = e.phase;
        j["loss"] = e.loss;
        out << j.dump() << "\n";
    }
    json tail;
    tail["wall_time_s"] = wall_time_s;
    out << tail.dump() << "\n";
}

namespace {

void check_vocabulary(const AdaptableModel& model, const DomainDataset& ds) {
    if (model.spec().n_classes != ds.num_classes()) {
        throw TrainingError("vocabulary mismatch: model has " + std::to_string(model.spec().n_classes) +
                            " classes, dataset '" + ds.domain_id + "' has " + std::to_string(ds.num_classes()));
    }
}

AdamConfig adam_config(const AdaptationRecipe& recipe) {
    AdamConfig cfg;
    cfg.lr = recipe.lr;
    cfg.beta1 = recipe.adam_beta1;
    cfg.beta2 = recipe.adam_beta2;
    cfg.weight_decay = recipe.weight_decay;
    return cfg;
}

// Shared supervised loop for LP / FT phases. The phase seed keeps LP and FT
// batch streams of LP-FT independent.
void supervised_phase(AdaptableModel& model, const ImageBank& bank, const AdaptationRecipe& recipe,
                      const char* phase, bool train_body, std::uint64_t phase_seed, int index_offset,
                      TrainLog& log) {
    AugmentConfig aug;
    aug.crop = model.input_size();

    std::vector<nn::Parameter*> opt_params =
        train_body ? model.all_params() : std::vector<nn::Parameter*>(model.head().params);
    Adam opt(opt_params, adam_config(recipe));

    for (int iter = 0; iter < recipe.iterations; ++iter) {
        Batch batch = make_train_batch(bank, recipe.batch_size, aug, recipe.augmentation, phase_seed, iter);
        auto loss_and_grad = [&]() {
            Tensor feats = model.features(batch.images, train_body);
            Tensor logits = model.head_logits(feats);
            Tensor dlogits;
            const double loss = nn::cross_entropy(logits, batch.labels, 0.0, &dlogits);
            Tensor dfeats = model.head_backward(dlogits);
            if (train_body) model.body_backward(dfeats);
            return loss;
        };
        const double loss = sam_step(opt, recipe.sam_rho, loss_and_grad);
        log.entries.push_back({index_offset + iter, phase, loss});
    }
}

TrainLog run_supervised(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
                        const AdaptationRecipe& recipe, bool probe_first, bool then_finetune) {
    recipe.validate();
    check_vocabulary(model, ds);
    const auto t0 = std::chrono::steady_clock::now();

    ImageBank bank(ds, fewshot.all_ids());
    TrainLog log;
    int offset = 0;
    if (probe_first) {
        model.body().set_trainable(false);
        model.head().set_trainable(true);
        supervised_phase(model, bank, recipe, "lp", /*train_body=*/false, mix_seed(recipe.seed, "lp-phase"), offset,
                         log);
        offset += recipe.iterations;
    }
    if (then_finetune) {
        model.body().set_trainable(true);
        model.head().set_trainable(true);
        supervised_phase(model, bank, recipe, "ft", /*train_body=*/true, mix_seed(recipe.seed, "ft-phase"), offset,
                         log);
    }

    log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
}

}  // namespace

TrainLog linear_probe(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
                      const AdaptationRecipe& recipe) {
    return run_supervised(model, ds, fewshot, recipe, /*probe_first=*/true, /*then_finetune=*/false);
}

TrainLog fine_tune(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
                   const AdaptationRecipe& recipe) {
    return run_supervised(model, ds, fewshot, recipe, /*probe_first=*/false, /*then_finetune=*/true);
}

TrainLog lp_ft(AdaptableModel& model, const DomainDataset& ds, const FewShotSet& fewshot,
               const AdaptationRecipe& recipe) {
    return run_supervised(model, ds, fewshot, recipe, /*probe_first=*/true, /*then_finetune=*/true);
}

namespace {

// Centroid pseudo-labels in bottleneck space: soft centroids weighted by
// current predictions, cosine assignment, one hard re-estimation round.
std::vector<int> compute_pseudo_labels(AdaptableModel& model, const ImageBank& bank, const AugmentConfig& aug) {
    const int n = bank.size();
    const int k = model.spec().n_classes;
    const int d = model.spec().bottleneck_dim;

    Tensor feats({n, d});
    Tensor probs({n, k});
    const int bs = 64;
    for (int start = 0; start < n; start += bs) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + bs); ++i) idx.push_back(i);
        Tensor images = make_eval_batch(bank, idx, aug);
        Tensor f = model.features(images, /*train_body=*/false);
        Tensor p = nn::softmax(model.head_logits(f));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (int j = 0; j < d; ++j) feats.at(idx[i], j) = f.at(static_cast<int>(i), j);
            for (int c = 0; c < k; ++c) probs.at(idx[i], c) = p.at(static_cast<int>(i), c);
        }
    }

    auto assign = [&](const Tensor& centroids) {
        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            double fn = 0.0;
            for (int j = 0; j < d; ++j) fn += static_cast<double>(feats.at(i, j)) * feats.at(i, j);
            fn = std::sqrt(std::max(fn, 1e-24));
            int best = 0;
            double best_sim = -2.0;
            for (int c = 0; c < k; ++c) {
                double cn = 0.0, dot = 0.0;
                for (int j = 0; j < d; ++j) {
                    cn += static_cast<double>(centroids.at(c, j)) * centroids.at(c, j);
                    dot += static_cast<double>(feats.at(i, j)) * centroids.at(c, j);
                }
                cn = std::sqrt(std::max(cn, 1e-24));
                const double sim = dot / (fn * cn);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = c;
                }
            }
            labels[static_cast<std::size_t>(i)] = best;
        }
        return labels;
    };

    // Soft centroids weighted by predicted probabilities.
    Tensor centroids({k, d});
    for (int c = 0; c < k; ++c) {
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) wsum += probs.at(i, c);
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += static_cast<double>(probs.at(i, c)) * feats.at(i, j);
            centroids.at(c, j) = static_cast<float>(acc / std::max(wsum, 1e-12));
        }
    }
    std::vector<int> labels = assign(centroids);

    // One hard re-estimation round; empty classes keep their soft centroid.
    Tensor hard({k, d});
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        counts[static_cast<std::size_t>(c)]++;
        for (int j = 0; j < d; ++j) hard.at(c, j) += feats.at(i, j);
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            for (int j = 0; j < d; ++j) hard.at(c, j) = centroids.at(c, j);
        } else {
            for (int j = 0; j < d; ++j) hard.at(c, j) /= static_cast<float>(counts[static_cast<std::size_t>(c)]);
        }
    }
    return assign(hard);
}

}  // namespace

TrainLog pseudo_label_adapt(AdaptableModel& model, const DomainDataset& target_unlabeled,
                            const AdaptationRecipe& recipe) {
    recipe.validate();
    if (target_unlabeled.examples.empty()) {
        throw TrainingError("pseudo_label_adapt: target dataset is empty");
    }
    check_vocabulary(model, target_unlabeled);
    const auto t0 = std::chrono::steady_clock::now();

    AugmentConfig aug;
    aug.crop = model.input_size();
    ImageBank bank(target_unlabeled, {});

    model.body().set_trainable(true);
    model.head().set_trainable(false);
    Adam opt(model.all_params(), adam_config(recipe));

    const int epoch_len = (bank.size() + recipe.batch_size - 1) / recipe.batch_size;
    TrainLog log;
    std::vector<int> pseudo;
    const std::uint64_t phase_seed = mix_seed(recipe.seed, "plim-phase");

    for (int iter = 0; iter < recipe.iterations; ++iter) {
        if (iter % epoch_len == 0) {
            pseudo = compute_pseudo_labels(model, bank, aug);
        }
        Batch batch = make_train_batch(bank, recipe.batch_size, aug, recipe.augmentation, phase_seed, iter);
        std::vector<int> batch_pseudo(batch.indices.size());
        for (std::size_t i = 0; i < batch.indices.size(); ++i) {
            batch_pseudo[i] = pseudo[static_cast<std::size_t>(batch.indices[i])];
        }
        auto loss_and_grad = [&]() {
            Tensor feats = model.features(batch.images, /*train_body=*/true);
            Tensor logits = model.head_logits(feats);
            Tensor dlogits;
            const double loss = nn::im_pseudo_loss(logits, batch_pseudo, &dlogits);
            Tensor dfeats = model.head_backward(dlogits);
            model.body_backward(dfeats);
            return loss;
        };
        const double loss = sam_step(opt, recipe.sam_rho, loss_and_grad);
        log.entries.push_back({iter, "pl_im", loss});
    }

    log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
}

TrainLog adapt(AdaptableModel& model, const DomainDataset& ds, const FewShotSet* fewshot,
               const AdaptationRecipe& recipe) {
    switch (recipe.method) {
        case Method::LP:
            if (!fewshot) throw TrainingError("LP requires a few-shot set");
            return linear_probe(model, ds, *fewshot, recipe);
        case Method::FT:
            if (!fewshot) throw TrainingError("FT requires a few-shot set");
            return fine_tune(model, ds, *fewshot, recipe);
        case Method::LP_FT:
            if (!fewshot) throw TrainingError("LP-FT requires a few-shot set");
            return lp_ft(model, ds, *fewshot, recipe);
        case Method::PL_IM:
            return pseudo_label_adapt(model, ds, recipe);
    }
    throw TrainingError("unreachable adaptation method");
}

}  // namespace fssfda
