// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-7 are oracle and exactness checks; 8 and 9 run the
// desk-scale end-to-end studies on the in-tree synthetic dataset; 10 is the
// optional full-scale reproduction and is skipped without a GPU benchmark
// setup.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "fssfda/adaptation.hpp"
#include "fssfda/batches.hpp"
#include "fssfda/config.hpp"
#include "fssfda/distributions.hpp"
#include "fssfda/error.hpp"
#include "fssfda/inference.hpp"
#include "fssfda/metrics.hpp"
#include "fssfda/model.hpp"
#include "fssfda/optim.hpp"
#include "fssfda/rng.hpp"
#include "fssfda/runner.hpp"
#include "fssfda/scenario.hpp"
#include "fssfda/selection.hpp"
#include "fssfda/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fssfda;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

// ---------------------------------------------------------------------------
// Shared desk-scale experiment setup
// ---------------------------------------------------------------------------

constexpr int kClasses = 4;
constexpr int kPerClass = 80;
constexpr int kImageSize = 24;

// Four color classes with wide within-class appearance spread; the beta
// domain shifts hue, geometry and input statistics (bright background,
// stronger noise) so frozen-body inference degrades.
SyntheticConfig color_task_config() {
    SyntheticConfig cfg;
    cfg.num_classes = kClasses;
    cfg.per_class = kPerClass;
    cfg.image_size = kImageSize;
    cfg.label_factor = SyntheticLabelFactor::Color;
    cfg.hue_jitter_deg = 26.0;
    cfg.sat_min = 0.5;
    cfg.sat_max = 0.95;
    cfg.val_min = 0.55;
    cfg.val_max = 0.95;
    cfg.sigma_min = 0.08;
    cfg.sigma_max = 0.18;
    cfg.radius_min = 0.05;
    cfg.radius_max = 0.35;
    cfg.background_jitter = 0.06;
    cfg.seed = 7;
    cfg.domains = {{"alpha", 0.0, 0.0, 0.12, 0.05}, {"beta", 30.0, 20.0, 0.45, 0.09}};
    return cfg;
}

// The "generic pretraining" stand-in: a finer 8-hue palette task on its own
// corpus. Its body is linearly sufficient for the 4-class target but its
// label space does not match, mirroring an off-the-shelf backbone.
SyntheticConfig mismatched_task_config() {
    SyntheticConfig cfg = color_task_config();
    cfg.num_classes = 8;
    cfg.per_class = 40;
    cfg.hue_jitter_deg = 12.0;
    cfg.seed = 99;
    return cfg;
}

ModelSpec desk_model(std::uint64_t init_seed, int n_classes = kClasses) {
    ModelSpec spec;
    spec.backbone_id = "small_cnn";
    spec.bottleneck_dim = 32;
    spec.n_classes = n_classes;
    spec.init_seed = init_seed;
    spec.input_size = kImageSize;
    return spec;
}

SourceTrainConfig desk_source_config(std::uint64_t seed) {
    SourceTrainConfig cfg;
    cfg.epochs = 12;
    cfg.lr = 1e-3;
    cfg.batch_size = 16;
    cfg.seed = seed;
    cfg.augment.crop = kImageSize;
    return cfg;
}

AdaptationRecipe desk_recipe(Method method, std::uint64_t seed) {
    AdaptationRecipe recipe;
    recipe.method = method;
    recipe.lr = 1e-3;
    recipe.iterations = 250;
    recipe.batch_size = 16;
    recipe.sam_rho = 0.05;
    recipe.seed = seed;
    return recipe;
}

struct EvalScores {
    double accuracy = 0.0;
    double per_class = 0.0;
};

EvalScores evaluate_on(AdaptableModel& model, const DomainDataset& test) {
    ImageBank bank(test, {});
    auto preds = predict_labels(model, bank);
    EvalScores scores;
    scores.accuracy = accuracy(preds, bank.labels());
    scores.per_class = per_class_accuracy(preds, bank.labels(), test.num_classes());
    return scores;
}

// Source checkpoints per (tag, seed), trained once and cloned per consumer.
class SourceModelCache {
public:
    AdaptableModel& get(const std::string& tag, std::uint64_t seed, const DomainDataset& train_set,
                        std::ostream& log) {
        const std::string key = tag + "#" + std::to_string(seed);
        auto it = models_.find(key);
        if (it == models_.end()) {
            auto model = build_model(desk_model(mix_seed(seed, tag), train_set.num_classes()));
            const double t0 = now_seconds();
            SourceTrainStats stats = train_source(*model, train_set, desk_source_config(seed));
            log << "    [setup] source '" << tag << "' seed " << seed << ": train acc " << stats.train_accuracy
                << " (" << static_cast<int>(now_seconds() - t0) << "s)\n";
            it = models_.emplace(key, std::move(model)).first;
        }
        return *it->second;
    }

private:
    std::map<std::string, std::unique_ptr<AdaptableModel>> models_;
};

// ---------------------------------------------------------------------------
// Criteria 1-7: oracles and exactness
// ---------------------------------------------------------------------------

bool criterion1_bhattacharyya(std::ostream& log) {
    const double t0 = now_seconds();
    Rng rng(101);
    auto random_dist = [&](int k, bool sparse) {
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
    };

    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + rng.below_int(19);
        auto p = random_dist(k, trial % 4 == 0);
        auto q = random_dist(k, trial % 4 == 0);
        // direct-summation oracle
        long double coeff = 0.0L;
        for (int i = 0; i < k; ++i) {
            coeff += std::sqrt(static_cast<long double>(p[static_cast<std::size_t>(i)]) *
                               static_cast<long double>(q[static_cast<std::size_t>(i)]));
        }
        const double got = bhattacharyya_distance({p}, {q});
        if (coeff <= 0.0L) {
            require(std::isinf(got), "disjoint-support pair did not return +infinity");
        } else {
            const double expect = static_cast<double>(-std::log(std::min(coeff, 1.0L)));
            require(std::fabs(got - expect) <= 1e-9 * std::max(1.0, std::fabs(expect)),
                    "oracle mismatch at trial " + std::to_string(trial));
        }
        require(std::fabs(bhattacharyya_distance({p}, {p})) == 0.0, "identical pair not exactly 0");
    }
    // explicit disjoint pair
    require(std::isinf(bhattacharyya_distance({{1.0, 0.0}}, {{0.0, 1.0}})), "disjoint pair not +infinity");

    const double elapsed = now_seconds() - t0;
    log << "    1000 random pairs within 1e-9 of the oracle, " << elapsed << "s\n";
    require(elapsed < 1.0, "runtime " + std::to_string(elapsed) + "s exceeds 1s");
    return true;
}

bool criterion2_snd(std::ostream& log) {
    const double t0 = now_seconds();
    Rng rng(202);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + rng.below_int(63);
        const int d = 1 + rng.below_int(32);
        Tensor f({n, d});
        for (std::int64_t i = 0; i < f.numel(); ++i) f[i] = static_cast<float>(rng.normal(0.0, 1.0));

        // independent O(N^2) brute force
        std::vector<std::vector<long double>> unit(static_cast<std::size_t>(n),
                                                   std::vector<long double>(static_cast<std::size_t>(d)));
        for (int i = 0; i < n; ++i) {
            long double sq = 0.0L;
            for (int j = 0; j < d; ++j) sq += static_cast<long double>(f.at(i, j)) * f.at(i, j);
            const long double norm = std::sqrt(sq);
            for (int j = 0; j < d; ++j) {
                unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = f.at(i, j) / norm;
            }
        }
        long double total = 0.0L;
        for (int i = 0; i < n; ++i) {
            long double z = 0.0L;
            std::vector<long double> w;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                long double dot = 0.0L;
                for (int k = 0; k < d; ++k) {
                    dot += unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                           unit[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                }
                w.push_back(std::exp(dot / 0.05L));
                z += w.back();
            }
            long double h = 0.0L;
            for (long double e : w) {
                const long double q = e / z;
                if (q > 0.0L) h -= q * std::log(q);
            }
            total += h;
        }
        const double expect = static_cast<double>(total / n);
        const double got = snd_score(f, 0.05);
        require(std::fabs(got - expect) <= 1e-6 * std::max(1.0, std::fabs(expect)),
                "oracle mismatch at trial " + std::to_string(trial));
    }

    Tensor two({2, 5});
    two.fill(0.4f);
    two.at(1, 2) = 0.9f;
    require(snd_score(two) == 0.0, "N=2 did not return exactly 0");

    Tensor same({5, 3});
    for (int i = 0; i < 5; ++i) {
        same.at(i, 0) = 0.3f;
        same.at(i, 1) = -0.2f;
        same.at(i, 2) = 0.9f;
    }
    require(std::fabs(snd_score(same) - std::log(4.0)) <= 1e-9, "5 identical rows != ln 4 within 1e-9");

    const double elapsed = now_seconds() - t0;
    log << "    100 random matrices within 1e-6 of brute force, " << elapsed << "s\n";
    require(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s exceeds 5s");
    return true;
}

bool criterion3_freeze(std::ostream& log) {
    const double t0 = now_seconds();
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "freeze";
    fs::remove_all(root);
    SyntheticConfig data_cfg = color_task_config();
    data_cfg.per_class = 12;
    generate_synthetic_dataset(root, data_cfg);
    DomainDataset beta = scan_image_folder(root, "beta");

    // LP leaves the whole body (including BN statistics) bit-identical.
    {
        auto model = build_model(desk_model(1));
        SplitPlan plan = split_train_test(beta, 0.8, 0);
        FewShotSet shots = sample_few_shot(beta, plan, 3, 0);
        auto body_before = model->body().snapshot();
        AdaptationRecipe recipe = desk_recipe(Method::LP, 0);
        recipe.iterations = 60;
        linear_probe(*model, beta, shots, recipe);
        require(snapshots_bit_identical(body_before, model->body().snapshot()),
                "LP moved a body parameter or BN statistic");
    }
    // PL-IM leaves the head bit-identical.
    {
        auto model = build_model(desk_model(2));
        auto head_before = model->head().snapshot();
        AdaptationRecipe recipe = desk_recipe(Method::PL_IM, 0);
        recipe.iterations = 30;
        pseudo_label_adapt(*model, beta, recipe);
        require(snapshots_bit_identical(head_before, model->head().snapshot()), "PL-IM moved a head parameter");
    }
    const double elapsed = now_seconds() - t0;
    log << "    LP body and PL-IM head bit-identical, " << elapsed << "s\n";
    require(elapsed < 60.0, "runtime exceeds 1 min");
    return true;
}

bool criterion4_sam(std::ostream& log) {
    // Analytic example: w=1, f=w^2, rho=0.5 -> perturbed point 1.5, update
    // gradient 3.
    {
        nn::Parameter w;
        w.value = Tensor({1}, 1.0f);
        w.grad = Tensor({1});
        Adam opt({&w}, AdamConfig{0.1});
        float update_grad = 0.0f, seen_point = 0.0f;
        sam_step(opt, 0.5, [&]() {
            seen_point = w.value[0];
            w.grad[0] += 2.0f * w.value[0];
            update_grad = w.grad[0];
            return static_cast<double>(w.value[0]) * w.value[0];
        });
        require(std::fabs(seen_point - 1.5f) <= 1e-6, "perturbed point != 1.5");
        require(std::fabs(update_grad - 3.0f) <= 1e-6, "SAM update gradient != 3");
    }

    // rho=0 over 50 steps on the small CNN: bit-identical to plain Adam.
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "sam";
    fs::remove_all(root);
    SyntheticConfig data_cfg = color_task_config();
    data_cfg.per_class = 8;
    generate_synthetic_dataset(root, data_cfg);
    DomainDataset alpha = scan_image_folder(root, "alpha");
    ImageBank bank(alpha, {});
    AugmentConfig aug;
    aug.crop = kImageSize;

    auto model_sam = build_model(desk_model(3));
    auto model_base = build_model(desk_model(3));
    Adam opt_sam(model_sam->all_params(), AdamConfig{1e-3});
    Adam opt_base(model_base->all_params(), AdamConfig{1e-3});

    for (int iter = 0; iter < 50; ++iter) {
        Batch batch = make_train_batch(bank, 8, aug, true, 5, iter);
        auto loss_fn = [&](AdaptableModel& m) {
            Tensor feats = m.features(batch.images, true);
            Tensor logits = m.head_logits(feats);
            Tensor dlogits;
            const double loss = nn::cross_entropy(logits, batch.labels, 0.0, &dlogits);
            Tensor dfeats = m.head_backward(dlogits);
            m.body_backward(dfeats);
            return loss;
        };
        sam_step(opt_sam, 0.0, [&]() { return loss_fn(*model_sam); });
        opt_base.zero_grad();
        loss_fn(*model_base);
        opt_base.step();
    }
    require(snapshots_bit_identical(model_sam->body().snapshot(), model_base->body().snapshot()) &&
                snapshots_bit_identical(model_sam->head().snapshot(), model_base->head().snapshot()),
            "rho=0 trajectory diverged from the base optimizer");
    log << "    analytic example exact, 50-step rho=0 trajectory bit-identical\n";
    return true;
}

bool criterion5_determinism(std::ostream& log) {
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "determinism";
    fs::remove_all(root);
    SyntheticConfig data_cfg = color_task_config();
    data_cfg.per_class = 12;
    generate_synthetic_dataset(root, data_cfg);
    DomainDataset beta = scan_image_folder(root, "beta");

    // splits / few-shot / validation reproduce bit-for-bit
    SplitPlan p1 = split_train_test(beta, 0.8, 5);
    SplitPlan p2 = split_train_test(beta, 0.8, 5);
    require(p1.train_ids == p2.train_ids && p1.test_ids == p2.test_ids, "split not reproducible");

    FewShotSet s1 = sample_few_shot(beta, p1, 3, 5);
    FewShotSet s2 = sample_few_shot(beta, p1, 3, 5);
    require(s1.ids_by_class == s2.ids_by_class, "few-shot set not reproducible");

    FewShotSet v1 = sample_validation_set(beta, p1, s1, 5);
    FewShotSet v2 = sample_validation_set(beta, p1, s1, 5);
    require(v1.ids_by_class == v2.ids_by_class, "validation set not reproducible");

    // exactly k per class, all inside the train side, disjoint from validation
    require(static_cast<int>(s1.ids_by_class.size()) == beta.num_classes(), "few-shot misses a class");
    std::set<std::string> shot_ids;
    for (const auto& [cls, ids] : s1.ids_by_class) {
        (void)cls;
        require(static_cast<int>(ids.size()) == 3, "class does not have exactly k shots");
        for (const auto& id : ids) {
            require(p1.contains_train(id), "shot drawn outside the train side");
            shot_ids.insert(id);
        }
    }
    for (const auto& id : v1.all_ids()) {
        require(shot_ids.count(id) == 0, "validation overlaps the few-shot set");
    }

    // full adaptation runs reproduce bit-for-bit
    auto m1 = build_model(desk_model(4));
    auto m2 = build_model(desk_model(4));
    AdaptationRecipe recipe = desk_recipe(Method::FT, 5);
    recipe.iterations = 25;
    fine_tune(*m1, beta, s1, recipe);
    fine_tune(*m2, beta, s1, recipe);
    require(snapshots_bit_identical(m1->body().snapshot(), m2->body().snapshot()) &&
                snapshots_bit_identical(m1->head().snapshot(), m2->head().snapshot()),
            "fine-tune run not bit-reproducible");
    log << "    splits, samplers and a full FT run reproduce bit-for-bit\n";
    return true;
}

bool criterion6_metrics(std::ostream& log) {
    Rng rng(606);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + rng.below_int(49);
        const int n = k + rng.below_int(1000 - k);
        std::vector<int> labels, preds;
        for (int c = 0; c < k; ++c) labels.push_back(c);
        while (static_cast<int>(labels.size()) < n) labels.push_back(rng.below_int(k));
        for (int i = 0; i < n; ++i) preds.push_back(rng.below_int(k));

        int correct = 0;
        std::vector<int> per_total(static_cast<std::size_t>(k), 0), per_ok(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            per_total[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
            if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) {
                ++correct;
                per_ok[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
            }
        }
        double pca = 0.0;
        for (int c = 0; c < k; ++c) {
            pca += static_cast<double>(per_ok[static_cast<std::size_t>(c)]) /
                   per_total[static_cast<std::size_t>(c)] / k;
        }
        require(accuracy(preds, labels) == static_cast<double>(correct) / n, "accuracy oracle mismatch");
        require(std::fabs(per_class_accuracy(preds, labels, k) - pca) <= 1e-12, "per-class oracle mismatch");
    }

    // imbalanced majority predictor: accuracy 0.9, per-class 0.5, exactly
    std::vector<int> labels(100, 0), preds(100, 0);
    for (int i = 90; i < 100; ++i) labels[static_cast<std::size_t>(i)] = 1;
    require(accuracy(preds, labels) == 0.9, "majority-predictor accuracy != 0.9");
    require(per_class_accuracy(preds, labels, 2) == 0.5, "majority-predictor per-class != 0.5");

    // aggregate of {1,2,3}: mean 2.0, population std 0.816497
    std::vector<PairResult> results;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        PairResult r;
        r.source_id = "a";
        r.target_id = "b";
        r.method = "FT";
        r.shots = 3;
        r.seed = seed;
        r.accuracy = static_cast<double>(seed + 1);
        r.per_class_accuracy = r.accuracy;
        r.n_test = 1;
        results.push_back(r);
    }
    AggregateTable table = aggregate(results, {0, 1, 2}, TableMetric::Accuracy);
    require(std::fabs(table.cells[0][0].mean - 2.0) <= 1e-12, "aggregate mean != 2.0");
    require(std::fabs(table.cells[0][0].stddev - 0.816497) <= 1e-6, "population std != 0.816497");
    log << "    200 random instances match brute force; pinned cases exact\n";
    return true;
}

bool criterion7_scenarios(std::ostream& log) {
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "scenarios";
    fs::remove_all(root);
    SyntheticConfig data_cfg = color_task_config();
    data_cfg.num_classes = 6;
    data_cfg.per_class = 30;
    generate_synthetic_dataset(root, data_cfg);
    DomainDataset alpha = scan_image_folder(root, "alpha");
    DomainDataset beta = scan_image_folder(root, "beta");

    // OoD: no unknown-class example in the test split; ood train ⊇ clean train
    OodScenario sc = make_ood_scenario(alpha, beta, 3, 0);
    for (const auto& ex : sc.target_test_known.examples) {
        require(ex.class_id >= 0 && ex.class_id < 3, "unknown-class example in the OoD test split");
    }
    std::set<std::string> ood_ids;
    for (const auto& ex : sc.target_train_ood.examples) ood_ids.insert(ex.example_id);
    for (const auto& ex : sc.target_train_clean.examples) {
        require(ood_ids.count(ex.example_id) == 1, "clean train example missing from the OoD train pool");
    }
    require(sc.target_train_ood.size() > sc.target_train_clean.size(), "OoD pool gained no unknown examples");

    // RSUT: exactly reversed source/target rank orderings, no empty class
    RsutPair pair = make_rsut_imbalance(alpha, beta, 6.0, 0);
    auto scounts = pair.source_sub.class_counts();
    auto tcounts = pair.target_sub.class_counts();
    std::vector<int> src_order(scounts.size()), tgt_order(tcounts.size());
    for (std::size_t i = 0; i < scounts.size(); ++i) {
        src_order[i] = tgt_order[i] = static_cast<int>(i);
    }
    std::sort(src_order.begin(), src_order.end(),
              [&](int a, int b) { return scounts[static_cast<std::size_t>(a)] > scounts[static_cast<std::size_t>(b)]; });
    std::sort(tgt_order.begin(), tgt_order.end(),
              [&](int a, int b) { return tcounts[static_cast<std::size_t>(a)] > tcounts[static_cast<std::size_t>(b)]; });
    std::reverse(tgt_order.begin(), tgt_order.end());
    require(src_order == tgt_order, "source/target orderings are not exactly reversed");
    for (std::size_t c = 0; c < scounts.size(); ++c) {
        require(scounts[c] >= 1 && tcounts[c] >= 1, "RSUT emptied a class");
    }
    log << "    OoD partition and RSUT reversal hold\n";
    return true;
}

// ---------------------------------------------------------------------------
// Criterion 8: desk-scale end-to-end directional study
// ---------------------------------------------------------------------------

bool criterion8_endtoend(std::ostream& log) {
    const double t0 = now_seconds();
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "endtoend";
    fs::remove_all(root);
    generate_synthetic_dataset(root / "color", color_task_config());
    generate_synthetic_dataset(root / "mismatched", mismatched_task_config());

    DomainDataset src_color = scan_image_folder(root / "color", "alpha");
    DomainDataset tgt_color = scan_image_folder(root / "color", "beta");
    DomainDataset src_mismatched = scan_image_folder(root / "mismatched", "alpha");

    SourceModelCache cache;
    const std::vector<std::uint64_t> seeds = {0, 1, 2};

    double sum_noadapt = 0.0, sum_ft = 0.0, sum_lp = 0.0;
    double sum_ft_mis = 0.0, sum_lp_mis = 0.0;
    double sum_ft_rsut_pc = 0.0, sum_plim_rsut_pc = 0.0;

    for (std::uint64_t seed : seeds) {
        // clean protocol pieces
        SplitPlan plan = split_train_test(tgt_color, 0.8, seed);
        DomainDataset test = subset_by_ids(tgt_color, plan.test_ids);
        FewShotSet shots = sample_few_shot(tgt_color, plan, 3, seed);

        AdaptableModel& source_model = cache.get("source-color", seed, src_color, log);

        // (a) No adapt baseline
        {
            auto model = source_model.clone();
            sum_noadapt += evaluate_on(*model, test).accuracy;
        }
        // FT / LP from the source-pretrained body
        {
            auto model = source_model.clone();
            fine_tune(*model, tgt_color, shots, desk_recipe(Method::FT, seed));
            sum_ft += evaluate_on(*model, test).accuracy;
        }
        {
            auto model = source_model.clone();
            linear_probe(*model, tgt_color, shots, desk_recipe(Method::LP, seed));
            sum_lp += evaluate_on(*model, test).accuracy;
        }
        // (b) mismatched pretrained body, head replaced for the 4-way task.
        // The probe runs in the 1-shot minimal-data regime without
        // stochastic augmentation, where fitting through the body visibly
        // distorts the pretrained features while the probe's small head
        // generalizes from the same four images.
        FewShotSet one_shot = sample_few_shot(tgt_color, plan, 1, seed);
        AdaptationRecipe probe_recipe = desk_recipe(Method::FT, seed);
        probe_recipe.lr = 2e-3;
        probe_recipe.augmentation = false;
        AdaptableModel& mismatched = cache.get("source-mismatched", seed, src_mismatched, log);
        {
            auto model = mismatched.clone();
            model->replace_head(kClasses);
            AdaptationRecipe r = probe_recipe;
            r.method = Method::FT;
            fine_tune(*model, tgt_color, one_shot, r);
            sum_ft_mis += evaluate_on(*model, test).accuracy;
        }
        {
            auto model = mismatched.clone();
            model->replace_head(kClasses);
            AdaptationRecipe r = probe_recipe;
            r.method = Method::LP;
            linear_probe(*model, tgt_color, one_shot, r);
            sum_lp_mis += evaluate_on(*model, test).accuracy;
        }

        // (c) RSUT: reversed label shift, per-class accuracy, FT vs PL-IM
        RsutPair rsut = make_rsut_imbalance(src_color, tgt_color, 6.0, 0);
        SplitPlan rsut_plan = split_train_test(rsut.target_sub, 0.8, seed);
        DomainDataset rsut_test = subset_by_ids(rsut.target_sub, rsut_plan.test_ids);
        DomainDataset rsut_unlabeled = subset_by_ids(rsut.target_sub, rsut_plan.train_ids);
        FewShotSet rsut_shots = sample_few_shot(rsut.target_sub, rsut_plan, 3, seed);
        AdaptableModel& rsut_source = cache.get("source-rsut", seed, rsut.source_sub, log);
        {
            auto model = rsut_source.clone();
            fine_tune(*model, rsut.target_sub, rsut_shots, desk_recipe(Method::FT, seed));
            sum_ft_rsut_pc += evaluate_on(*model, rsut_test).per_class;
        }
        {
            auto model = rsut_source.clone();
            pseudo_label_adapt(*model, rsut_unlabeled, desk_recipe(Method::PL_IM, seed));
            sum_plim_rsut_pc += evaluate_on(*model, rsut_test).per_class;
        }
    }

    const double n = static_cast<double>(seeds.size());
    const double noadapt = sum_noadapt / n, ft = sum_ft / n, lp = sum_lp / n;
    const double ft_mis = sum_ft_mis / n, lp_mis = sum_lp_mis / n;
    const double ft_rsut = sum_ft_rsut_pc / n, plim_rsut = sum_plim_rsut_pc / n;

    log << "    (a) mean accuracy: No adapt " << noadapt << " vs 3-shot FT " << ft << "\n";
    log << "    (b) source body 3-shot: FT " << ft << " vs LP " << lp << "; mismatched body 1-shot: LP " << lp_mis
        << " vs FT " << ft_mis << "\n";
    log << "    (c) RSUT per-class: FT " << ft_rsut << " vs PL-IM " << plim_rsut << "\n";

    require(ft > noadapt, "(a) 3-shot FT did not beat No adapt");
    require(ft >= lp, "(b) FT below LP with the source-pretrained body");
    require(lp_mis >= ft_mis, "(b) LP below FT with the mismatched pretrained body");
    require(ft_rsut > plim_rsut, "(c) FT per-class accuracy did not exceed PL-IM under RSUT");

    const double elapsed = now_seconds() - t0;
    log << "    total " << static_cast<int>(elapsed) << "s\n";
    require(elapsed < 900.0, "runtime exceeds 15 min");
    return true;
}

// ---------------------------------------------------------------------------
// Criterion 9: sensitivity harness
// ---------------------------------------------------------------------------

bool criterion9_sensitivity(std::ostream& log) {
    const double t0 = now_seconds();
    fs::path root = fs::temp_directory_path() / "fssfda_acceptance" / "sensitivity";
    fs::remove_all(root);
    // Eight tightly spaced hue classes rotated past the half-spacing
    // boundary: batch-statistic recalibration alone cannot absorb the shift
    // and the clustering structure is ambiguous, so the learning rate moves
    // the outcome gradually rather than all-or-nothing.
    SyntheticConfig data_cfg = color_task_config();
    data_cfg.num_classes = 8;
    data_cfg.per_class = 40;
    data_cfg.hue_jitter_deg = 16.0;
    data_cfg.domains[1].hue_shift_deg = 24.0;
    generate_synthetic_dataset(root / "data", data_cfg);

    std::ostringstream cfg_json;
    cfg_json << R"({
  "data_root": ")" << (root / "data").string() << R"(",
  "domains": ["alpha", "beta"],
  "scenario": {"kind": "clean", "seed": 0},
  "model": {"backbone_id": "small_cnn", "bottleneck_dim": 32, "n_classes": 8, "init_seed": 0, "input_size": 24},
  "methods": [
    {"method": "PL-IM", "lr": 0.001, "iterations": 250, "batch_size": 16, "shots": [0]}
  ],
  "shots": [3],
  "seeds": [0],
  "source_train": {"epochs": 12, "batch_size": 16},
  "output_dir": ")" << (root / "out").string() << R"("
})";
    ExperimentConfig cfg = parse_experiment_config(cfg_json.str());

    auto results = run_sensitivity(cfg, SweepGrid::multiplier_default(), log);
    require(results.size() == 2, "expected 2 ordered pairs");

    bool any_spread = false;
    bool any_finite = false;
    for (const auto& r : results) {
        require(static_cast<int>(r.outcome.candidates.size()) == 5, "pair " + r.pair + " lacks 5 candidates");
        require(fs::exists(r.report.scatter_png), "scatter image missing for " + r.pair);
        require(fs::exists(r.report.points_csv), "points CSV missing for " + r.pair);

        double lo = 1.0, hi = 0.0;
        for (const auto& c : r.outcome.candidates) {
            require(c.accuracy.has_value(), "candidate without accuracy");
            lo = std::min(lo, *c.accuracy);
            hi = std::max(hi, *c.accuracy);
        }
        if ((hi - lo) >= 0.02) any_spread = true;
        if (std::isfinite(r.report.spearman)) any_finite = true;
        log << "    " << r.pair << ": accuracy spread " << (hi - lo) * 100 << " points, spearman "
            << r.report.spearman << "\n";
    }
    require(any_finite, "no pair produced a finite Spearman correlation");
    require(any_spread, "no pair showed an accuracy spread of at least 2 points");

    const double elapsed = now_seconds() - t0;
    log << "    total " << static_cast<int>(elapsed) << "s\n";
    require(elapsed < 1200.0, "runtime exceeds 20 min");
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    struct Criterion {
        int id;
        const char* name;
        std::function<bool(std::ostream&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "Bhattacharyya oracle (1000 pairs, 1e-9)", criterion1_bhattacharyya},
        {2, "SND oracle (100 matrices, 1e-6)", criterion2_snd},
        {3, "freeze exactness (LP body, PL-IM head)", criterion3_freeze},
        {4, "SAM correctness (rho=0 bit-identity, analytic example)", criterion4_sam},
        {5, "protocol determinism (splits, samplers, full runs)", criterion5_determinism},
        {6, "metrics oracle (accuracy, per-class, aggregation)", criterion6_metrics},
        {7, "scenario generators (OoD partition, RSUT reversal)", criterion7_scenarios},
        {8, "desk-scale end-to-end directional study", criterion8_endtoend},
        {9, "sensitivity harness (SND-vs-accuracy sweep)", criterion9_sensitivity},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::ostringstream detail;
        bool ok = false;
        std::string error;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            error = e.what();
        }
        if (ok) {
            std::cout << "[PASS] criterion " << c.id << ": " << c.name << "\n" << detail.str();
        } else {
            ++failures;
            std::cout << "[FAIL] criterion " << c.id << ": " << c.name << " — " << error << "\n" << detail.str();
        }
        std::cout.flush();
    }
    if (only == 0 || only == 10) {
        std::cout << "[SKIP] criterion 10: OfficeHome full-scale reproduction (optional; needs OfficeHome data, a "
                     "pretrained 50-layer backbone and GPU-scale compute; not part of CI)\n";
    }
    std::cout << (failures == 0 ? "acceptance: all criteria passed\n"
                                : "acceptance: " + std::to_string(failures) + " criterion(s) failed\n");
    return failures == 0 ? 0 : 1;
}
