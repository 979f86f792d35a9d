#include "fssfda/runner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fssfda/batches.hpp"
#include "fssfda/digest.hpp"
#include "fssfda/error.hpp"
#include "fssfda/inference.hpp"
#include "fssfda/rng.hpp"

using nlohmann::json;

namespace fs = std::filesystem;

namespace fssfda {

EnvironmentFingerprint EnvironmentFingerprint::current() {
    EnvironmentFingerprint env;
#if defined(__linux__)
    env.platform = "linux";
#elif defined(__APPLE__)
    env.platform = "darwin";
#elif defined(_WIN32)
    env.platform = "windows";
#else
    env.platform = "unknown";
#endif
#if defined(__x86_64__) || defined(_M_X64)
    env.platform += "-x86_64";
#elif defined(__aarch64__)
    env.platform += "-aarch64";
#endif
#if defined(__VERSION__)
    env.compiler = __VERSION__;
#else
    env.compiler = "unknown";
#endif
    env.artifact_version = "0.1.0";
    return env;
}

std::string RunRecord::to_json() const {
    json j;
    j["config_digest"] = config_digest;
    j["result"] = json::parse(result.to_json());
    j["train_log"] = train_log;
    j["checkpoint"] = checkpoint;
    j["environment"] = {{"platform", env.platform}, {"compiler", env.compiler}, {"version", env.artifact_version}};
    return j.dump(2);
}

RunRecord RunRecord::from_json(const std::string& text) {
    json j = json::parse(text);
    RunRecord r;
    r.config_digest = j.at("config_digest").get<std::string>();
    r.result = PairResult::from_json(j.at("result").dump());
    r.train_log = j.value("train_log", std::string());
    r.checkpoint = j.value("checkpoint", std::string());
    if (j.contains("environment")) {
        r.env.platform = j["environment"].value("platform", std::string());
        r.env.compiler = j["environment"].value("compiler", std::string());
        r.env.artifact_version = j["environment"].value("version", std::string());
    }
    return r;
}

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

// A SplitPlan whose train side is the entire dataset, for pools that were
// already split upstream (the OoD generator splits internally).
SplitPlan all_train_plan(const DomainDataset& ds, std::uint64_t seed) {
    SplitPlan plan;
    plan.seed = seed;
    plan.ratio = 1.0;
    for (const auto& ex : ds.examples) plan.train_ids.push_back(ex.example_id);
    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    return plan;
}

// Everything one (pair, seed) cell trains and evaluates on.
struct CellData {
    DomainDataset source_train;
    DomainDataset target_pool;       // labeled pool the few-shot sampler draws from
    SplitPlan pool_plan;             // plan over target_pool
    DomainDataset target_unlabeled;  // PL-IM pool (contaminated under OoD)
    DomainDataset target_test;
    int n_classes = 0;
};

CellData build_cell_data(const ExperimentConfig& config, const DomainDataset& source_ds,
                         const DomainDataset& target_ds, std::uint64_t run_seed) {
    CellData cell;
    switch (config.scenario.kind) {
        case ScenarioKind::Clean: {
            cell.source_train = source_ds;
            cell.target_pool = target_ds;
            cell.pool_plan = split_train_test(target_ds, config.split_ratio, run_seed);
            cell.target_unlabeled = subset_by_ids(target_ds, cell.pool_plan.train_ids);
            cell.target_test = subset_by_ids(target_ds, cell.pool_plan.test_ids);
            cell.n_classes = target_ds.num_classes();
            break;
        }
        case ScenarioKind::Ood: {
            std::vector<int> known = config.scenario.known_classes;
            if (known.empty()) {
                known = choose_known_classes(source_ds.num_classes(), config.scenario.n_known,
                                             config.scenario.seed);
            }
            OodScenario sc = make_ood_scenario(source_ds, target_ds, known, run_seed, config.split_ratio);
            cell.source_train = std::move(sc.source_known);
            cell.target_pool = std::move(sc.target_train_clean);
            cell.pool_plan = all_train_plan(cell.target_pool, run_seed);
            cell.target_unlabeled = std::move(sc.target_train_ood);
            cell.target_test = std::move(sc.target_test_known);
            cell.n_classes = static_cast<int>(known.size());
            break;
        }
        case ScenarioKind::Imbalance: {
            RsutPair pair = make_rsut_imbalance(source_ds, target_ds, config.scenario.imbalance_factor,
                                                config.scenario.seed);
            cell.source_train = std::move(pair.source_sub);
            cell.target_pool = std::move(pair.target_sub);
            cell.pool_plan = split_train_test(cell.target_pool, config.split_ratio, run_seed);
            cell.target_unlabeled = subset_by_ids(cell.target_pool, cell.pool_plan.train_ids);
            cell.target_test = subset_by_ids(cell.target_pool, cell.pool_plan.test_ids);
            cell.n_classes = cell.target_pool.num_classes();
            break;
        }
    }
    return cell;
}

// Source checkpoints are cached by everything that determines them.
fs::path source_checkpoint_dir(const ExperimentConfig& config, const std::string& source_domain,
                               std::uint64_t seed) {
    json key;
    key["source_domain"] = source_domain;
    key["scenario"] = json::parse(config.scenario.to_json());
    key["model"] = json::parse(config.model.to_json());
    key["seed"] = seed;
    key["epochs"] = config.source_train.epochs;
    key["lr"] = config.source_train.lr;
    key["batch_size"] = config.source_train.batch_size;
    key["label_smoothing"] = config.source_train.label_smoothing;
    key["augmentation"] = config.source_train.augmentation;
    const std::string digest = sha256_hex(key.dump());
    return config.output_dir / "checkpoints" / (sanitize(source_domain) + "_" + digest.substr(0, 16));
}

std::unique_ptr<AdaptableModel> ensure_source_checkpoint(const ExperimentConfig& config,
                                                         const DomainDataset& source_train,
                                                         std::uint64_t seed, const fs::path& dir,
                                                         std::ostream& log) {
    if (fs::exists(dir / "manifest.json")) {
        return load_checkpoint(dir).model;
    }
    ModelSpec spec = config.model;
    spec.n_classes = source_train.num_classes();
    spec.init_seed = mix_seed(seed, "source-init");
    auto model = build_model(spec);

    SourceTrainConfig st = config.source_train;
    st.seed = mix_seed(seed, "source-train");
    log << "  training source checkpoint for '" << source_train.domain_id << "' (seed " << seed << ", "
        << st.epochs << " epochs)\n";
    SourceTrainStats stats = train_source(*model, source_train, st);

    CheckpointManifest manifest;
    manifest.spec = model->spec();
    manifest.spec.pretrained_origin = "source_checkpoint";
    manifest.vocabulary = source_train.vocabulary;
    manifest.source_domain = source_train.domain_id;
    manifest.train_seed = seed;
    manifest.source_train_accuracy = stats.train_accuracy;
    save_checkpoint(*model, dir, manifest);
    log << "    source-train accuracy " << stats.train_accuracy << "\n";
    return model;
}

PairResult evaluate_cell(AdaptableModel& model, const CellData& cell, const ExperimentConfig& config,
                         const std::string& source, const std::string& target, const std::string& method_name,
                         int shots, std::uint64_t seed) {
    ImageBank test_bank(cell.target_test, {});
    std::vector<int> preds = predict_labels(model, test_bank);
    PairResult result;
    result.source_id = source;
    result.target_id = target;
    result.scenario = to_string(config.scenario.kind);
    result.method = method_name;
    result.shots = shots;
    result.seed = seed;
    result.accuracy = accuracy(preds, test_bank.labels());
    result.per_class_accuracy = per_class_accuracy(preds, test_bank.labels(), cell.n_classes);
    result.n_test = test_bank.size();
    return result;
}

struct PlannedCell {
    std::string source;
    std::string target;
    std::size_t method_index;
    int shots;
    std::uint64_t seed;

    std::string name(const ExperimentConfig& config) const {
        const auto& recipe = config.methods[method_index];
        std::ostringstream os;
        os << to_string(config.scenario.kind) << " " << source << "->" << target << " " << recipe.display_name()
           << " " << shots << "-shot seed " << seed;
        return os.str();
    }
};

std::vector<PlannedCell> plan_cells(const ExperimentConfig& config) {
    std::vector<PlannedCell> cells;
    for (const auto& source : config.domains) {
        for (const auto& target : config.domains) {
            if (source == target) continue;
            for (std::size_t m = 0; m < config.methods.size(); ++m) {
                const auto& recipe = config.methods[m];
                const std::vector<int>& shot_list =
                    recipe.shots_override.empty() ? config.shots : recipe.shots_override;
                for (int k : shot_list) {
                    for (std::uint64_t seed : config.seeds) {
                        cells.push_back({source, target, m, k, seed});
                    }
                }
            }
        }
    }
    return cells;
}

}  // namespace

MatrixSummary run_matrix(const ExperimentConfig& config, bool dry_run, std::ostream& log) {
    const auto cells = plan_cells(config);
    MatrixSummary summary;

    if (dry_run) {
        log << "dry run: " << cells.size() << " cells\n";
        for (const auto& cell : cells) log << "  " << cell.name(config) << "\n";
        return summary;
    }

    std::map<std::string, DomainDataset> datasets;
    for (const auto& d : config.domains) datasets.emplace(d, scan_image_folder(config.data_root, d));

    // (pair, seed) -> CellData, built once and shared across methods/shots.
    std::map<std::string, CellData> cell_data;
    auto data_for = [&](const std::string& source, const std::string& target, std::uint64_t seed) -> CellData& {
        const std::string key = source + "|" + target + "|" + std::to_string(seed);
        auto it = cell_data.find(key);
        if (it == cell_data.end()) {
            it = cell_data
                     .emplace(key, build_cell_data(config, datasets.at(source), datasets.at(target), seed))
                     .first;
        }
        return it->second;
    };

    for (const auto& cell : cells) {
        const auto& recipe_template = config.methods[cell.method_index];
        const std::string method_name = recipe_template.display_name();
        const fs::path record_dir =
            config.output_dir / to_string(config.scenario.kind) / (cell.source + "__" + cell.target);
        const std::string basename = sanitize(method_name) + "_" + std::to_string(cell.shots) + "shot_seed" +
                                     std::to_string(cell.seed);
        const fs::path record_path = record_dir / (basename + ".json");

        if (fs::exists(record_path)) {
            try {
                RunRecord existing = RunRecord::from_json(read_file(record_path));
                if (existing.config_digest == config.digest) {
                    ++summary.skipped;
                    summary.records.push_back(std::move(existing));
                    continue;
                }
            } catch (const std::exception&) {
                // Unreadable record: fall through and regenerate it.
            }
        }

        try {
            CellData& data = data_for(cell.source, cell.target, cell.seed);
            const fs::path ckpt_dir = source_checkpoint_dir(config, cell.source, cell.seed);
            auto model = ensure_source_checkpoint(config, data.source_train, cell.seed, ckpt_dir, log);

            AdaptationRecipe recipe = recipe_template;
            recipe.seed = cell.seed;

            FewShotSet fewshot;
            bool have_fewshot = false;
            if (cell.shots > 0) {
                fewshot = sample_few_shot(data.target_pool, data.pool_plan, cell.shots, cell.seed);
                have_fewshot = true;
            }

            TrainLog train_log;
            if (recipe.iterations > 0) {
                if (recipe.method == Method::PL_IM) {
                    train_log = pseudo_label_adapt(*model, data.target_unlabeled, recipe);
                } else {
                    if (!have_fewshot) {
                        throw TrainingError("method " + method_name + " needs shots > 0 when iterations > 0");
                    }
                    train_log = adapt(*model, data.target_pool, &fewshot, recipe);
                }
            }

            PairResult result = evaluate_cell(*model, data, config, cell.source, cell.target, method_name,
                                              cell.shots, cell.seed);

            RunRecord record;
            record.config_digest = config.digest;
            record.result = result;
            record.env = EnvironmentFingerprint::current();
            record.checkpoint = fs::relative(ckpt_dir, config.output_dir).string();
            if (recipe.iterations > 0) {
                const fs::path log_path = record_dir / (basename + ".log.jsonl");
                fs::create_directories(record_dir);
                train_log.save_jsonl(log_path);
                record.train_log = fs::relative(log_path, config.output_dir).string();
            }
            write_file(record_path, record.to_json() + "\n");
            ++summary.executed;
            log << "ran " << cell.name(config) << ": acc " << result.accuracy << ", per-class "
                << result.per_class_accuracy << "\n";
            summary.records.push_back(std::move(record));
        } catch (const std::exception& e) {
            ++summary.failed;
            summary.failures.push_back(cell.name(config) + ": " + e.what());
            log << "FAILED " << cell.name(config) << ": " << e.what() << "\n";
        }
    }

    if (!summary.failures.empty()) {
        log << summary.failed << " cell(s) failed:\n";
        for (const auto& f : summary.failures) log << "  " << f << "\n";
    }
    return summary;
}

std::vector<SensitivityResult> run_sensitivity(const ExperimentConfig& config, const SweepGrid& grid,
                                               std::ostream& log) {
    std::map<std::string, DomainDataset> datasets;
    for (const auto& d : config.domains) datasets.emplace(d, scan_image_folder(config.data_root, d));

    // The swept method: first PL-IM recipe if present, else the first recipe.
    std::size_t method_index = 0;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        if (config.methods[m].method == Method::PL_IM) {
            method_index = m;
            break;
        }
    }
    const AdaptationRecipe& base = config.methods[method_index];
    const std::uint64_t seed = config.seeds.front();

    std::vector<SensitivityResult> results;
    for (const auto& source : config.domains) {
        for (const auto& target : config.domains) {
            if (source == target) continue;
            log << "sensitivity sweep " << source << "->" << target << " (" << to_string(base.method) << ")\n";
            CellData data = build_cell_data(config, datasets.at(source), datasets.at(target), seed);
            const fs::path ckpt_dir = source_checkpoint_dir(config, source, seed);
            ensure_source_checkpoint(config, data.source_train, seed, ckpt_dir, log);

            ImageBank test_bank(data.target_test, {});
            FewShotSet fewshot;
            if (base.method != Method::PL_IM) {
                fewshot = sample_few_shot(data.target_pool, data.pool_plan, config.shots.front(), seed);
            }

            auto run_candidate = [&](double lr) -> CandidateEval {
                auto model = load_checkpoint(ckpt_dir).model;
                AdaptationRecipe recipe = base;
                recipe.lr = lr;
                recipe.seed = seed;
                if (config.sweep_iterations > 0) recipe.iterations = config.sweep_iterations;
                if (recipe.method == Method::PL_IM) {
                    pseudo_label_adapt(*model, data.target_unlabeled, recipe);
                } else {
                    adapt(*model, data.target_pool, &fewshot, recipe);
                }
                CandidateEval eval;
                eval.criterion_value = snd_score(extract_features(*model, test_bank));
                eval.accuracy = accuracy(predict_labels(*model, test_bank), test_bank.labels());
                log << "  lr " << lr << ": snd " << eval.criterion_value << ", acc " << *eval.accuracy << "\n";
                return eval;
            };

            SensitivityResult res;
            res.pair = source + "->" + target;
            res.outcome = sweep(run_candidate, base.lr, grid, Criterion::Snd);

            const fs::path out_dir = config.output_dir / "sensitivity";
            fs::create_directories(out_dir);
            const fs::path prefix = out_dir / (sanitize(source) + "__" + sanitize(target));
            res.report = snd_accuracy_report(res.outcome, prefix);
            write_file(prefix.string() + ".outcome.json", res.outcome.to_json() + "\n");
            log << "  spearman(SND, accuracy) = " << res.report.spearman << "\n";
            results.push_back(std::move(res));
        }
    }
    return results;
}

PretrainingComparison run_pretraining_comparison(const ExperimentConfig& config, std::ostream& log) {
    std::map<std::string, DomainDataset> datasets;
    for (const auto& d : config.domains) datasets.emplace(d, scan_image_folder(config.data_root, d));

    // Hyperparameters follow the first few-shot recipe in the config.
    AdaptationRecipe base;
    bool found = false;
    for (const auto& m : config.methods) {
        if (m.method != Method::PL_IM) {
            base = m;
            found = true;
            break;
        }
    }
    if (!found) throw ConfigError("pretraining comparison needs a few-shot recipe in 'methods'");

    const Method kMethods[] = {Method::LP, Method::FT, Method::LP_FT};
    std::vector<PairResult> results;

    for (const auto& source : config.domains) {
        for (const auto& target : config.domains) {
            if (source == target) continue;
            for (std::uint64_t seed : config.seeds) {
                CellData data = build_cell_data(config, datasets.at(source), datasets.at(target), seed);
                const fs::path ckpt_dir = source_checkpoint_dir(config, source, seed);
                ensure_source_checkpoint(config, data.source_train, seed, ckpt_dir, log);

                // "No adapt": the source checkpoint evaluated directly.
                {
                    auto model = load_checkpoint(ckpt_dir).model;
                    results.push_back(evaluate_cell(*model, data, config, source, target, "No adapt", 0, seed));
                }

                for (int k : config.shots) {
                    FewShotSet fewshot = sample_few_shot(data.target_pool, data.pool_plan, k, seed);
                    for (Method method : kMethods) {
                        for (const char* origin : {"source", "generic"}) {
                            std::unique_ptr<AdaptableModel> model;
                            if (std::string(origin) == "source") {
                                model = load_checkpoint(ckpt_dir).model;
                            } else {
                                ModelSpec spec = config.model;
                                spec.pretrained_origin = "generic_imagenet";
                                spec.n_classes = data.n_classes;
                                spec.init_seed = mix_seed(seed, "generic-init");
                                model = build_model(spec);
                                model->replace_head(data.n_classes);
                            }
                            AdaptationRecipe recipe = base;
                            recipe.method = method;
                            recipe.seed = seed;
                            recipe.label.clear();
                            if (recipe.iterations > 0) adapt(*model, data.target_pool, &fewshot, recipe);
                            const std::string row = std::string(origin) + "/" + to_string(method);
                            results.push_back(
                                evaluate_cell(*model, data, config, source, target, row, k, seed));
                            log << row << " " << k << "-shot " << source << "->" << target << " seed " << seed
                                << ": acc " << results.back().accuracy << "\n";
                        }
                    }
                }
            }
        }
    }

    PretrainingComparison out;
    out.table = aggregate(results, config.seeds, TableMetric::Accuracy);
    out.rendered_text = render_table_text(out.table);
    out.rendered_csv = render_table_csv(out.table);
    fs::create_directories(config.output_dir);
    write_file(config.output_dir / "pretraining_comparison.txt", out.rendered_text);
    write_file(config.output_dir / "pretraining_comparison.csv", out.rendered_csv);
    log << out.rendered_text;
    return out;
}

std::vector<ReportTables> report_tables(const fs::path& output_dir) {
    // scenario -> records
    std::map<std::string, std::vector<PairResult>> by_scenario;
    std::map<std::string, std::set<std::uint64_t>> seeds_by_scenario;
    if (!fs::exists(output_dir)) throw EvaluationError("report: output dir not found: " + output_dir.string());

    for (const auto& entry : fs::recursive_directory_iterator(output_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        RunRecord record;
        try {
            record = RunRecord::from_json(read_file(entry.path()));
        } catch (const std::exception&) {
            continue;  // not a run record (sweep outcome, manifest, ...)
        }
        if (record.result.scenario.empty()) continue;
        by_scenario[record.result.scenario].push_back(record.result);
        seeds_by_scenario[record.result.scenario].insert(record.result.seed);
    }
    if (by_scenario.empty()) throw EvaluationError("report: no run records under " + output_dir.string());

    std::vector<ReportTables> tables;
    for (auto& [scenario, results] : by_scenario) {
        std::vector<std::uint64_t> seeds(seeds_by_scenario[scenario].begin(), seeds_by_scenario[scenario].end());
        ReportTables t;
        t.scenario = scenario;
        t.accuracy = aggregate(results, seeds, TableMetric::Accuracy);
        t.per_class = aggregate(results, seeds, TableMetric::PerClassAccuracy);
        tables.push_back(std::move(t));
    }
    return tables;
}

void export_generic_weights(const AdaptableModel& model, const fs::path& weights_dir) {
    fs::create_directories(weights_dir);
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto* p : model.body().params) tensors.emplace_back(p->name, &p->value);
    write_tensor_archive(weights_dir / (model.spec().backbone_id + ".tensors"), tensors);
}

}  // namespace fssfda
