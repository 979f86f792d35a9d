// fssfda: config-driven experiment runner for few-shot source-free domain
// adaptation studies (clean / OoD / label-shift scenarios, lr sweeps,
// pretraining-origin comparisons).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fssfda/adaptation.hpp"
#include "fssfda/batches.hpp"
#include "fssfda/config.hpp"
#include "fssfda/distributions.hpp"
#include "fssfda/error.hpp"
#include "fssfda/inference.hpp"
#include "fssfda/metrics.hpp"
#include "fssfda/plot.hpp"
#include "fssfda/runner.hpp"
#include "fssfda/scenario.hpp"
#include "fssfda/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fssfda;

namespace {

ExperimentConfig load_config_or_die(const std::string& path, std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig cfg = load_experiment_config(path);
    if (has_seed) cfg.seeds = {seed_override};
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

int cmd_ingest(const std::string& root, std::vector<std::string> domains) {
    if (domains.empty()) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory()) domains.push_back(entry.path().filename().string());
        }
        std::sort(domains.begin(), domains.end());
    }
    if (domains.empty()) throw IngestionError("no domain directories under " + root);

    std::vector<DomainDataset> datasets;
    for (const auto& d : domains) {
        DomainDataset ds = scan_image_folder(root, d);
        std::cout << "domain " << d << ": " << ds.size() << " examples, " << ds.num_classes() << " classes\n";
        auto counts = ds.class_counts();
        for (int c = 0; c < ds.num_classes(); ++c) {
            std::cout << "  " << ds.vocabulary[static_cast<std::size_t>(c)] << ": "
                      << counts[static_cast<std::size_t>(c)] << "\n";
        }
        datasets.push_back(std::move(ds));
    }
    if (datasets.size() >= 2) {
        const double shift = average_pairwise_shift(datasets);
        std::cout << "average pairwise Bhattacharyya distance: " << shift << "\n";
    }
    return 0;
}

int cmd_train_source(const ExperimentConfig& cfg, const std::string& only_domain) {
    for (const auto& domain : cfg.domains) {
        if (!only_domain.empty() && domain != only_domain) continue;
        DomainDataset ds = scan_image_folder(cfg.data_root, domain);
        for (std::uint64_t seed : cfg.seeds) {
            ModelSpec spec = cfg.model;
            spec.n_classes = ds.num_classes();
            spec.init_seed = mix_seed(seed, "source-init");
            auto model = build_model(spec);
            SourceTrainConfig st = cfg.source_train;
            st.seed = mix_seed(seed, "source-train");
            std::cout << "training source model on " << domain << " (seed " << seed << ")...\n";
            SourceTrainStats stats = train_source(*model, ds, st);
            std::cout << "  iterations " << stats.iterations << ", train accuracy " << stats.train_accuracy
                      << "\n";

            CheckpointManifest manifest;
            manifest.spec = model->spec();
            manifest.spec.pretrained_origin = "source_checkpoint";
            manifest.vocabulary = ds.vocabulary;
            manifest.source_domain = domain;
            manifest.train_seed = seed;
            manifest.source_train_accuracy = stats.train_accuracy;
            const fs::path dir = cfg.output_dir / "source_models" / (domain + "_seed" + std::to_string(seed));
            save_checkpoint(*model, dir, manifest);
            std::cout << "  saved " << dir.string() << "\n";
        }
    }
    return 0;
}

int cmd_scenario(const ExperimentConfig& cfg, const std::string& kind, const std::string& out_dir) {
    const fs::path out = out_dir.empty() ? cfg.output_dir / "scenarios" : fs::path(out_dir);
    fs::create_directories(out);
    std::vector<DomainDataset> datasets;
    for (const auto& d : cfg.domains) datasets.push_back(scan_image_folder(cfg.data_root, d));

    if (kind == "ood") {
        const int n_known = cfg.scenario.n_known > 0 ? cfg.scenario.n_known : datasets[0].num_classes() / 2;
        for (std::size_t s = 0; s < datasets.size(); ++s) {
            for (std::size_t t = 0; t < datasets.size(); ++t) {
                if (s == t) continue;
                OodScenario sc = make_ood_scenario(datasets[s], datasets[t], n_known, cfg.scenario.seed,
                                                   cfg.split_ratio);
                std::ostringstream os;
                os << "{\n  \"kind\": \"ood\",\n  \"n_known\": " << n_known << ",\n  \"known_classes\": [";
                for (std::size_t i = 0; i < sc.known_classes.size(); ++i) {
                    os << (i ? ", " : "") << sc.known_classes[i];
                }
                os << "],\n  \"target_split\": " << sc.target_split.to_json() << "\n}\n";
                const fs::path file = out / ("ood_" + datasets[s].domain_id + "__" + datasets[t].domain_id + ".json");
                write_text(file, os.str());
                std::cout << "wrote " << file.string() << " (clean train " << sc.target_train_clean.size()
                          << ", ood train " << sc.target_train_ood.size() << ", test "
                          << sc.target_test_known.size() << ")\n";
            }
        }
        return 0;
    }
    if (kind == "rsut") {
        for (std::size_t s = 0; s < datasets.size(); ++s) {
            for (std::size_t t = 0; t < datasets.size(); ++t) {
                if (s == t) continue;
                RsutPair pair =
                    make_rsut_imbalance(datasets[s], datasets[t], cfg.scenario.imbalance_factor, cfg.scenario.seed);
                std::ostringstream os;
                os << "{\n  \"kind\": \"rsut\",\n  \"factor\": " << cfg.scenario.imbalance_factor
                   << ",\n  \"source_counts\": [";
                auto sc = pair.source_sub.class_counts();
                auto tc = pair.target_sub.class_counts();
                for (std::size_t i = 0; i < sc.size(); ++i) os << (i ? ", " : "") << sc[i];
                os << "],\n  \"target_counts\": [";
                for (std::size_t i = 0; i < tc.size(); ++i) os << (i ? ", " : "") << tc[i];
                os << "]\n}\n";
                const fs::path file =
                    out / ("rsut_" + datasets[s].domain_id + "__" + datasets[t].domain_id + ".json");
                write_text(file, os.str());
                std::cout << "wrote " << file.string() << "\n";
            }
        }
        return 0;
    }
    throw ConfigError("scenario kind must be 'ood' or 'rsut', got '" + kind + "'");
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_root, const std::string& domain,
                 bool use_test_split, double ratio, std::uint64_t seed) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    DomainDataset ds = scan_image_folder(data_root, domain);
    if (ds.num_classes() != loaded.model->spec().n_classes) {
        throw EvaluationError("checkpoint has " + std::to_string(loaded.model->spec().n_classes) +
                              " classes but domain '" + domain + "' has " + std::to_string(ds.num_classes()));
    }
    DomainDataset eval_ds = ds;
    if (use_test_split) {
        SplitPlan plan = split_train_test(ds, ratio, seed);
        eval_ds = subset_by_ids(ds, plan.test_ids);
    }
    ImageBank bank(eval_ds, {});
    auto preds = predict_labels(*loaded.model, bank);
    std::cout << "domain " << domain << " (" << bank.size() << " examples)\n";
    std::cout << "accuracy: " << accuracy(preds, bank.labels()) << "\n";
    std::cout << "per-class accuracy: " << per_class_accuracy(preds, bank.labels(), ds.num_classes()) << "\n";
    return 0;
}

int cmd_report(const std::string& out_dir) {
    auto tables = report_tables(out_dir);
    for (const auto& t : tables) {
        std::cout << "== scenario: " << t.scenario << " — accuracy ==\n";
        std::cout << render_table_text(t.accuracy) << "\n";
        std::cout << "== scenario: " << t.scenario << " — per-class accuracy ==\n";
        std::cout << render_table_text(t.per_class) << "\n";
        write_text(fs::path(out_dir) / ("table_" + t.scenario + "_accuracy.csv"), render_table_csv(t.accuracy));
        write_text(fs::path(out_dir) / ("table_" + t.scenario + "_per_class.csv"), render_table_csv(t.per_class));
    }
    std::cout << "CSV tables written under " << out_dir << "\n";
    return 0;
}

int cmd_plot_label_dist(const std::string& root, std::vector<std::string> domains, const std::string& out_file) {
    if (domains.empty()) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory()) domains.push_back(entry.path().filename().string());
        }
        std::sort(domains.begin(), domains.end());
    }
    std::vector<std::pair<std::string, LabelDistribution>> dists;
    for (const auto& d : domains) {
        DomainDataset ds = scan_image_folder(root, d);
        dists.emplace_back(d, empirical_label_distribution(ds));
    }
    plot_label_distributions(out_file, dists);
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot source-free domain adaptation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool dry_run = false;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "scan and validate an image-folder dataset");
    std::string ingest_root;
    std::vector<std::string> ingest_domains;
    ingest->add_option("root", ingest_root, "dataset root (<root>/<domain>/<class>/<image>)")->required();
    ingest->add_option("--domain", ingest_domains, "domain(s) to scan (default: all)");

    // train-source
    auto* train_src = app.add_subcommand("train-source", "train and save source checkpoints");
    std::string train_domain;
    train_src->add_option("--config", config_path, "experiment config JSON")->required();
    train_src->add_option("--domain", train_domain, "train only this domain");
    auto* ts_seed = train_src->add_option("--seed", seed_override, "override the config seed list");

    // adapt
    auto* adapt_cmd = app.add_subcommand("adapt", "run the full (pair x method x shot x seed) matrix");
    adapt_cmd->add_option("--config", config_path, "experiment config JSON")->required();
    adapt_cmd->add_flag("--dry-run", dry_run, "print the resolved run matrix without training");
    auto* ad_seed = adapt_cmd->add_option("--seed", seed_override, "override the config seed list");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "learning-rate sensitivity sweep with SND reporting");
    std::string grid_mode = "multiplier";
    sweep_cmd->add_option("--config", config_path, "experiment config JSON")->required();
    sweep_cmd->add_option("--grid", grid_mode, "grid mode: multiplier (0.1..10 x base lr) or absolute");
    auto* sw_seed = sweep_cmd->add_option("--seed", seed_override, "override the config seed list");

    // scenario
    auto* scenario_cmd = app.add_subcommand("scenario", "generate OoD / RSUT scenario manifests");
    std::string scenario_kind, scenario_out;
    scenario_cmd->add_option("--config", config_path, "experiment config JSON")->required();
    scenario_cmd->add_option("--kind", scenario_kind, "ood or rsut")->required();
    scenario_cmd->add_option("--out", scenario_out, "output directory (default <output_dir>/scenarios)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a domain (no adaptation)");
    std::string eval_ckpt, eval_root, eval_domain;
    bool eval_test_split = false;
    double eval_ratio = 0.8;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
    eval_cmd->add_option("--data", eval_root, "dataset root")->required();
    eval_cmd->add_option("--domain", eval_domain, "domain to evaluate")->required();
    eval_cmd->add_flag("--test-split", eval_test_split, "evaluate on the held-out test side of an 8:2 split");
    eval_cmd->add_option("--ratio", eval_ratio, "train fraction for --test-split");
    eval_cmd->add_option("--seed", seed_override, "split seed for --test-split");

    // report
    auto* report_cmd = app.add_subcommand("report", "aggregate run records into tables");
    std::string report_dir;
    report_cmd->add_option("outdir", report_dir, "experiment output directory")->required();

    // plot-label-dist
    auto* plot_cmd = app.add_subcommand("plot-label-dist", "per-domain class-frequency bar chart");
    std::string plot_root, plot_out = "label_dist.png";
    std::vector<std::string> plot_domains;
    plot_cmd->add_option("root", plot_root, "dataset root")->required();
    plot_cmd->add_option("--domain", plot_domains, "domain(s) to plot (default: all)");
    plot_cmd->add_option("--out", plot_out, "output PNG path");

    // pretraining comparison
    auto* pretrain_cmd =
        app.add_subcommand("compare-pretraining", "LP/FT/LP-FT for generic vs source pretrained models");
    pretrain_cmd->add_option("--config", config_path, "experiment config JSON")->required();

    // make-synthetic
    auto* synth_cmd = app.add_subcommand("make-synthetic", "generate the in-tree two-domain synthetic dataset");
    std::string synth_out;
    int synth_classes = 4, synth_per_class = 60, synth_size = 32;
    std::uint64_t synth_seed = 0;
    std::string synth_factor = "color";
    synth_cmd->add_option("--out", synth_out, "output root")->required();
    synth_cmd->add_option("--classes", synth_classes, "number of classes");
    synth_cmd->add_option("--per-class", synth_per_class, "images per class per domain");
    synth_cmd->add_option("--size", synth_size, "image side length");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--label-factor", synth_factor, "what the label encodes: color or position");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(ingest_root, ingest_domains);
        if (*train_src) {
            return cmd_train_source(load_config_or_die(config_path, seed_override, !ts_seed->empty()),
                                    train_domain);
        }
        if (*adapt_cmd) {
            ExperimentConfig cfg = load_config_or_die(config_path, seed_override, !ad_seed->empty());
            MatrixSummary summary = run_matrix(cfg, dry_run, std::cout);
            std::cout << "executed " << summary.executed << ", skipped " << summary.skipped << ", failed "
                      << summary.failed << "\n";
            return summary.failed == 0 ? 0 : 1;
        }
        if (*sweep_cmd) {
            ExperimentConfig cfg = load_config_or_die(config_path, seed_override, !sw_seed->empty());
            SweepGrid grid;
            if (grid_mode == "multiplier") {
                grid = SweepGrid::multiplier_default();
            } else if (grid_mode == "absolute") {
                grid = SweepGrid::absolute_default();
            } else {
                throw ConfigError("--grid must be 'multiplier' or 'absolute'");
            }
            auto results = run_sensitivity(cfg, grid, std::cout);
            for (const auto& r : results) {
                std::cout << r.pair << ": chosen lr " << r.outcome.candidates[r.outcome.chosen].lr
                          << " by SND, spearman " << r.report.spearman << "\n";
            }
            return 0;
        }
        if (*scenario_cmd) {
            return cmd_scenario(load_config_or_die(config_path, seed_override, false), scenario_kind, scenario_out);
        }
        if (*eval_cmd) {
            return cmd_evaluate(eval_ckpt, eval_root, eval_domain, eval_test_split, eval_ratio, seed_override);
        }
        if (*report_cmd) return cmd_report(report_dir);
        if (*plot_cmd) return cmd_plot_label_dist(plot_root, plot_domains, plot_out);
        if (*pretrain_cmd) {
            ExperimentConfig cfg = load_config_or_die(config_path, seed_override, false);
            run_pretraining_comparison(cfg, std::cout);
            return 0;
        }
        if (*synth_cmd) {
            SyntheticConfig sc;
            sc.num_classes = synth_classes;
            sc.per_class = synth_per_class;
            sc.image_size = synth_size;
            sc.seed = synth_seed;
            if (synth_factor == "position") {
                sc.label_factor = SyntheticLabelFactor::Position;
            } else if (synth_factor != "color") {
                throw ConfigError("--label-factor must be 'color' or 'position'");
            }
            generate_synthetic_dataset(synth_out, sc);
            std::cout << "wrote synthetic dataset to " << synth_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
