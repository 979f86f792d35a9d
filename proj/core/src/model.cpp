#include "fssfda/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fssfda/batches.hpp"
#include "fssfda/error.hpp"
#include "fssfda/optim.hpp"
#include "fssfda/rng.hpp"

using nlohmann::json;

namespace fssfda {

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

void ModelSpec::validate() const {
    if (!backbone_registered(backbone_id)) throw ModelError("unknown backbone_id: '" + backbone_id + "'");
    if (bottleneck_dim < 1) throw ModelError("bottleneck_dim must be >= 1");
    if (n_classes < 2) throw ModelError("n_classes must be >= 2");
    if (pretrained_origin != "random" && pretrained_origin != "generic_imagenet" &&
        pretrained_origin != "source_checkpoint") {
        throw ModelError("unknown pretrained_origin: '" + pretrained_origin + "'");
    }
}

std::string ModelSpec::to_json() const {
    json j;
    j["backbone_id"] = backbone_id;
    j["bottleneck_dim"] = bottleneck_dim;
    j["n_classes"] = n_classes;
    j["pretrained_origin"] = pretrained_origin;
    j["init_seed"] = init_seed;
    j["input_size"] = input_size;
    return j.dump(2);
}

ModelSpec ModelSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    ModelSpec spec;
    spec.backbone_id = j.value("backbone_id", std::string("small_cnn"));
    spec.bottleneck_dim = j.value("bottleneck_dim", 256);
    spec.n_classes = j.at("n_classes").get<int>();
    spec.pretrained_origin = j.value("pretrained_origin", std::string("random"));
    spec.init_seed = j.value("init_seed", 0ULL);
    spec.input_size = j.value("input_size", 0);
    return spec;
}

// ---------------------------------------------------------------------------
// ParamGroup
// ---------------------------------------------------------------------------

void ParamGroup::set_trainable(bool trainable) {
    for (auto* p : params) {
        if (!p->is_buffer) p->trainable = trainable;
    }
}

std::vector<nn::Parameter*> ParamGroup::trainable() const {
    std::vector<nn::Parameter*> out;
    for (auto* p : params) {
        if (!p->is_buffer && p->trainable) out.push_back(p);
    }
    return out;
}

std::int64_t ParamGroup::trainable_scalar_count() const {
    std::int64_t n = 0;
    for (auto* p : params) {
        if (!p->is_buffer) n += p->value.numel();
    }
    return n;
}

std::vector<Tensor> ParamGroup::snapshot() const {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (auto* p : params) out.push_back(p->value);
    return out;
}

bool snapshots_bit_identical(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!bit_identical(a[i], b[i])) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// AdaptableModel
// ---------------------------------------------------------------------------

AdaptableModel::AdaptableModel(const ModelSpec& spec) : spec_(spec) {
    spec_.validate();
    Rng rng(mix_seed(spec_.init_seed, "model-init"));
    Backbone bb = build_backbone(spec_.backbone_id, rng);
    input_size_ = spec_.input_size > 0 ? spec_.input_size : bb.input_size;
    backbone_feature_dim_ = bb.feature_dim;

    body_net_ = std::move(bb.net);
    body_net_->add(std::make_unique<nn::Linear>(backbone_feature_dim_, spec_.bottleneck_dim, rng, true));
    body_net_->add(std::make_unique<nn::BatchNorm>(spec_.bottleneck_dim));
    body_net_->set_name_prefix("body");

    head_ = std::make_unique<nn::WeightNormLinear>(spec_.bottleneck_dim, spec_.n_classes, rng);
    head_->set_name_prefix("head");
    rebuild_groups();
}

void AdaptableModel::rebuild_groups() {
    body_group_.params.clear();
    head_group_.params.clear();
    body_net_->collect(body_group_.params);
    head_->collect(head_group_.params);
}

std::unique_ptr<AdaptableModel> AdaptableModel::clone() const {
    auto copy = std::make_unique<AdaptableModel>(spec_);
    for (std::size_t i = 0; i < body_group_.params.size(); ++i) {
        copy->body_group_.params[i]->value = body_group_.params[i]->value;
        copy->body_group_.params[i]->trainable = body_group_.params[i]->trainable;
    }
    for (std::size_t i = 0; i < head_group_.params.size(); ++i) {
        copy->head_group_.params[i]->value = head_group_.params[i]->value;
        copy->head_group_.params[i]->trainable = head_group_.params[i]->trainable;
    }
    return copy;
}

Tensor AdaptableModel::features(const Tensor& images, bool train_body) {
    return body_net_->forward(images, train_body);
}

Tensor AdaptableModel::head_logits(const Tensor& feats) { return head_->forward(feats, false); }

Tensor AdaptableModel::forward(const Tensor& images, bool train_body) {
    return head_logits(features(images, train_body));
}

Tensor AdaptableModel::head_backward(const Tensor& dlogits) { return head_->backward(dlogits); }

void AdaptableModel::body_backward(const Tensor& dfeatures) { body_net_->backward(dfeatures); }

std::vector<nn::Parameter*> AdaptableModel::all_params() {
    std::vector<nn::Parameter*> out = body_group_.params;
    out.insert(out.end(), head_group_.params.begin(), head_group_.params.end());
    return out;
}

void AdaptableModel::zero_grad() {
    for (auto* p : all_params()) {
        if (!p->is_buffer) p->zero_grad();
    }
}

void AdaptableModel::replace_head(int n_classes_new) {
    if (n_classes_new < 2) throw ModelError("replace_head: n_classes must be >= 2");
    Rng rng(mix_seed(spec_.init_seed, "head-replace", static_cast<std::uint64_t>(n_classes_new)));
    head_ = std::make_unique<nn::WeightNormLinear>(spec_.bottleneck_dim, n_classes_new, rng);
    head_->set_name_prefix("head");
    spec_.n_classes = n_classes_new;
    rebuild_groups();
}

std::unique_ptr<AdaptableModel> build_model(const ModelSpec& spec) {
    auto model = std::make_unique<AdaptableModel>(spec);
    if (spec.pretrained_origin == "generic_imagenet") {
        const char* dir = std::getenv(kWeightsDirEnv);
        if (dir == nullptr || *dir == '\0') {
            throw ModelError(std::string("pretrained_origin=generic_imagenet requires ") + kWeightsDirEnv +
                             " to point at a weights cache directory");
        }
        const std::filesystem::path archive = std::filesystem::path(dir) / (spec.backbone_id + ".tensors");
        if (!std::filesystem::exists(archive)) {
            throw ModelError("generic backbone weights not found: " + archive.string() + " (set " + kWeightsDirEnv +
                             ")");
        }
        auto tensors = read_tensor_archive(archive);
        std::unordered_map<std::string, nn::Parameter*> by_name;
        for (auto* p : model->all_params()) by_name[p->name] = p;
        for (auto& [name, value] : tensors) {
            if (name.rfind("head.", 0) == 0) continue;  // the head is always replaced
            auto it = by_name.find(name);
            if (it == by_name.end()) continue;
            if (it->second->value.shape() != value.shape()) {
                throw ModelError("generic weights shape mismatch for '" + name + "'");
            }
            it->second->value = std::move(value);
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Tensor archive
// ---------------------------------------------------------------------------

namespace {
constexpr char kArchiveMagic[8] = {'F', 'S', 'S', 'F', 'D', 'A', 'T', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
}  // namespace

void write_tensor_archive(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write tensor archive: " + path.string());
    out.write(kArchiveMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(tensor->ndim()));
        for (int d : tensor->shape()) write_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(tensor->numel())));
    }
    if (!out) throw ModelError("short write to tensor archive: " + path.string());
}

std::vector<std::pair<std::string, Tensor>> read_tensor_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open tensor archive: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kArchiveMagic, 8) != 0) {
        throw ModelError("bad tensor archive magic: " + path.string());
    }
    const std::uint32_t count = read_u32(in);
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t ndim = read_u32(in);
        std::vector<int> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(read_u32(in));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(t.numel())));
        if (!in) throw ModelError("truncated tensor archive: " + path.string());
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

std::string CheckpointManifest::to_json() const {
    json j;
    j["spec"] = json::parse(spec.to_json());
    j["vocabulary"] = vocabulary;
    j["source_domain"] = source_domain;
    j["train_seed"] = train_seed;
    j["artifact_version"] = artifact_version;
    j["source_train_accuracy"] = source_train_accuracy;
    return j.dump(2);
}

CheckpointManifest CheckpointManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    CheckpointManifest m;
    m.spec = ModelSpec::from_json(j.at("spec").dump());
    m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    m.source_domain = j.value("source_domain", std::string());
    m.train_seed = j.value("train_seed", 0ULL);
    m.artifact_version = j.value("artifact_version", std::string());
    m.source_train_accuracy = j.value("source_train_accuracy", -1.0);
    return m;
}

void save_checkpoint(const AdaptableModel& model, const std::filesystem::path& dir,
                     const CheckpointManifest& manifest) {
    if (static_cast<int>(manifest.vocabulary.size()) != model.spec().n_classes) {
        throw ModelError("save_checkpoint: manifest vocabulary length " + std::to_string(manifest.vocabulary.size()) +
                         " != n_classes " + std::to_string(model.spec().n_classes));
    }
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto* p : model.body().params) tensors.emplace_back(p->name, &p->value);
    for (const auto* p : model.head().params) tensors.emplace_back(p->name, &p->value);
    write_tensor_archive(dir / "params.tensors", tensors);

    std::ofstream out(dir / "manifest.json");
    if (!out) throw ModelError("cannot write manifest: " + (dir / "manifest.json").string());
    out << manifest.to_json() << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ModelError("cannot open checkpoint manifest: " + (dir / "manifest.json").string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CheckpointManifest manifest = CheckpointManifest::from_json(text);
    if (static_cast<int>(manifest.vocabulary.size()) != manifest.spec.n_classes) {
        throw ModelError("checkpoint manifest invalid: vocabulary length " +
                         std::to_string(manifest.vocabulary.size()) + " != n_classes " +
                         std::to_string(manifest.spec.n_classes));
    }

    // Build at the recorded spec but without re-resolving external weights;
    // the archive overwrites everything.
    ModelSpec spec = manifest.spec;
    const std::string recorded_origin = spec.pretrained_origin;
    spec.pretrained_origin = "random";
    auto model = std::make_unique<AdaptableModel>(spec);

    auto tensors = read_tensor_archive(dir / "params.tensors");
    std::unordered_map<std::string, Tensor> by_name;
    for (auto& [name, value] : tensors) by_name.emplace(name, std::move(value));

    for (auto* p : model->all_params()) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) throw ModelError("checkpoint missing tensor '" + p->name + "'");
        if (it->second.shape() != p->value.shape()) {
            throw ModelError("checkpoint shape mismatch for '" + p->name + "': archive " + it->second.shape_str() +
                             " vs model " + p->value.shape_str());
        }
        p->value = std::move(it->second);
    }
    LoadedCheckpoint out;
    out.model = std::move(model);
    out.manifest = manifest;
    out.manifest.spec.pretrained_origin = recorded_origin;
    return out;
}

// ---------------------------------------------------------------------------
// Source pretraining
// ---------------------------------------------------------------------------

SourceTrainStats train_source(AdaptableModel& model, const DomainDataset& source_train,
                              const SourceTrainConfig& config) {
    if (source_train.examples.empty()) throw TrainingError("train_source: source dataset is empty");
    for (const auto& ex : source_train.examples) {
        if (ex.class_id < 0 || ex.class_id >= model.spec().n_classes) {
            throw TrainingError("train_source: example '" + ex.example_id + "' label " +
                                std::to_string(ex.class_id) + " outside the model vocabulary");
        }
    }

    AugmentConfig aug = config.augment;
    aug.crop = model.input_size();

    ImageBank bank(source_train, {});
    const int n = bank.size();
    const int iters_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const int total_iters = config.epochs * iters_per_epoch;

    model.body().set_trainable(true);
    model.head().set_trainable(true);
    Adam opt(model.all_params(), AdamConfig{config.lr});

    SourceTrainStats stats;
    stats.iterations = total_iters;
    for (int iter = 0; iter < total_iters; ++iter) {
        Batch batch = make_train_batch(bank, config.batch_size, aug, config.augmentation, config.seed, iter);
        model.zero_grad();
        Tensor feats = model.features(batch.images, /*train_body=*/true);
        Tensor logits = model.head_logits(feats);
        Tensor dlogits;
        stats.final_loss = nn::cross_entropy(logits, batch.labels, config.label_smoothing, &dlogits);
        Tensor dfeats = model.head_backward(dlogits);
        model.body_backward(dfeats);
        opt.step();
    }

    // Final source-train accuracy under deterministic eval preprocessing.
    int correct = 0;
    const int eval_bs = 64;
    for (int start = 0; start < n; start += eval_bs) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + eval_bs); ++i) idx.push_back(i);
        Tensor images = make_eval_batch(bank, idx, aug);
        Tensor logits = model.forward(images, /*train_body=*/false);
        auto preds = nn::argmax_rows(logits);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (preds[i] == bank.label(idx[i])) ++correct;
        }
    }
    stats.train_accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
    return stats;
}

}  // namespace fssfda
