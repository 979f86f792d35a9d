#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fssfda/augment.hpp"
#include "fssfda/backbones.hpp"
#include "fssfda/dataset.hpp"
#include "fssfda/nn.hpp"
#include "fssfda/tensor.hpp"

namespace fssfda {

// Environment variable pointing at the local cache of generic pretrained
// backbone weights (one "<backbone_id>.tensors" archive per backbone).
inline constexpr const char* kWeightsDirEnv = "FSSFDA_WEIGHTS_DIR";

struct ModelSpec {
    std::string backbone_id = "small_cnn";
    int bottleneck_dim = 256;
    int n_classes = 2;
    std::string pretrained_origin = "random";  // random | generic_imagenet | source_checkpoint
    std::uint64_t init_seed = 0;
    int input_size = 0;  // 0 = the backbone's native resolution

    std::string to_json() const;
    static ModelSpec from_json(const std::string& text);
    void validate() const;
};

// Handle over one side of the body/head parameter partition. Buffers
// (batch-norm running statistics) ride along for snapshots and freezing but
// are never optimizer targets.
struct ParamGroup {
    std::vector<nn::Parameter*> params;

    void set_trainable(bool trainable);
    std::vector<nn::Parameter*> trainable() const;
    std::int64_t trainable_scalar_count() const;
    // Values of every parameter and buffer, for bit-identity checks.
    std::vector<Tensor> snapshot() const;
};

bool snapshots_bit_identical(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

// Backbone + bottleneck ("body") and weight-normalized linear classifier
// ("head"). The partition is exhaustive and disjoint: every trainable
// parameter lives in exactly one of the two groups.
class AdaptableModel {
public:
    explicit AdaptableModel(const ModelSpec& spec);
    AdaptableModel(const AdaptableModel&) = delete;
    AdaptableModel& operator=(const AdaptableModel&) = delete;
    AdaptableModel(AdaptableModel&&) = default;
    AdaptableModel& operator=(AdaptableModel&&) = default;

    // Fresh model with the same spec and identical parameter values.
    std::unique_ptr<AdaptableModel> clone() const;

    // Bottleneck features [N, bottleneck_dim]. train_body selects batch-stat
    // batch norm (and moves running statistics); eval mode leaves the body
    // bit-identical.
    Tensor features(const Tensor& images, bool train_body);
    Tensor head_logits(const Tensor& features);
    Tensor forward(const Tensor& images, bool train_body);

    Tensor head_backward(const Tensor& dlogits);  // d(loss)/d(features)
    void body_backward(const Tensor& dfeatures);

    ParamGroup& body() { return body_group_; }
    ParamGroup& head() { return head_group_; }
    const ParamGroup& body() const { return body_group_; }
    const ParamGroup& head() const { return head_group_; }
    std::vector<nn::Parameter*> all_params();
    void zero_grad();

    const ModelSpec& spec() const { return spec_; }
    int input_size() const { return input_size_; }
    int feature_dim() const { return backbone_feature_dim_; }

    // Swaps in a fresh weight-normalized head of the new width; the body is
    // untouched.
    void replace_head(int n_classes_new);

    nn::WeightNormLinear& head_layer() { return *head_; }

private:
    void rebuild_groups();

    ModelSpec spec_;
    int input_size_ = 0;
    int backbone_feature_dim_ = 0;
    std::unique_ptr<nn::Sequential> body_net_;  // backbone + bottleneck
    std::unique_ptr<nn::WeightNormLinear> head_;
    ParamGroup body_group_;
    ParamGroup head_group_;
};

// Spec-level build entry point. Resolves generic_imagenet weights from
// FSSFDA_WEIGHTS_DIR when pretrained_origin requests them.
std::unique_ptr<AdaptableModel> build_model(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Tensor archive + checkpoint
// ---------------------------------------------------------------------------

void write_tensor_archive(const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, const Tensor*>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_tensor_archive(const std::filesystem::path& path);

struct CheckpointManifest {
    ModelSpec spec;
    std::vector<std::string> vocabulary;
    std::string source_domain;
    std::uint64_t train_seed = 0;
    std::string artifact_version = "0.1.0";
    double source_train_accuracy = -1.0;  // negative = never source-trained

    std::string to_json() const;
    static CheckpointManifest from_json(const std::string& text);
};

// Checkpoint = directory with params.tensors plus sidecar manifest.json.
void save_checkpoint(const AdaptableModel& model, const std::filesystem::path& dir,
                     const CheckpointManifest& manifest);

struct LoadedCheckpoint {
    std::unique_ptr<AdaptableModel> model;
    CheckpointManifest manifest;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Source pretraining
// ---------------------------------------------------------------------------

struct SourceTrainConfig {
    int epochs = 20;
    double lr = 1e-3;
    int batch_size = 32;
    double label_smoothing = 0.1;
    bool augmentation = true;
    std::uint64_t seed = 0;
    AugmentConfig augment;
};

struct SourceTrainStats {
    int iterations = 0;
    double final_loss = 0.0;
    double train_accuracy = 0.0;
};

// Cross-entropy training with label smoothing on the source dataset.
// Deterministic given the seed; 0 epochs leaves the model at initialization.
SourceTrainStats train_source(AdaptableModel& model, const DomainDataset& source_train,
                              const SourceTrainConfig& config);

}  // namespace fssfda
