#include "fssfda/batches.hpp"

#include <cstring>

#include "fssfda/error.hpp"
#include "fssfda/rng.hpp"

namespace fssfda {

ImageBank::ImageBank(const DomainDataset& ds, const std::vector<std::string>& ids) {
    if (ids.empty()) {
        for (const auto& ex : ds.examples) {
            images_.push_back(load_image(ex.image_ref));
            labels_.push_back(ex.class_id);
            ids_.push_back(ex.example_id);
        }
    } else {
        for (const auto& id : ids) {
            const LabeledExample* ex = ds.find(id);
            if (ex == nullptr) {
                throw SamplingError("ImageBank: id '" + id + "' not found in dataset '" + ds.domain_id + "'");
            }
            images_.push_back(load_image(ex->image_ref));
            labels_.push_back(ex->class_id);
            ids_.push_back(ex->example_id);
        }
    }
}

namespace {

void copy_into_batch(Tensor& batch, int slot, const Tensor& sample) {
    const std::size_t n = static_cast<std::size_t>(sample.numel());
    std::memcpy(batch.data() + static_cast<std::size_t>(slot) * n, sample.data(), n * sizeof(float));
}

}  // namespace

Batch make_train_batch(const ImageBank& bank, int batch_size, const AugmentConfig& config, bool stochastic,
                       std::uint64_t seed, int iter) {
    if (bank.size() == 0) throw TrainingError("make_train_batch: empty image bank");

    Batch out;
    out.indices.resize(static_cast<std::size_t>(batch_size));
    Rng draw(mix_seed(seed, "batch", static_cast<std::uint64_t>(iter)));
    if (bank.size() >= batch_size) {
        auto picks = draw.sample_without_replacement(bank.size(), batch_size);
        for (int i = 0; i < batch_size; ++i) out.indices[static_cast<std::size_t>(i)] = picks[static_cast<std::size_t>(i)];
    } else {
        for (int i = 0; i < batch_size; ++i) out.indices[static_cast<std::size_t>(i)] = draw.below_int(bank.size());
    }

    out.images = Tensor({batch_size, 3, config.crop, config.crop});
    out.labels.resize(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
        const int idx = out.indices[static_cast<std::size_t>(i)];
        const std::uint64_t slot_seed = mix_seed(seed, "aug", static_cast<std::uint64_t>(iter),
                                                 static_cast<std::uint64_t>(i));
        Tensor sample = augment(bank.image(idx), stochastic, slot_seed, config);
        copy_into_batch(out.images, i, sample);
        out.labels[static_cast<std::size_t>(i)] = bank.label(idx);
    }
    return out;
}

Tensor make_eval_batch(const ImageBank& bank, const std::vector<int>& indices, const AugmentConfig& config) {
    Tensor images({static_cast<int>(indices.size()), 3, config.crop, config.crop});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        Tensor sample = augment(bank.image(indices[i]), /*train_mode=*/false, 0, config);
        copy_into_batch(images, static_cast<int>(i), sample);
    }
    return images;
}

}  // namespace fssfda
