#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fssfda/augment.hpp"
#include "fssfda/dataset.hpp"
#include "fssfda/image.hpp"
#include "fssfda/tensor.hpp"

namespace fssfda {

// Decoded images for a fixed ordered id list, held in memory so trainers
// never re-read files inside the iteration loop.
class ImageBank {
public:
    // ids empty = the whole dataset, in dataset order.
    ImageBank(const DomainDataset& ds, const std::vector<std::string>& ids);

    int size() const { return static_cast<int>(images_.size()); }
    const Image& image(int i) const { return images_[static_cast<std::size_t>(i)]; }
    int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
    const std::string& id(int i) const { return ids_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& labels() const { return labels_; }

private:
    std::vector<Image> images_;
    std::vector<int> labels_;
    std::vector<std::string> ids_;
};

struct Batch {
    Tensor images;             // [B, 3, crop, crop]
    std::vector<int> labels;   // bank labels for the drawn slots
    std::vector<int> indices;  // bank indices for the drawn slots
};

// Deterministic training batch for iteration `iter`: indices are drawn
// without replacement when the bank holds at least batch_size images, with
// replacement otherwise (a 1-shot set is smaller than the default batch and
// must still fill it). stochastic=false switches every slot to the
// deterministic eval transform.
Batch make_train_batch(const ImageBank& bank, int batch_size, const AugmentConfig& config, bool stochastic,
                       std::uint64_t seed, int iter);

// Deterministic eval tensors for explicit bank indices.
Tensor make_eval_batch(const ImageBank& bank, const std::vector<int>& indices, const AugmentConfig& config);

}  // namespace fssfda
