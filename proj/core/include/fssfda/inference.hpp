#pragma once

#include <vector>

#include "fssfda/batches.hpp"
#include "fssfda/model.hpp"

namespace fssfda {

// Argmax predictions over a bank under deterministic eval preprocessing.
std::vector<int> predict_labels(AdaptableModel& model, const ImageBank& bank, int batch_size = 64);

// Bottleneck features [N, bottleneck_dim] under eval preprocessing.
Tensor extract_features(AdaptableModel& model, const ImageBank& bank, int batch_size = 64);

}  // namespace fssfda
