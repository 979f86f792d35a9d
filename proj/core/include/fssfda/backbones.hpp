#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fssfda/nn.hpp"
#include "fssfda/rng.hpp"

namespace fssfda {

// A feature extractor: images [N,3,H,W] -> features [N, feature_dim].
struct Backbone {
    std::unique_ptr<nn::Sequential> net;
    int feature_dim = 0;
    int input_size = 0;  // expected square input resolution
};

// Registered ids: "small_cnn" (desk scale, 32x32, feature dim 64) plus the
// 50- and 101-layer residual networks ("resnet50", "resnet101", 224x224,
// feature dim 2048). The residual backbones are opt-in heavyweights; CI
// sticks to the small CNN.
Backbone build_backbone(const std::string& backbone_id, Rng& rng);

bool backbone_registered(const std::string& backbone_id);
std::vector<std::string> registered_backbones();

}  // namespace fssfda
