#include "fssfda/backbones.hpp"

#include "fssfda/error.hpp"

namespace fssfda {

using nn::BatchNorm;
using nn::Conv2d;
using nn::GlobalAvgPool;
using nn::MaxPool2d;
using nn::ReLU;
using nn::ResidualBottleneck;
using nn::Sequential;

namespace {

Backbone build_small_cnn(Rng& rng) {
    auto net = std::make_unique<Sequential>();
    net->add(std::make_unique<Conv2d>(3, 16, 3, 1, 1, rng));
    net->add(std::make_unique<BatchNorm>(16));
    net->add(std::make_unique<ReLU>());
    net->add(std::make_unique<MaxPool2d>(2, 2));
    net->add(std::make_unique<Conv2d>(16, 32, 3, 1, 1, rng));
    net->add(std::make_unique<BatchNorm>(32));
    net->add(std::make_unique<ReLU>());
    net->add(std::make_unique<MaxPool2d>(2, 2));
    net->add(std::make_unique<Conv2d>(32, 64, 3, 1, 1, rng));
    net->add(std::make_unique<BatchNorm>(64));
    net->add(std::make_unique<ReLU>());
    net->add(std::make_unique<GlobalAvgPool>());
    return {std::move(net), 64, 32};
}

Backbone build_resnet(const std::vector<int>& blocks_per_stage, Rng& rng) {
    auto net = std::make_unique<Sequential>();
    net->add(std::make_unique<Conv2d>(3, 64, 7, 2, 3, rng));
    net->add(std::make_unique<BatchNorm>(64));
    net->add(std::make_unique<ReLU>());
    net->add(std::make_unique<MaxPool2d>(3, 2, 1));

    int in_ch = 64;
    int mid = 64;
    for (std::size_t stage = 0; stage < blocks_per_stage.size(); ++stage) {
        const int out_ch = mid * 4;
        for (int b = 0; b < blocks_per_stage[stage]; ++b) {
            const int stride = (b == 0 && stage > 0) ? 2 : 1;
            net->add(std::make_unique<ResidualBottleneck>(in_ch, mid, out_ch, stride, rng));
            in_ch = out_ch;
        }
        mid *= 2;
    }
    net->add(std::make_unique<GlobalAvgPool>());
    return {std::move(net), in_ch, 224};
}

}  // namespace

Backbone build_backbone(const std::string& backbone_id, Rng& rng) {
    if (backbone_id == "small_cnn") return build_small_cnn(rng);
    if (backbone_id == "resnet50") return build_resnet({3, 4, 6, 3}, rng);
    if (backbone_id == "resnet101") return build_resnet({3, 4, 23, 3}, rng);
    throw ModelError("unknown backbone_id: '" + backbone_id + "' (registered: small_cnn, resnet50, resnet101)");
}

bool backbone_registered(const std::string& backbone_id) {
    return backbone_id == "small_cnn" || backbone_id == "resnet50" || backbone_id == "resnet101";
}

std::vector<std::string> registered_backbones() { return {"small_cnn", "resnet50", "resnet101"}; }

}  // namespace fssfda
