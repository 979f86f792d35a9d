#pragma once

#include <functional>
#include <vector>

#include "fssfda/nn.hpp"

namespace fssfda {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Adaptive-moment optimizer over an explicit parameter list. Frozen
// parameters and buffers are skipped; moment state stays aligned by index.
class Adam {
public:
    Adam(std::vector<nn::Parameter*> params, const AdamConfig& config);

    void step();
    void zero_grad();

    const AdamConfig& config() const { return config_; }
    const std::vector<nn::Parameter*>& params() const { return params_; }

private:
    std::vector<nn::Parameter*> params_;
    AdamConfig config_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::int64_t t_ = 0;
};

// Global L2 norm over the gradients of trainable parameters.
double gradient_norm(const std::vector<nn::Parameter*>& params);

// Sharpness-aware minimization step around a base Adam optimizer.
//
// loss_and_grad must zero nothing itself: the caller's closure evaluates the
// batch loss at the CURRENT parameters and accumulates gradients into the
// parameter .grad fields (grads are zeroed here before each evaluation).
// With rho > 0 the trainable parameters are perturbed by rho * g / ||g||,
// the gradient is recomputed at the perturbed point, the parameters are
// restored bit-exactly, and the base step is applied with the perturbed
// gradient. rho = 0 (or a zero gradient) takes the base step directly, so
// the rho = 0 trajectory is bit-identical to plain Adam.
//
// Returns the unperturbed batch loss.
double sam_step(Adam& optimizer, double rho, const std::function<double()>& loss_and_grad);

}  // namespace fssfda
