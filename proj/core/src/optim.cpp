#include "fssfda/optim.hpp"

#include <cmath>

namespace fssfda {

Adam::Adam(std::vector<nn::Parameter*> params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::zero_grad() {
    for (auto* p : params_) {
        if (!p->is_buffer) p->zero_grad();
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        nn::Parameter* p = params_[i];
        if (p->is_buffer || !p->trainable) continue;
        float* w = p->value.data();
        const float* g = p->grad.data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        const std::int64_t n = p->value.numel();
        for (std::int64_t j = 0; j < n; ++j) {
            double grad = g[j];
            if (config_.weight_decay != 0.0) grad += config_.weight_decay * w[j];
            const double mj = config_.beta1 * m[j] + (1.0 - config_.beta1) * grad;
            const double vj = config_.beta2 * v[j] + (1.0 - config_.beta2) * grad * grad;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            w[j] = static_cast<float>(w[j] - config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
        }
    }
}

double gradient_norm(const std::vector<nn::Parameter*>& params) {
    double sq = 0.0;
    for (const auto* p : params) {
        if (p->is_buffer || !p->trainable) continue;
        const float* g = p->grad.data();
        for (std::int64_t j = 0; j < p->grad.numel(); ++j) sq += static_cast<double>(g[j]) * g[j];
    }
    return std::sqrt(sq);
}

double sam_step(Adam& optimizer, double rho, const std::function<double()>& loss_and_grad) {
    optimizer.zero_grad();
    const double loss = loss_and_grad();
    if (rho > 0.0) {
        const double norm = gradient_norm(optimizer.params());
        if (norm > 0.0) {
            // Save, perturb along the normalized gradient, re-evaluate,
            // restore exactly. Only trainable parameters move; batch-norm
            // buffers keep whatever the forward passes did to them.
            std::vector<nn::Parameter*> moved;
            std::vector<Tensor> saved;
            for (auto* p : optimizer.params()) {
                if (p->is_buffer || !p->trainable) continue;
                moved.push_back(p);
                saved.push_back(p->value);
            }

            const double scale = rho / norm;
            for (auto* p : moved) {
                float* w = p->value.data();
                const float* g = p->grad.data();
                for (std::int64_t j = 0; j < p->value.numel(); ++j) {
                    w[j] = static_cast<float>(w[j] + scale * g[j]);
                }
            }
            optimizer.zero_grad();
            loss_and_grad();
            for (std::size_t i = 0; i < moved.size(); ++i) {
                moved[i]->value = saved[i];
            }
        }
    }
    optimizer.step();
    return loss;
}

}  // namespace fssfda
