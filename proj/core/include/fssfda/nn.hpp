#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fssfda/rng.hpp"
#include "fssfda/tensor.hpp"

namespace fssfda::nn {

// One learnable tensor (or persistent buffer) with its gradient.
// Buffers (batch-norm running statistics) are saved and restored with the
// model but never touched by an optimizer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
    bool is_buffer = false;

    void zero_grad() { grad.zero(); }
};

// Feedforward layer with cached state between forward and backward.
// backward() consumes the gradient w.r.t. the layer output, accumulates
// parameter gradients, and returns the gradient w.r.t. the layer input.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect(std::vector<Parameter*>& out) { (void)out; }
    virtual void set_name_prefix(const std::string& prefix) { (void)prefix; }
};

// ---------------------------------------------------------------------------
// GEMM primitives. Fixed loop order, one writer per output element, so the
// result is bit-reproducible regardless of thread count.
// ---------------------------------------------------------------------------

// C[M,N] = A[M,K] * B[K,N] (+ C when accumulate)
void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// C[M,N] = A[M,K] * B[N,K]^T (+ C when accumulate)
void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// C[M,N] = A[K,M]^T * B[K,N] (+ C when accumulate)
void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override { out.push_back(&weight); }
    void set_name_prefix(const std::string& prefix) override { weight.name = prefix + ".weight"; }

    Parameter weight;  // [out_ch, in_ch * kernel * kernel]

private:
    int in_ch_, out_ch_, kernel_, stride_, pad_;
    int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, batch_ = 0;
    Tensor col_;  // [N, in_ch*k*k, out_h*out_w]
};

// Batch normalization over (N, H, W) for 4-d input or (N) for 2-d input,
// one statistic per channel. Running statistics are buffers owned by the
// body partition; they move only when forward() runs in train mode.
class BatchNorm : public Layer {
public:
    BatchNorm(int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override;
    void set_name_prefix(const std::string& prefix) override;

    Parameter gamma, beta;
    Parameter running_mean, running_var;

private:
    int channels_;
    double momentum_, eps_;
    bool trained_forward_ = false;
    Tensor xhat_;
    std::vector<float> invstd_;
    int rows_per_channel_ = 0;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    Tensor mask_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int kernel, int stride, int pad = 0);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int kernel_, stride_, pad_;
    std::vector<int> shape_in_;
    std::vector<std::int64_t> argmax_;
};

// NCHW -> NC mean over the spatial plane.
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<int> shape_in_;
};

class Linear : public Layer {
public:
    Linear(int in_dim, int out_dim, Rng& rng, bool bias = true);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override;
    void set_name_prefix(const std::string& prefix) override;

    Parameter weight;  // [out, in]
    Parameter bias;    // [out] (may be empty)

private:
    bool has_bias_;
    Tensor x_;
};

// Weight-normalized linear map without bias: row r of the effective weight
// matrix is magnitude[r] * direction[r] / ||direction[r]||, so each row's
// norm equals its magnitude scalar.
class WeightNormLinear : public Layer {
public:
    WeightNormLinear(int in_dim, int out_dim, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override;
    void set_name_prefix(const std::string& prefix) override;

    // Effective weight matrix [out, in], recomputed from (direction, magnitude).
    Tensor effective_weight() const;

    Parameter direction;  // [out, in]
    Parameter magnitude;  // [out]

private:
    int in_dim_, out_dim_;
    Tensor x_;
    std::vector<float> norms_;
};

// Owning chain of layers.
class Sequential : public Layer {
public:
    Sequential() = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override;
    void set_name_prefix(const std::string& prefix) override;

    std::size_t size() const { return layers_.size(); }
    Layer* at(std::size_t i) { return layers_[i].get(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Residual bottleneck block (1x1 -> 3x3 -> 1x1 plus projection shortcut),
// the building unit of the 50/101-layer residual backbones.
class ResidualBottleneck : public Layer {
public:
    ResidualBottleneck(int in_ch, int mid_ch, int out_ch, int stride, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect(std::vector<Parameter*>& out) override;
    void set_name_prefix(const std::string& prefix) override;

private:
    Sequential main_;
    std::unique_ptr<Sequential> shortcut_;  // null = identity
    Tensor relu_mask_;
};

// ---------------------------------------------------------------------------
// Losses. Each returns the scalar loss and writes d(loss)/d(logits).
// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& logits);  // row-wise, [N,K]

// Mean cross-entropy with optional label smoothing.
double cross_entropy(const Tensor& logits, const std::vector<int>& labels, double label_smoothing, Tensor* dlogits);

// Information-maximization objective plus pseudo-label cross-entropy:
//   mean_i H(p_i) - H(mean_i p_i) + mean_i CE(p_i, pseudo_i)
double im_pseudo_loss(const Tensor& logits, const std::vector<int>& pseudo_labels, Tensor* dlogits);

// Mean Shannon entropy of row-wise softmax predictions (diagnostic).
double mean_prediction_entropy(const Tensor& logits);

std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace fssfda::nn
