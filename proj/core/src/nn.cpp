#include "fssfda/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fssfda/error.hpp"

namespace fssfda::nn {

// ---------------------------------------------------------------------------
// GEMM
// ---------------------------------------------------------------------------

void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        float* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(float) * static_cast<std::size_t>(n));
        const float* ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const float av = ai[p];
            if (av == 0.0f) continue;
            const float* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const float* ai = a + static_cast<std::size_t>(i) * k;
        float* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* bj = b + static_cast<std::size_t>(j) * k;
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] = accumulate ? ci[j] + acc : acc;
        }
    }
}

void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
    // C[M,N] = A[K,M]^T * B[K,N]; row i of C gathers column i of A.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        float* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(float) * static_cast<std::size_t>(n));
        for (int p = 0; p < k; ++p) {
            const float av = a[static_cast<std::size_t>(p) * m + i];
            if (av == 0.0f) continue;
            const float* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

namespace {

void im2col(const float* x, int channels, int h, int w, int kernel, int stride, int pad, int out_h, int out_w,
            float* col) {
    const int ohw = out_h * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                float* dst = col + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * ohw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        std::memset(dst + static_cast<std::size_t>(oy) * out_w, 0,
                                    sizeof(float) * static_cast<std::size_t>(out_w));
                        continue;
                    }
                    const float* src_row = x + (static_cast<std::size_t>(c) * h + iy) * w;
                    float* dst_row = dst + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst_row[ox] = (ix >= 0 && ix < w) ? src_row[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* col, int channels, int h, int w, int kernel, int stride, int pad, int out_h, int out_w,
            float* x) {
    const int ohw = out_h * out_w;
    std::memset(x, 0, sizeof(float) * static_cast<std::size_t>(channels) * h * w);
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const float* src = col + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * ohw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    float* x_row = x + (static_cast<std::size_t>(c) * h + iy) * w;
                    const float* src_row = src + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) x_row[ix] += src_row[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
    const int fan_in = in_ch * kernel * kernel;
    weight.value = Tensor({out_ch, fan_in});
    weight.grad = Tensor({out_ch, fan_in});
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < weight.value.numel(); ++i) {
        weight.value[i] = static_cast<float>(rng.normal(0.0, stddev));
    }
}

Tensor Conv2d::forward(const Tensor& x, bool /*train*/) {
    batch_ = x.dim(0);
    in_h_ = x.dim(2);
    in_w_ = x.dim(3);
    out_h_ = (in_h_ + 2 * pad_ - kernel_) / stride_ + 1;
    out_w_ = (in_w_ + 2 * pad_ - kernel_) / stride_ + 1;
    const int ickk = in_ch_ * kernel_ * kernel_;
    const int ohw = out_h_ * out_w_;

    col_ = Tensor({batch_, ickk, ohw});
    Tensor y({batch_, out_ch_, out_h_, out_w_});
    const std::size_t x_plane = static_cast<std::size_t>(in_ch_) * in_h_ * in_w_;
    for (int n = 0; n < batch_; ++n) {
        float* col_n = col_.data() + static_cast<std::size_t>(n) * ickk * ohw;
        im2col(x.data() + static_cast<std::size_t>(n) * x_plane, in_ch_, in_h_, in_w_, kernel_, stride_, pad_, out_h_,
               out_w_, col_n);
        gemm_nn(weight.value.data(), col_n, y.data() + (static_cast<std::size_t>(n) * out_ch_) * ohw, out_ch_, ickk,
                ohw, false);
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const int ickk = in_ch_ * kernel_ * kernel_;
    const int ohw = out_h_ * out_w_;
    Tensor dx({batch_, in_ch_, in_h_, in_w_});
    Tensor dcol({ickk, ohw});
    const std::size_t x_plane = static_cast<std::size_t>(in_ch_) * in_h_ * in_w_;

    for (int n = 0; n < batch_; ++n) {
        const float* dy_n = dy.data() + (static_cast<std::size_t>(n) * out_ch_) * ohw;
        const float* col_n = col_.data() + static_cast<std::size_t>(n) * ickk * ohw;
        gemm_nt(dy_n, col_n, weight.grad.data(), out_ch_, ohw, ickk, true);
        gemm_tn(weight.value.data(), dy_n, dcol.data(), ickk, out_ch_, ohw, false);
        col2im(dcol.data(), in_ch_, in_h_, in_w_, kernel_, stride_, pad_, out_h_, out_w_,
               dx.data() + static_cast<std::size_t>(n) * x_plane);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
    gamma.value = Tensor({channels}, 1.0f);
    gamma.grad = Tensor({channels});
    beta.value = Tensor({channels});
    beta.grad = Tensor({channels});
    running_mean.value = Tensor({channels});
    running_mean.grad = Tensor({0});
    running_mean.trainable = false;
    running_mean.is_buffer = true;
    running_var.value = Tensor({channels}, 1.0f);
    running_var.grad = Tensor({0});
    running_var.trainable = false;
    running_var.is_buffer = true;
}

void BatchNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

void BatchNorm::set_name_prefix(const std::string& prefix) {
    gamma.name = prefix + ".gamma";
    beta.name = prefix + ".beta";
    running_mean.name = prefix + ".running_mean";
    running_var.name = prefix + ".running_var";
}

namespace {

// Iteration helper: BN treats 4-d input as (N*H*W) rows per channel and 2-d
// input as N rows per channel.
struct BnLayout {
    int batch;
    int channels;
    int plane;  // H*W, or 1 for 2-d
};

BnLayout bn_layout(const Tensor& x, int channels) {
    if (x.ndim() == 4) {
        if (x.dim(1) != channels) throw Error("batchnorm: channel mismatch");
        return {x.dim(0), channels, x.dim(2) * x.dim(3)};
    }
    if (x.ndim() == 2) {
        if (x.dim(1) != channels) throw Error("batchnorm: channel mismatch");
        return {x.dim(0), channels, 1};
    }
    throw Error("batchnorm: expected 2-d or 4-d input");
}

}  // namespace

Tensor BatchNorm::forward(const Tensor& x, bool train) {
    const BnLayout lay = bn_layout(x, channels_);
    const int rows = lay.batch * lay.plane;
    rows_per_channel_ = rows;
    trained_forward_ = train;

    Tensor y(x.shape());
    xhat_ = Tensor(x.shape());
    invstd_.assign(static_cast<std::size_t>(channels_), 0.0f);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels_; ++c) {
        double mean, var;
        if (train) {
            double sum = 0.0;
            for (int n = 0; n < lay.batch; ++n) {
                const float* p = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
                for (int s = 0; s < lay.plane; ++s) sum += p[s];
            }
            mean = sum / rows;
            double sq = 0.0;
            for (int n = 0; n < lay.batch; ++n) {
                const float* p = x.data() + (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
                for (int s = 0; s < lay.plane; ++s) {
                    const double d = p[s] - mean;
                    sq += d * d;
                }
            }
            var = sq / rows;
            const double unbiased = rows > 1 ? sq / (rows - 1) : var;
            running_mean.value[c] = static_cast<float>((1.0 - momentum_) * running_mean.value[c] + momentum_ * mean);
            running_var.value[c] = static_cast<float>((1.0 - momentum_) * running_var.value[c] + momentum_ * unbiased);
        } else {
            mean = running_mean.value[c];
            var = running_var.value[c];
        }
        const double inv = 1.0 / std::sqrt(var + eps_);
        invstd_[static_cast<std::size_t>(c)] = static_cast<float>(inv);
        const float g = gamma.value[c];
        const float b = beta.value[c];
        for (int n = 0; n < lay.batch; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
            const float* px = x.data() + off;
            float* ph = xhat_.data() + off;
            float* py = y.data() + off;
            for (int s = 0; s < lay.plane; ++s) {
                const float h = static_cast<float>((px[s] - mean) * inv);
                ph[s] = h;
                py[s] = g * h + b;
            }
        }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    const BnLayout lay = bn_layout(dy, channels_);
    const int rows = rows_per_channel_;
    Tensor dx(dy.shape());

#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < lay.batch; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
            const float* pdy = dy.data() + off;
            const float* ph = xhat_.data() + off;
            for (int s = 0; s < lay.plane; ++s) {
                sum_dy += pdy[s];
                sum_dy_xhat += pdy[s] * ph[s];
            }
        }
        gamma.grad[c] += static_cast<float>(sum_dy_xhat);
        beta.grad[c] += static_cast<float>(sum_dy);

        const float g = gamma.value[c];
        const float inv = invstd_[static_cast<std::size_t>(c)];
        if (trained_forward_) {
            const float mean_dy = static_cast<float>(sum_dy / rows);
            const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / rows);
            for (int n = 0; n < lay.batch; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
                const float* pdy = dy.data() + off;
                const float* ph = xhat_.data() + off;
                float* pdx = dx.data() + off;
                for (int s = 0; s < lay.plane; ++s) {
                    pdx[s] = g * inv * (pdy[s] - mean_dy - ph[s] * mean_dy_xhat);
                }
            }
        } else {
            for (int n = 0; n < lay.batch; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * lay.plane;
                const float* pdy = dy.data() + off;
                float* pdx = dx.data() + off;
                for (int s = 0; s < lay.plane; ++s) pdx[s] = g * inv * pdy[s];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ReLU / pooling
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool /*train*/) {
    Tensor y(x.shape());
    mask_ = Tensor(x.shape());
    const float* px = x.data();
    float* py = y.data();
    float* pm = mask_.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const bool pos = px[i] > 0.0f;
        py[i] = pos ? px[i] : 0.0f;
        pm[i] = pos ? 1.0f : 0.0f;
    }
    return y;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx(dy.shape());
    const float* pdy = dy.data();
    const float* pm = mask_.data();
    float* pdx = dx.data();
    const std::int64_t n = dy.numel();
    for (std::int64_t i = 0; i < n; ++i) pdx[i] = pdy[i] * pm[i];
    return dx;
}

MaxPool2d::MaxPool2d(int kernel, int stride, int pad) : kernel_(kernel), stride_(stride), pad_(pad) {}

Tensor MaxPool2d::forward(const Tensor& x, bool /*train*/) {
    shape_in_ = x.shape();
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = (h + 2 * pad_ - kernel_) / stride_ + 1;
    const int ow = (w + 2 * pad_ - kernel_) / stride_ + 1;
    Tensor y({batch, ch, oh, ow});
    argmax_.assign(y.storage().size(), 0);

    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
            const float* plane = x.data() + (static_cast<std::size_t>(n) * ch + c) * h * w;
            const std::size_t out_base = (static_cast<std::size_t>(n) * ch + c) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int64_t best_idx = -1;
                    for (int ky = 0; ky < kernel_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kernel_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= w) continue;
                            const float v = plane[static_cast<std::size_t>(iy) * w + ix];
                            if (v > best) {
                                best = v;
                                best_idx = static_cast<std::int64_t>(iy) * w + ix;
                            }
                        }
                    }
                    y.storage()[out_base + static_cast<std::size_t>(oy) * ow + ox] = best;
                    argmax_[out_base + static_cast<std::size_t>(oy) * ow + ox] =
                        (static_cast<std::int64_t>(n) * ch + c) * h * w + best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
    Tensor dx(shape_in_);
    const float* pdy = dy.data();
    for (std::size_t i = 0; i < argmax_.size(); ++i) {
        dx.storage()[static_cast<std::size_t>(argmax_[i])] += pdy[i];
    }
    return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*train*/) {
    shape_in_ = x.shape();
    const int batch = x.dim(0), ch = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor y({batch, ch});
    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
            const float* p = x.data() + (static_cast<std::size_t>(n) * ch + c) * plane;
            double sum = 0.0;
            for (int s = 0; s < plane; ++s) sum += p[s];
            y.at(n, c) = static_cast<float>(sum / plane);
        }
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    Tensor dx(shape_in_);
    const int batch = shape_in_[0], ch = shape_in_[1], plane = shape_in_[2] * shape_in_[3];
    const float scale = 1.0f / static_cast<float>(plane);
    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < ch; ++c) {
            const float g = dy.at(n, c) * scale;
            float* p = dx.data() + (static_cast<std::size_t>(n) * ch + c) * plane;
            for (int s = 0; s < plane; ++s) p[s] = g;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Linear / WeightNormLinear
// ---------------------------------------------------------------------------

Linear::Linear(int in_dim, int out_dim, Rng& rng, bool with_bias) : has_bias_(with_bias) {
    weight.value = Tensor({out_dim, in_dim});
    weight.grad = Tensor({out_dim, in_dim});
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_dim));
    for (std::int64_t i = 0; i < weight.value.numel(); ++i) {
        weight.value[i] = static_cast<float>(rng.normal(0.0, stddev));
    }
    if (has_bias_) {
        bias.value = Tensor({out_dim});
        bias.grad = Tensor({out_dim});
    }
}

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
}

void Linear::set_name_prefix(const std::string& prefix) {
    weight.name = prefix + ".weight";
    bias.name = prefix + ".bias";
}

Tensor Linear::forward(const Tensor& x, bool /*train*/) {
    x_ = x;
    const int n = x.dim(0), in = x.dim(1), out = weight.value.dim(0);
    Tensor y({n, out});
    gemm_nt(x.data(), weight.value.data(), y.data(), n, in, out, false);
    if (has_bias_) {
        for (int i = 0; i < n; ++i) {
            float* row = y.data() + static_cast<std::size_t>(i) * out;
            for (int j = 0; j < out; ++j) row[j] += bias.value[j];
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    const int n = dy.dim(0), out = dy.dim(1), in = weight.value.dim(1);
    gemm_tn(dy.data(), x_.data(), weight.grad.data(), out, n, in, true);
    if (has_bias_) {
        for (int j = 0; j < out; ++j) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) sum += dy.at(i, j);
            bias.grad[j] += static_cast<float>(sum);
        }
    }
    Tensor dx({n, in});
    gemm_nn(dy.data(), weight.value.data(), dx.data(), n, out, in, false);
    return dx;
}

WeightNormLinear::WeightNormLinear(int in_dim, int out_dim, Rng& rng) : in_dim_(in_dim), out_dim_(out_dim) {
    direction.value = Tensor({out_dim, in_dim});
    direction.grad = Tensor({out_dim, in_dim});
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (std::int64_t i = 0; i < direction.value.numel(); ++i) {
        direction.value[i] = static_cast<float>(rng.normal(0.0, stddev));
    }
    magnitude.value = Tensor({out_dim});
    magnitude.grad = Tensor({out_dim});
    // Start with the effective weight equal to the raw direction matrix.
    for (int r = 0; r < out_dim; ++r) {
        double sq = 0.0;
        for (int j = 0; j < in_dim; ++j) {
            const float v = direction.value.at(r, j);
            sq += static_cast<double>(v) * v;
        }
        magnitude.value[r] = static_cast<float>(std::sqrt(sq));
    }
}

void WeightNormLinear::collect(std::vector<Parameter*>& out) {
    out.push_back(&direction);
    out.push_back(&magnitude);
}

void WeightNormLinear::set_name_prefix(const std::string& prefix) {
    direction.name = prefix + ".direction";
    magnitude.name = prefix + ".magnitude";
}

Tensor WeightNormLinear::effective_weight() const {
    Tensor w({out_dim_, in_dim_});
    for (int r = 0; r < out_dim_; ++r) {
        double sq = 0.0;
        const float* v = direction.value.data() + static_cast<std::size_t>(r) * in_dim_;
        for (int j = 0; j < in_dim_; ++j) sq += static_cast<double>(v[j]) * v[j];
        const double norm = std::max(std::sqrt(sq), 1e-12);
        const double scale = magnitude.value[r] / norm;
        float* wr = w.data() + static_cast<std::size_t>(r) * in_dim_;
        for (int j = 0; j < in_dim_; ++j) wr[j] = static_cast<float>(v[j] * scale);
    }
    return w;
}

Tensor WeightNormLinear::forward(const Tensor& x, bool /*train*/) {
    x_ = x;
    norms_.assign(static_cast<std::size_t>(out_dim_), 0.0f);
    for (int r = 0; r < out_dim_; ++r) {
        double sq = 0.0;
        const float* v = direction.value.data() + static_cast<std::size_t>(r) * in_dim_;
        for (int j = 0; j < in_dim_; ++j) sq += static_cast<double>(v[j]) * v[j];
        norms_[static_cast<std::size_t>(r)] = static_cast<float>(std::max(std::sqrt(sq), 1e-12));
    }
    Tensor w = effective_weight();
    const int n = x.dim(0);
    Tensor y({n, out_dim_});
    gemm_nt(x.data(), w.data(), y.data(), n, in_dim_, out_dim_, false);
    return y;
}

Tensor WeightNormLinear::backward(const Tensor& dy) {
    const int n = dy.dim(0);
    // u[r,:] = sum_i dy[i,r] * x[i,:]
    Tensor u({out_dim_, in_dim_});
    gemm_tn(dy.data(), x_.data(), u.data(), out_dim_, n, in_dim_, false);

    for (int r = 0; r < out_dim_; ++r) {
        const float* ur = u.data() + static_cast<std::size_t>(r) * in_dim_;
        const float* vr = direction.value.data() + static_cast<std::size_t>(r) * in_dim_;
        const double norm = norms_[static_cast<std::size_t>(r)];
        double uv = 0.0;
        for (int j = 0; j < in_dim_; ++j) uv += static_cast<double>(ur[j]) * vr[j];
        magnitude.grad[r] += static_cast<float>(uv / norm);
        const double g_over_n = magnitude.value[r] / norm;
        const double proj = uv / (norm * norm);
        float* dvr = direction.grad.data() + static_cast<std::size_t>(r) * in_dim_;
        for (int j = 0; j < in_dim_; ++j) {
            dvr[j] += static_cast<float>(g_over_n * (ur[j] - proj * vr[j]));
        }
    }

    Tensor w = effective_weight();
    Tensor dx({n, in_dim_});
    gemm_nn(dy.data(), w.data(), dx.data(), n, out_dim_, in_dim_, false);
    return dx;
}

// ---------------------------------------------------------------------------
// Sequential / ResidualBottleneck
// ---------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor h = x;
    for (auto& layer : layers_) h = layer->forward(h, train);
    return h;
}

Tensor Sequential::backward(const Tensor& dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Sequential::collect(std::vector<Parameter*>& out) {
    for (auto& layer : layers_) layer->collect(out);
}

void Sequential::set_name_prefix(const std::string& prefix) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->set_name_prefix(prefix + "." + std::to_string(i));
    }
}

ResidualBottleneck::ResidualBottleneck(int in_ch, int mid_ch, int out_ch, int stride, Rng& rng) {
    main_.add(std::make_unique<Conv2d>(in_ch, mid_ch, 1, 1, 0, rng));
    main_.add(std::make_unique<BatchNorm>(mid_ch));
    main_.add(std::make_unique<ReLU>());
    main_.add(std::make_unique<Conv2d>(mid_ch, mid_ch, 3, stride, 1, rng));
    main_.add(std::make_unique<BatchNorm>(mid_ch));
    main_.add(std::make_unique<ReLU>());
    main_.add(std::make_unique<Conv2d>(mid_ch, out_ch, 1, 1, 0, rng));
    main_.add(std::make_unique<BatchNorm>(out_ch));
    if (stride != 1 || in_ch != out_ch) {
        shortcut_ = std::make_unique<Sequential>();
        shortcut_->add(std::make_unique<Conv2d>(in_ch, out_ch, 1, stride, 0, rng));
        shortcut_->add(std::make_unique<BatchNorm>(out_ch));
    }
}

Tensor ResidualBottleneck::forward(const Tensor& x, bool train) {
    Tensor m = main_.forward(x, train);
    Tensor s = shortcut_ ? shortcut_->forward(x, train) : x;
    Tensor y(m.shape());
    relu_mask_ = Tensor(m.shape());
    const std::int64_t n = m.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const float v = m[i] + s[i];
        const bool pos = v > 0.0f;
        y[i] = pos ? v : 0.0f;
        relu_mask_[i] = pos ? 1.0f : 0.0f;
    }
    return y;
}

Tensor ResidualBottleneck::backward(const Tensor& dy) {
    Tensor dz(dy.shape());
    for (std::int64_t i = 0; i < dy.numel(); ++i) dz[i] = dy[i] * relu_mask_[i];
    Tensor dx_main = main_.backward(dz);
    if (shortcut_) {
        Tensor dx_skip = shortcut_->backward(dz);
        for (std::int64_t i = 0; i < dx_main.numel(); ++i) dx_main[i] += dx_skip[i];
        return dx_main;
    }
    for (std::int64_t i = 0; i < dx_main.numel(); ++i) dx_main[i] += dz[i];
    return dx_main;
}

void ResidualBottleneck::collect(std::vector<Parameter*>& out) {
    main_.collect(out);
    if (shortcut_) shortcut_->collect(out);
}

void ResidualBottleneck::set_name_prefix(const std::string& prefix) {
    main_.set_name_prefix(prefix + ".main");
    if (shortcut_) shortcut_->set_name_prefix(prefix + ".shortcut");
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor p({n, k});
    for (int i = 0; i < n; ++i) {
        const float* z = logits.data() + static_cast<std::size_t>(i) * k;
        float* pi = p.data() + static_cast<std::size_t>(i) * k;
        float zmax = z[0];
        for (int c = 1; c < k; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            const double e = std::exp(static_cast<double>(z[c]) - zmax);
            pi[c] = static_cast<float>(e);
            sum += e;
        }
        const float inv = static_cast<float>(1.0 / sum);
        for (int c = 0; c < k; ++c) pi[c] *= inv;
    }
    return p;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels, double label_smoothing, Tensor* dlogits) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n) throw TrainingError("cross_entropy: batch/label size mismatch");
    for (int y : labels) {
        if (y < 0 || y >= k) {
            throw TrainingError("cross_entropy: label " + std::to_string(y) + " outside the " + std::to_string(k) +
                                "-class vocabulary");
        }
    }
    Tensor p = softmax(logits);
    const double off = label_smoothing / k;
    const double on = 1.0 - label_smoothing + off;
    double loss = 0.0;
    if (dlogits) *dlogits = Tensor({n, k});
    for (int i = 0; i < n; ++i) {
        const float* pi = p.data() + static_cast<std::size_t>(i) * k;
        for (int c = 0; c < k; ++c) {
            const double q = (c == labels[static_cast<std::size_t>(i)]) ? on : off;
            const double logp = std::log(std::max(static_cast<double>(pi[c]), 1e-30));
            loss -= q * logp;
            if (dlogits) {
                dlogits->at(i, c) = static_cast<float>((pi[c] - q) / n);
            }
        }
    }
    return loss / n;
}

double im_pseudo_loss(const Tensor& logits, const std::vector<int>& pseudo_labels, Tensor* dlogits) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(pseudo_labels.size()) != n) throw TrainingError("im_pseudo_loss: batch size mismatch");
    Tensor p = softmax(logits);

    // Row entropies and the batch-mean prediction.
    std::vector<double> row_entropy(static_cast<std::size_t>(n), 0.0);
    std::vector<double> mean_p(static_cast<std::size_t>(k), 0.0);
    for (int i = 0; i < n; ++i) {
        const float* pi = p.data() + static_cast<std::size_t>(i) * k;
        double h = 0.0;
        for (int c = 0; c < k; ++c) {
            const double v = std::max(static_cast<double>(pi[c]), 1e-30);
            h -= v * std::log(v);
            mean_p[static_cast<std::size_t>(c)] += v / n;
        }
        row_entropy[static_cast<std::size_t>(i)] = h;
    }
    double ent_mean_pred = 0.0;  // H(mean_i p_i)
    std::vector<double> log_mean_p(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) {
        const double v = std::max(mean_p[static_cast<std::size_t>(c)], 1e-30);
        log_mean_p[static_cast<std::size_t>(c)] = std::log(v);
        ent_mean_pred -= v * std::log(v);
    }

    double mean_row_entropy = 0.0;
    for (double h : row_entropy) mean_row_entropy += h / n;

    double ce = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = pseudo_labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= k) throw TrainingError("im_pseudo_loss: pseudo label out of range");
        const float* pi = p.data() + static_cast<std::size_t>(i) * k;
        ce -= std::log(std::max(static_cast<double>(pi[y]), 1e-30)) / n;
    }

    if (dlogits) {
        *dlogits = Tensor({n, k});
        for (int i = 0; i < n; ++i) {
            const float* pi = p.data() + static_cast<std::size_t>(i) * k;
            const double h_i = row_entropy[static_cast<std::size_t>(i)];
            double dot_logmean = 0.0;  // sum_c p_ic * log(mean_p_c)
            for (int c = 0; c < k; ++c) dot_logmean += pi[c] * log_mean_p[static_cast<std::size_t>(c)];
            const int y = pseudo_labels[static_cast<std::size_t>(i)];
            for (int c = 0; c < k; ++c) {
                const double pv = pi[c];
                const double logp = std::log(std::max(pv, 1e-30));
                // d/dz of mean row entropy
                const double d_ent = -pv * (logp + h_i) / n;
                // d/dz of -H(mean prediction)
                const double d_div = pv * (log_mean_p[static_cast<std::size_t>(c)] - dot_logmean) / n;
                // d/dz of pseudo-label cross-entropy
                const double d_ce = (pv - (c == y ? 1.0 : 0.0)) / n;
                dlogits->at(i, c) = static_cast<float>(d_ent + d_div + d_ce);
            }
        }
    }
    return mean_row_entropy - ent_mean_pred + ce;
}

double mean_prediction_entropy(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor p = softmax(logits);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* pi = p.data() + static_cast<std::size_t>(i) * k;
        double h = 0.0;
        for (int c = 0; c < k; ++c) {
            const double v = std::max(static_cast<double>(pi[c]), 1e-30);
            h -= v * std::log(v);
        }
        total += h;
    }
    return total / n;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    std::vector<int> out(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const float* z = logits.data() + static_cast<std::size_t>(i) * k;
        int best = 0;
        for (int c = 1; c < k; ++c) {
            if (z[c] > z[best]) best = c;
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

}  // namespace fssfda::nn
