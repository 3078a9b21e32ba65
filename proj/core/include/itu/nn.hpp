#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "itu/rng.hpp"
#include "itu/tensor.hpp"

namespace itu {

// Standard Adam with bias correction, applied in place to leaf tensors.
struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;  // DCGAN convention
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    // One update from the gradients currently stored on the parameters.
    // Throws on non-finite gradients; parameters are untouched in that case.
    void step();

    void zero_grad();

    const std::vector<Tensor>& params() const { return params_; }
    std::size_t step_count() const { return t_; }

    // Checkpoint access to raw moment vectors.
    std::vector<std::vector<double>>& m() { return m_; }
    std::vector<std::vector<double>>& v() { return v_; }
    void set_step_count(std::size_t t) { t_ = t; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
    AdamConfig cfg_;
};

// Minimal layers over the tensor ops; parameters are requires_grad leaves.
struct Dense {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
    Dense() = default;
    Dense(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.02);
    Tensor forward(const Tensor& x) const { return add_row_bias(matmul(x, weight), bias); }
};

struct Conv {
    Tensor weight;  // [O, I, K, K]
    Tensor bias;    // [O]
    std::size_t stride = 1, pad = 0;
    Conv() = default;
    Conv(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride,
         std::size_t pad, Rng& rng, double init_std = 0.02);
    Tensor forward(const Tensor& x) const {
        return add_channel_bias(conv2d(x, weight, stride, pad), bias);
    }
};

struct ConvTranspose {
    Tensor weight;  // [O, I, K, K]; maps O input channels to I output channels
    Tensor bias;    // [I]
    std::size_t stride = 2, pad = 1;
    ConvTranspose() = default;
    ConvTranspose(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride,
                  std::size_t pad, Rng& rng, double init_std = 0.02);
    Tensor forward(const Tensor& x, std::size_t out_h, std::size_t out_w) const {
        return add_channel_bias(conv_transpose2d(x, weight, stride, pad, out_h, out_w), bias);
    }
};

}  // namespace itu
