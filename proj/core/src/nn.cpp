#include "itu/nn.hpp"

#include <cmath>

namespace itu {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    for (const auto& p : params_) {
        if (p.grad().size() != p.size())
            throw std::runtime_error("Adam::step: parameter has no gradient");
        if (!all_finite(p.grad()))
            throw std::runtime_error("Adam::step: non-finite gradient, step aborted");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& w = params_[k].mutable_data();
        const auto& g = params_[k].grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

namespace {

Tensor init_weight(const Shape& shape, Rng& rng, double std) {
    std::vector<double> w(shape_numel(shape));
    for (double& x : w) x = rng.normal(0.0, std);
    return Tensor::from(shape, std::move(w), true);
}

}  // namespace

Dense::Dense(std::size_t in, std::size_t out, Rng& rng, double init_std)
    : weight(init_weight({in, out}, rng, init_std)), bias(Tensor::zeros({out}, true)) {}

Conv::Conv(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride_,
           std::size_t pad_, Rng& rng, double init_std)
    : weight(init_weight({out_ch, in_ch, k, k}, rng, init_std)),
      bias(Tensor::zeros({out_ch}, true)),
      stride(stride_),
      pad(pad_) {}

ConvTranspose::ConvTranspose(std::size_t in_ch, std::size_t out_ch, std::size_t k,
                             std::size_t stride_, std::size_t pad_, Rng& rng,
                             double init_std)
    : weight(init_weight({in_ch, out_ch, k, k}, rng, init_std)),
      bias(Tensor::zeros({out_ch}, true)),
      stride(stride_),
      pad(pad_) {}

}  // namespace itu
