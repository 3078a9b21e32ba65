#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "itu/rng.hpp"
#include "itu/tensor.hpp"

namespace test_support {

// Central finite differences against reverse-mode gradients. `loss_fn` must
// rebuild the loss from the leaves' current values on every call. Returns
// the worst relative error over all leaf elements.
inline double max_grad_rel_err(const std::function<itu::Tensor()>& loss_fn,
                               std::vector<itu::Tensor> leaves, double h = 1e-5) {
    itu::Tensor loss = loss_fn();
    for (auto& l : leaves) l.zero_grad();
    loss.backward();
    std::vector<std::vector<double>> autodiff;
    for (auto& l : leaves) autodiff.push_back(l.grad());

    double worst = 0.0;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        auto& vals = leaves[k].mutable_data();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double up = loss_fn().item();
            vals[i] = orig - h;
            const double down = loss_fn().item();
            vals[i] = orig;
            const double fd = (up - down) / (2.0 * h);
            const double scale = std::max({std::fabs(fd), std::fabs(autodiff[k][i]), 1e-3});
            worst = std::max(worst, std::fabs(autodiff[k][i] - fd) / scale);
        }
    }
    return worst;
}

inline itu::Tensor random_tensor(const itu::Shape& shape, itu::Rng& rng, double scale = 1.0,
                                 bool requires_grad = false) {
    std::vector<double> v(itu::shape_numel(shape));
    for (double& x : v) x = rng.uniform(-scale, scale);
    return itu::Tensor::from(shape, std::move(v), requires_grad);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Smooth synthetic digit-like blobs for tests that need image content.
inline std::vector<double> synthetic_images(std::size_t count, std::size_t side,
                                            std::uint64_t seed) {
    itu::Rng rng(seed);
    std::vector<double> out(count * side * side, -1.0);
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t blobs = 2 + rng.below(3);
        std::vector<double> cx(blobs), cy(blobs), sg(blobs);
        for (std::size_t b = 0; b < blobs; ++b) {
            cx[b] = rng.uniform(0.2, 0.8) * static_cast<double>(side);
            cy[b] = rng.uniform(0.2, 0.8) * static_cast<double>(side);
            sg[b] = rng.uniform(0.05, 0.15) * static_cast<double>(side);
        }
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
                double v = 0.0;
                for (std::size_t b = 0; b < blobs; ++b) {
                    const double dx = (static_cast<double>(j) - cx[b]) / sg[b];
                    const double dy = (static_cast<double>(i) - cy[b]) / sg[b];
                    v += std::exp(-0.5 * (dx * dx + dy * dy));
                }
                out[(n * side + i) * side + j] = std::min(1.0, -1.0 + 2.0 * v);
            }
    }
    return out;
}

// Two-mode 2x2 toy set with a strong left/right asymmetry, so mirroring the
// images is clearly visible in per-pixel means. Pixels are pre-quantized to
// the byte grid; suitable for write_idx round trips.
inline std::vector<double> toy_two_mode_images(std::size_t count, std::uint64_t seed) {
    itu::Rng rng(seed);
    const double mode_a[4] = {0.9, -0.8, 0.6, -0.7};
    const double mode_b[4] = {0.5, -0.3, 0.8, -0.1};
    std::vector<double> out(count * 4);
    for (std::size_t i = 0; i < count; ++i) {
        const double* base = (rng.uniform() < 0.5) ? mode_a : mode_b;
        for (std::size_t p = 0; p < 4; ++p) {
            double v = base[p] + rng.uniform(-0.05, 0.05);
            out[i * 4 + p] = std::clamp(v, -1.0, 1.0);
        }
    }
    return out;
}

}  // namespace test_support
