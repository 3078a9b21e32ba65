#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "itu/tensor.hpp"

namespace itu {

// 3x3 convolution weights, row-major. Built-ins are kept exactly as printed
// (K_rec2 sums to 1.01 and K_rec3 to 0.99; they are not renormalized).
struct Kernel3x3 {
    std::array<double, 9> w{};
    std::string id = "custom";

    double at(std::size_t r, std::size_t c) const { return w[r * 3 + c]; }
    double sum() const;

    static const std::vector<std::string>& builtin_ids();
    static Kernel3x3 builtin(const std::string& id);  // throws listing ids
    static Kernel3x3 identity();
    // Nine whitespace-separated numbers, row-major.
    static Kernel3x3 from_file(const std::string& path);
};

enum class TransformKind { Pointwise, Mirror, MirrorVec, KernelBlur };

// The unit applied between generator and discriminator. Pointwise units wrap
// a scalar function and its derivative; mirror reverses columns per row;
// kernel_blur is replicate extension followed by a valid 3x3 correlation.
struct TransformUnit {
    std::string name;
    TransformKind kind = TransformKind::Pointwise;
    std::function<double(double)> f, df;
    Kernel3x3 kernel;
    bool injective = false;
    bool surjective = false;
    bool differentiable = true;
    bool continuous = true;

    bool is_identity = false;  // lets the training loop skip the unit entirely

    // Differentiable forward. Accepts [n,n], [N,n,n] or [N,1,n,n] for image
    // kinds; any shape for pointwise.
    Tensor apply(const Tensor& batch) const;
};

const std::vector<std::string>& registry_names();
bool registry_has(const std::string& name);
// Resolves "T1".."T52", "T1-vec", "identity", "blur:<kernel-id>" and
// "blur:file:<path>". Throws with the registry listing on unknown names.
TransformUnit registry_get(const std::string& name);

TransformUnit make_blur_unit(const Kernel3x3& k);

// Fig-3 style extension: duplicate adjacent rows, then adjacent columns.
// Operates on the last two dims; leading dims are treated as a batch.
Tensor replicate_extend(const Tensor& image);

// Valid cross-correlation of an (n+2)x(n+2) extension with a 3x3 kernel.
Tensor convolve3x3(const Tensor& extended, const Kernel3x3& k);

// Adjoint/chain-rule application for a unit: returns d<upstream, T(x)>/dx
// evaluated at saved_input.
Tensor derivative_apply(const TransformUnit& t, const Tensor& upstream_grad,
                        const Tensor& saved_input);

}  // namespace itu
