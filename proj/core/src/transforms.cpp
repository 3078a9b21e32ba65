#include "itu/transforms.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace itu {

double Kernel3x3::sum() const {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

const std::vector<std::string>& Kernel3x3::builtin_ids() {
    static const std::vector<std::string> ids = {"K_sharpen", "K_blur", "K_rec1",
                                                 "K_rec2", "K_rec3"};
    return ids;
}

Kernel3x3 Kernel3x3::builtin(const std::string& id) {
    Kernel3x3 k;
    k.id = id;
    if (id == "K_sharpen") {
        k.w = {0.01, 0.08, 0.01, 0.08, 0.64, 0.08, 0.01, 0.08, 0.01};
    } else if (id == "K_blur" || id == "K_rec1") {
        for (double& x : k.w) x = 1.0 / 9.0;
    } else if (id == "K_rec2") {
        k.w = {0.1, 0.12, 0.1, 0.12, 0.13, 0.12, 0.1, 0.12, 0.1};
    } else if (id == "K_rec3") {
        k.w = {0.08, 0.12, 0.08, 0.12, 0.19, 0.12, 0.08, 0.12, 0.08};
    } else {
        std::string msg = "unknown kernel id '" + id + "'; built-ins:";
        for (const auto& s : builtin_ids()) msg += " " + s;
        throw std::invalid_argument(msg);
    }
    return k;
}

Kernel3x3 Kernel3x3::identity() {
    Kernel3x3 k;
    k.id = "identity";
    k.w = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    return k;
}

Kernel3x3 Kernel3x3::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel file: " + path);
    Kernel3x3 k;
    k.id = "file:" + path;
    for (std::size_t i = 0; i < 9; ++i) {
        if (!(in >> k.w[i]))
            throw std::runtime_error("kernel file " + path +
                                     ": expected 9 numbers, got " + std::to_string(i));
    }
    double extra;
    if (in >> extra)
        throw std::runtime_error("kernel file " + path + ": more than 9 numbers");
    return k;
}

namespace {

// Reshape any image-shaped tensor to [lead,1,n,n]; returns n.
std::size_t image_side(const Shape& s, const char* who) {
    if (s.size() < 2 || s[s.size() - 1] != s[s.size() - 2] || s.back() < 1)
        throw std::invalid_argument(std::string(who) +
                                    ": expected square image shape, got " + shape_str(s));
    return s.back();
}

Tensor kernel_tensor(const Kernel3x3& k) {
    return Tensor::from({1, 1, 3, 3}, std::vector<double>(k.w.begin(), k.w.end()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TransformUnit pointwise_unit(std::string name, std::function<double(double)> f,
                             std::function<double(double)> df, bool inj, bool surj,
                             bool diff = true, bool cont = true) {
    TransformUnit t;
    t.name = std::move(name);
    t.kind = TransformKind::Pointwise;
    t.f = std::move(f);
    t.df = std::move(df);
    t.injective = inj;
    t.surjective = surj;
    t.differentiable = diff;
    t.continuous = cont;
    return t;
}

std::map<std::string, TransformUnit> build_registry() {
    std::map<std::string, TransformUnit> r;

    TransformUnit t1;
    t1.name = "T1";
    t1.kind = TransformKind::Mirror;
    t1.injective = t1.surjective = true;
    r["T1"] = t1;

    // Literal reading of the flipped-index matrix acting on the flattened
    // vector: full reversal, i.e. a 180-degree rotation of the image.
    TransformUnit t1v = t1;
    t1v.name = "T1-vec";
    t1v.kind = TransformKind::MirrorVec;
    r["T1-vec"] = t1v;

    r["T21"] = pointwise_unit(
        "T21", [](double x) { return sigmoid(x); },
        [](double x) {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        },
        true, false);
    r["T22"] = pointwise_unit(
        "T22", [](double x) { return std::atan(x); },
        [](double x) { return 1.0 / (1.0 + x * x); }, true, false);
    r["T23"] = pointwise_unit(
        "T23", [](double x) { return std::tanh(x); },
        [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        },
        true, false);
    r["T31"] = pointwise_unit(
        "T31", [](double x) { return x + 0.25 - 0.5 * sigmoid(10.0 * x + 9.0); },
        [](double x) {
            const double s = sigmoid(10.0 * x + 9.0);
            return 1.0 - 5.0 * s * (1.0 - s);
        },
        false, true);
    r["T32"] = pointwise_unit(
        "T32", [](double x) { return x + 0.5 * std::sin(M_PI * x); },
        [](double x) { return 1.0 + 0.5 * M_PI * std::cos(M_PI * x); }, false, true);
    r["T4"] = pointwise_unit(
        "T4", [](double x) { return x * x + std::sin(M_PI * x); },
        [](double x) { return 2.0 * x + M_PI * std::cos(M_PI * x); }, false, false);
    // T51(0) := 0 (continuous extension); derivative at 0 defined as 0.
    r["T51"] = pointwise_unit(
        "T51", [](double x) { return x == 0.0 ? 0.0 : x * std::sin(1.0 / x); },
        [](double x) {
            if (x == 0.0) return 0.0;
            return std::sin(1.0 / x) - std::cos(1.0 / x) / x;
        },
        false, false, false, false);
    r["T52"] = pointwise_unit(
        "T52", [](double x) { return std::fabs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, false, false,
        false, false);

    TransformUnit id = pointwise_unit(
        "identity", [](double x) { return x; }, [](double) { return 1.0; }, true, true);
    id.is_identity = true;
    r["identity"] = id;

    for (const auto& kid : Kernel3x3::builtin_ids())
        r["blur:" + kid] = make_blur_unit(Kernel3x3::builtin(kid));
    return r;
}

const std::map<std::string, TransformUnit>& registry() {
    static const std::map<std::string, TransformUnit> r = build_registry();
    return r;
}

}  // namespace

const std::vector<std::string>& registry_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : registry()) v.push_back(k);
        return v;
    }();
    return names;
}

bool registry_has(const std::string& name) {
    if (registry().count(name)) return true;
    return name.rfind("blur:file:", 0) == 0;
}

TransformUnit registry_get(const std::string& name) {
    if (name.rfind("blur:file:", 0) == 0)
        return make_blur_unit(Kernel3x3::from_file(name.substr(10)));
    auto it = registry().find(name);
    if (it == registry().end()) {
        std::string msg = "unknown transform '" + name + "'; registered:";
        for (const auto& n : registry_names()) msg += " " + n;
        msg += " blur:file:<path>";
        throw std::invalid_argument(msg);
    }
    return it->second;
}

TransformUnit make_blur_unit(const Kernel3x3& k) {
    TransformUnit t;
    t.name = "blur:" + k.id;
    t.kind = TransformKind::KernelBlur;
    t.kernel = k;
    t.injective = false;  // not established; treated as a kernel map, no flags claimed
    t.surjective = false;
    return t;
}

Tensor TransformUnit::apply(const Tensor& batch) const {
    switch (kind) {
        case TransformKind::Pointwise:
            if (is_identity) return batch;
            return pointwise(batch, f, df);
        case TransformKind::Mirror:
            image_side(batch.shape(), "mirror");
            return mirror_lastdim(batch);
        case TransformKind::MirrorVec: {
            const std::size_t n = image_side(batch.shape(), "mirror-vec");
            // Reverse each n*n sample independently.
            const Shape& s = batch.shape();
            std::size_t lead = batch.size() / (n * n);
            Tensor flat = reshape(batch, {lead, n * n});
            Tensor rev = mirror_lastdim(flat);  // per-sample full reversal
            return reshape(rev, s);
        }
        case TransformKind::KernelBlur: {
            const std::size_t n = image_side(batch.shape(), "kernel_blur");
            const Shape& s = batch.shape();
            const std::size_t lead = batch.size() / (n * n);
            Tensor x = reshape(batch, {lead, 1, n, n});
            Tensor y = conv2d(replicate_pad(x, 1), kernel_tensor(kernel), 1, 0);
            return reshape(y, s);
        }
    }
    throw std::logic_error("TransformUnit::apply: bad kind");
}

Tensor replicate_extend(const Tensor& image) {
    image_side(image.shape(), "replicate_extend");
    return replicate_pad(image, 1);
}

Tensor convolve3x3(const Tensor& extended, const Kernel3x3& k) {
    const Shape& s = extended.shape();
    if (s.size() < 2 || s[s.size() - 1] != s[s.size() - 2] || s.back() < 3)
        throw std::invalid_argument("convolve3x3: expected square extended image >= 3x3, got " +
                                    shape_str(s));
    const std::size_t m = s.back();
    const std::size_t lead = extended.size() / (m * m);
    Tensor x = reshape(extended, {lead, 1, m, m});
    Tensor y = conv2d(x, kernel_tensor(k), 1, 0);
    Shape os = s;
    os[os.size() - 1] = m - 2;
    os[os.size() - 2] = m - 2;
    return reshape(y, os);
}

Tensor derivative_apply(const TransformUnit& t, const Tensor& upstream_grad,
                        const Tensor& saved_input) {
    if (upstream_grad.shape() != saved_input.shape())
        throw std::invalid_argument("derivative_apply: grad shape " +
                                    shape_str(upstream_grad.shape()) +
                                    " differs from input shape " +
                                    shape_str(saved_input.shape()));
    Tensor leaf = Tensor::from(saved_input.shape(), saved_input.data(), true);
    Tensor out = t.apply(leaf);
    Tensor loss = sum_all(mul(out, Tensor::from(upstream_grad.shape(), upstream_grad.data())));
    loss.backward();
    return Tensor::from(saved_input.shape(), leaf.grad());
}

}  // namespace itu
