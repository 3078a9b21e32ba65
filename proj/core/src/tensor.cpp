#include "itu/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace itu {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

void TensorNode::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(op + ": shape mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

NodePtr make_node(Shape shape, std::vector<double> value,
                  std::vector<NodePtr> parents,
                  std::function<void(TensorNode&)> backprop) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return from(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
    return from(shape, std::vector<double>(shape_numel(shape), v), requires_grad);
}

Tensor Tensor::from(const Shape& shape, std::vector<double> data, bool requires_grad) {
    require(shape_numel(shape) == data.size(),
            "Tensor::from: shape " + shape_str(shape) + " does not match data length " +
                std::to_string(data.size()));
    for (std::size_t d : shape)
        require(d > 0, "Tensor::from: zero extent in shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode>();
    n->shape = shape;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

double Tensor::item() const {
    require(n_->size() == 1, "Tensor::item: tensor has " + std::to_string(n_->size()) +
                                 " elements");
    return n_->value[0];
}

void Tensor::backward() const {
    if (n_->size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(n_->shape));
    // Iterative post-order DFS to get reverse topological order.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(n_.get(), 0);
    seen.insert(n_.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (TensorNode* node : order) node->ensure_grad();
    n_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backprop) node->backprop(*node);
    }
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_finite(const Tensor& t, const std::string& context) {
    if (!all_finite(t.data()))
        throw std::runtime_error(context + ": non-finite value encountered");
}

// ---- elementwise ----

namespace {

Tensor binary_same_shape(const char* name, const Tensor& a, const Tensor& b,
                         const std::function<double(double, double)>& f,
                         // accumulate into (ga, gb) given upstream g and inputs
                         const std::function<void(double, double, double, double&, double&)>& df) {
    if (a.shape() != b.shape()) shape_error(name, a.shape(), b.shape());
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
    NodePtr an = a.node(), bn = b.node();
    return Tensor(make_node(a.shape(), std::move(out), {an, bn}, [an, bn, df](TensorNode& n) {
        const bool ga = an->requires_grad, gb = bn->requires_grad;
        if (ga) an->ensure_grad();
        if (gb) bn->ensure_grad();
        for (std::size_t i = 0; i < n.size(); ++i) {
            double da = 0.0, db = 0.0;
            df(n.grad[i], an->value[i], bn->value[i], da, db);
            if (ga) an->grad[i] += da;
            if (gb) bn->grad[i] += db;
        }
    }));
}

Tensor unary(const Tensor& a, const std::function<double(double)>& f,
             const std::function<double(double)>& df) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
    NodePtr an = a.node();
    return Tensor(make_node(a.shape(), std::move(out), {an}, [an, df](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.size(); ++i)
            an->grad[i] += n.grad[i] * df(an->value[i]);
    }));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_same_shape("add", a, b, [](double x, double y) { return x + y; },
                             [](double g, double, double, double& da, double& db) {
                                 da = g;
                                 db = g;
                             });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_same_shape("sub", a, b, [](double x, double y) { return x - y; },
                             [](double g, double, double, double& da, double& db) {
                                 da = g;
                                 db = -g;
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_same_shape("mul", a, b, [](double x, double y) { return x * y; },
                             [](double g, double x, double y, double& da, double& db) {
                                 da = g * y;
                                 db = g * x;
                             });
}

Tensor neg(const Tensor& a) {
    return unary(a, [](double x) { return -x; }, [](double) { return -1.0; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x * s; }, [s](double) { return s; });
}

Tensor tanh_op(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); },
                 [](double x) {
                     const double t = std::tanh(x);
                     return 1.0 - t * t;
                 });
}

Tensor sigmoid_op(const Tensor& a) {
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    return unary(a, sig, [sig](double x) {
        const double s = sig(x);
        return s * (1.0 - s);
    });
}

Tensor atan_op(const Tensor& a) {
    return unary(a, [](double x) { return std::atan(x); },
                 [](double x) { return 1.0 / (1.0 + x * x); });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary(a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
                 [slope](double x) { return x >= 0.0 ? 1.0 : slope; });
}

Tensor abs_op(const Tensor& a) {
    // Subgradient 0 at the kink.
    return unary(a, [](double x) { return std::fabs(x); },
                 [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor log_op(const Tensor& a) {
    for (double x : a.data())
        if (!(x > 0.0))
            throw std::domain_error("log: non-positive input " + std::to_string(x) +
                                    " (clamp first)");
    return unary(a, [](double x) { return std::log(x); },
                 [](double x) { return 1.0 / x; });
}

Tensor clamp_op(const Tensor& a, double lo, double hi) {
    return unary(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                 [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor pointwise(const Tensor& a, const std::function<double(double)>& f,
                 const std::function<double(double)>& df) {
    return unary(a, f, df);
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.shape().size() == 2 && b.shape().size() == 2,
            "matmul: expects 2-D operands, got " + shape_str(a.shape()) + " and " +
                shape_str(b.shape()));
    const std::size_t n = a.shape()[0], k = a.shape()[1];
    if (b.shape()[0] != k) shape_error("matmul", a.shape(), b.shape());
    const std::size_t m = b.shape()[1];
    std::vector<double> out(n * m, 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] += aip * bv[p * m + j];
        }
    NodePtr an = a.node(), bn = b.node();
    return Tensor(make_node({n, m}, std::move(out), {an, bn},
                            [an, bn, n, k, m](TensorNode& node) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    const double g = node.grad[i * m + j];
                    for (std::size_t p = 0; p < k; ++p)
                        an->grad[i * k + p] += g * bn->value[p * m + j];
                }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av_ip = an->value[i * k + p];
                    for (std::size_t j = 0; j < m; ++j)
                        bn->grad[p * m + j] += node.grad[i * m + j] * av_ip;
                }
        }
    }));
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
    require(x.shape().size() == 2 && b.shape().size() == 1 && x.shape()[1] == b.shape()[0],
            "add_row_bias: incompatible shapes " + shape_str(x.shape()) + " and " +
                shape_str(b.shape()));
    const std::size_t n = x.shape()[0], m = x.shape()[1];
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = x.data()[i * m + j] + b.data()[j];
    NodePtr xn = x.node(), bn = b.node();
    return Tensor(make_node(x.shape(), std::move(out), {xn, bn},
                            [xn, bn, n, m](TensorNode& node) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < n * m; ++i) xn->grad[i] += node.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) bn->grad[j] += node.grad[i * m + j];
        }
    }));
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
    require(x.shape().size() == 4 && b.shape().size() == 1 && x.shape()[1] == b.shape()[0],
            "add_channel_bias: incompatible shapes " + shape_str(x.shape()) + " and " +
                shape_str(b.shape()));
    const std::size_t n = x.shape()[0], c = x.shape()[1],
                      hw = x.shape()[2] * x.shape()[3];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double bv = b.data()[ch];
            const std::size_t base = (i * c + ch) * hw;
            for (std::size_t p = 0; p < hw; ++p) out[base + p] = x.data()[base + p] + bv;
        }
    NodePtr xn = x.node(), bn = b.node();
    return Tensor(make_node(x.shape(), std::move(out), {xn, bn},
                            [xn, bn, n, c, hw](TensorNode& node) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < node.size(); ++i) xn->grad[i] += node.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t base = (i * c + ch) * hw;
                    double s = 0.0;
                    for (std::size_t p = 0; p < hw; ++p) s += node.grad[base + p];
                    bn->grad[ch] += s;
                }
        }
    }));
}

// ---- convolution kernels (shared by conv2d / conv_transpose2d) ----

namespace {

struct ConvDims {
    std::size_t n, ci, h, w, co, k, s, p, ho, wo;
};

// y[n,o,ho,wo] = sum_{i,kh,kw} x[n,i,ho*s-p+kh, wo*s-p+kw] * w[o,i,kh,kw]
void conv_forward(const std::vector<double>& x, const std::vector<double>& wt,
                  std::vector<double>& y, const ConvDims& d) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t o = 0; o < d.co; ++o)
            for (std::size_t i = 0; i < d.ci; ++i) {
                const double* xp = &x[(n * d.ci + i) * d.h * d.w];
                const double* wp = &wt[(o * d.ci + i) * d.k * d.k];
                double* yp = &y[(n * d.co + o) * d.ho * d.wo];
                for (std::size_t ho = 0; ho < d.ho; ++ho)
                    for (std::size_t kh = 0; kh < d.k; ++kh) {
                        const std::ptrdiff_t ih =
                            static_cast<std::ptrdiff_t>(ho * d.s + kh) -
                            static_cast<std::ptrdiff_t>(d.p);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
                        for (std::size_t wo = 0; wo < d.wo; ++wo)
                            for (std::size_t kw = 0; kw < d.k; ++kw) {
                                const std::ptrdiff_t iw =
                                    static_cast<std::ptrdiff_t>(wo * d.s + kw) -
                                    static_cast<std::ptrdiff_t>(d.p);
                                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w))
                                    continue;
                                yp[ho * d.wo + wo] +=
                                    xp[ih * d.w + iw] * wp[kh * d.k + kw];
                            }
                    }
            }
}

// gx[n,i,h,w] += sum gy[n,o,ho,wo] * w[o,i,kh,kw], h = ho*s-p+kh
void conv_input_grad(const std::vector<double>& gy, const std::vector<double>& wt,
                     std::vector<double>& gx, const ConvDims& d) {
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t o = 0; o < d.co; ++o)
            for (std::size_t i = 0; i < d.ci; ++i) {
                double* xp = &gx[(n * d.ci + i) * d.h * d.w];
                const double* wp = &wt[(o * d.ci + i) * d.k * d.k];
                const double* yp = &gy[(n * d.co + o) * d.ho * d.wo];
                for (std::size_t ho = 0; ho < d.ho; ++ho)
                    for (std::size_t kh = 0; kh < d.k; ++kh) {
                        const std::ptrdiff_t ih =
                            static_cast<std::ptrdiff_t>(ho * d.s + kh) -
                            static_cast<std::ptrdiff_t>(d.p);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
                        for (std::size_t wo = 0; wo < d.wo; ++wo)
                            for (std::size_t kw = 0; kw < d.k; ++kw) {
                                const std::ptrdiff_t iw =
                                    static_cast<std::ptrdiff_t>(wo * d.s + kw) -
                                    static_cast<std::ptrdiff_t>(d.p);
                                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w))
                                    continue;
                                xp[ih * d.w + iw] +=
                                    yp[ho * d.wo + wo] * wp[kh * d.k + kw];
                            }
                    }
            }
}

// gw[o,i,kh,kw] += sum_n,ho,wo x[n,i,ho*s-p+kh, wo*s-p+kw] * gy[n,o,ho,wo]
void conv_weight_grad(const std::vector<double>& x, const std::vector<double>& gy,
                      std::vector<double>& gw, const ConvDims& d) {
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t o = 0; o < d.co; ++o)
            for (std::size_t i = 0; i < d.ci; ++i) {
                const double* xp = &x[(n * d.ci + i) * d.h * d.w];
                double* wp = &gw[(o * d.ci + i) * d.k * d.k];
                const double* yp = &gy[(n * d.co + o) * d.ho * d.wo];
                for (std::size_t ho = 0; ho < d.ho; ++ho)
                    for (std::size_t kh = 0; kh < d.k; ++kh) {
                        const std::ptrdiff_t ih =
                            static_cast<std::ptrdiff_t>(ho * d.s + kh) -
                            static_cast<std::ptrdiff_t>(d.p);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
                        for (std::size_t wo = 0; wo < d.wo; ++wo)
                            for (std::size_t kw = 0; kw < d.k; ++kw) {
                                const std::ptrdiff_t iw =
                                    static_cast<std::ptrdiff_t>(wo * d.s + kw) -
                                    static_cast<std::ptrdiff_t>(d.p);
                                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w))
                                    continue;
                                wp[kh * d.k + kw] +=
                                    xp[ih * d.w + iw] * yp[ho * d.wo + wo];
                            }
                    }
            }
}

ConvDims conv_dims(const char* name, const Shape& xs, const Shape& ws, std::size_t stride,
                   std::size_t pad) {
    require(xs.size() == 4, std::string(name) + ": input must be 4-D, got " + shape_str(xs));
    require(ws.size() == 4 && ws[2] == ws[3],
            std::string(name) + ": weight must be [O,I,K,K], got " + shape_str(ws));
    require(xs[1] == ws[1], std::string(name) + ": channel mismatch, input " + shape_str(xs) +
                                " vs weight " + shape_str(ws));
    ConvDims d;
    d.n = xs[0];
    d.ci = xs[1];
    d.h = xs[2];
    d.w = xs[3];
    d.co = ws[0];
    d.k = ws[2];
    d.s = stride;
    d.p = pad;
    require(stride >= 1, std::string(name) + ": stride must be >= 1");
    require(d.h + 2 * pad >= d.k && d.w + 2 * pad >= d.k,
            std::string(name) + ": kernel larger than padded input");
    d.ho = (d.h + 2 * pad - d.k) / stride + 1;
    d.wo = (d.w + 2 * pad - d.k) / stride + 1;
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad,
              PadMode mode) {
    if (mode == PadMode::Replicate) {
        return conv2d(replicate_pad(x, pad), w, stride, 0, PadMode::Zero);
    }
    const ConvDims d = conv_dims("conv2d", x.shape(), w.shape(), stride, pad);
    std::vector<double> out(d.n * d.co * d.ho * d.wo);
    conv_forward(x.data(), w.data(), out, d);
    NodePtr xn = x.node(), wn = w.node();
    return Tensor(make_node({d.n, d.co, d.ho, d.wo}, std::move(out), {xn, wn},
                            [xn, wn, d](TensorNode& node) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            conv_input_grad(node.grad, wn->value, xn->grad, d);
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            conv_weight_grad(xn->value, node.grad, wn->grad, d);
        }
    }));
}

Tensor conv_transpose2d(const Tensor& y, const Tensor& w, std::size_t stride,
                        std::size_t pad, std::size_t out_h, std::size_t out_w) {
    Shape xs = {y.shape().size() == 4 ? y.shape()[0] : 0, w.shape().size() == 4 ? w.shape()[1] : 0,
                out_h, out_w};
    const ConvDims d = conv_dims("conv_transpose2d", xs, w.shape(), stride, pad);
    require(y.shape().size() == 4 && y.shape()[1] == w.shape()[0] && y.shape()[2] == d.ho &&
                y.shape()[3] == d.wo,
            "conv_transpose2d: input " + shape_str(y.shape()) +
                " inconsistent with weight " + shape_str(w.shape()) + ", stride " +
                std::to_string(stride) + ", output " + std::to_string(out_h) + "x" +
                std::to_string(out_w));
    std::vector<double> out(d.n * d.ci * d.h * d.w, 0.0);
    conv_input_grad(y.data(), w.data(), out, d);
    NodePtr yn = y.node(), wn = w.node();
    return Tensor(make_node({d.n, d.ci, d.h, d.w}, std::move(out), {yn, wn},
                            [yn, wn, d](TensorNode& node) {
        if (yn->requires_grad) {
            yn->ensure_grad();
            std::vector<double> gy(yn->size());
            conv_forward(node.grad, wn->value, gy, d);
            for (std::size_t i = 0; i < gy.size(); ++i) yn->grad[i] += gy[i];
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            conv_weight_grad(node.grad, yn->value, wn->grad, d);
        }
    }));
}

Tensor replicate_pad(const Tensor& x, std::size_t p) {
    const Shape& s = x.shape();
    require(s.size() >= 2, "replicate_pad: need at least 2 dims, got " + shape_str(s));
    const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
    std::size_t lead = 1;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) lead *= s[i];
    const std::size_t oh = h + 2 * p, ow = w + 2 * p;
    Shape os = s;
    os[os.size() - 2] = oh;
    os[os.size() - 1] = ow;
    std::vector<double> out(lead * oh * ow);
    auto clampi = [](std::ptrdiff_t v, std::size_t n) {
        return static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::max<std::ptrdiff_t>(v, 0), n - 1));
    };
    for (std::size_t l = 0; l < lead; ++l)
        for (std::size_t i = 0; i < oh; ++i) {
            const std::size_t si = clampi(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(p), h);
            for (std::size_t j = 0; j < ow; ++j) {
                const std::size_t sj = clampi(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(p), w);
                out[(l * oh + i) * ow + j] = x.data()[(l * h + si) * w + sj];
            }
        }
    NodePtr xn = x.node();
    return Tensor(make_node(os, std::move(out), {xn},
                            [xn, lead, h, w, oh, ow, p, clampi](TensorNode& node) {
        xn->ensure_grad();
        for (std::size_t l = 0; l < lead; ++l)
            for (std::size_t i = 0; i < oh; ++i) {
                const std::size_t si = clampi(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(p), h);
                for (std::size_t j = 0; j < ow; ++j) {
                    const std::size_t sj = clampi(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(p), w);
                    xn->grad[(l * h + si) * w + sj] += node.grad[(l * oh + i) * ow + j];
                }
            }
    }));
}

Tensor reshape(const Tensor& a, const Shape& shape) {
    require(shape_numel(shape) == a.size(),
            "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    NodePtr an = a.node();
    return Tensor(make_node(shape, a.data(), {an}, [an](TensorNode& node) {
        an->ensure_grad();
        for (std::size_t i = 0; i < node.size(); ++i) an->grad[i] += node.grad[i];
    }));
}

Tensor concat0(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat0: empty input list");
    Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
    std::size_t total0 = 0;
    for (const auto& t : parts) {
        Shape tt(t.shape().begin() + 1, t.shape().end());
        if (tt != tail) shape_error("concat0", parts[0].shape(), t.shape());
        total0 += t.shape()[0];
    }
    Shape os = parts[0].shape();
    os[0] = total0;
    std::vector<double> out;
    out.reserve(shape_numel(os));
    std::vector<NodePtr> ps;
    for (const auto& t : parts) {
        out.insert(out.end(), t.data().begin(), t.data().end());
        ps.push_back(t.node());
    }
    return Tensor(make_node(os, std::move(out), ps, [ps](TensorNode& node) {
        std::size_t off = 0;
        for (const auto& p : ps) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < p->size(); ++i) p->grad[i] += node.grad[off + i];
            }
            off += p->size();
        }
    }));
}

Tensor mirror_lastdim(const Tensor& a) {
    const Shape& s = a.shape();
    require(!s.empty(), "mirror_lastdim: scalar input");
    const std::size_t w = s.back();
    const std::size_t rows = a.size() / w;
    std::vector<double> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = a.data()[r * w + (w - 1 - j)];
    NodePtr an = a.node();
    return Tensor(make_node(s, std::move(out), {an}, [an, rows, w](TensorNode& node) {
        an->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j)
                an->grad[r * w + (w - 1 - j)] += node.grad[r * w + j];
    }));
}

Tensor reverse_all(const Tensor& a) {
    std::vector<double> out(a.data().rbegin(), a.data().rend());
    NodePtr an = a.node();
    return Tensor(make_node(a.shape(), std::move(out), {an}, [an](TensorNode& node) {
        an->ensure_grad();
        const std::size_t n = node.size();
        for (std::size_t i = 0; i < n; ++i) an->grad[n - 1 - i] += node.grad[i];
    }));
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    NodePtr an = a.node();
    return Tensor(make_node({1}, {s}, {an}, [an](TensorNode& node) {
        an->ensure_grad();
        for (double& g : an->grad) g += node.grad[0];
    }));
}

Tensor mean_all(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a.data()) s += v;
    NodePtr an = a.node();
    return Tensor(make_node({1}, {s * inv}, {an}, [an, inv](TensorNode& node) {
        an->ensure_grad();
        for (double& g : an->grad) g += node.grad[0] * inv;
    }));
}

}  // namespace itu
