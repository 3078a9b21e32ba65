#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace itu {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One recorded operation result. Leaves have no parents and no backprop
// function. The graph of parent pointers is the tape: walking it in reverse
// topological order from a scalar loss visits each node exactly once.
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized on demand during backward
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(TensorNode&)> backprop;

    std::size_t size() const { return value.size(); }
    void ensure_grad();
};

// Value-semantic handle to a node. Copies alias the same node, matching the
// usual autodiff-framework convention.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr n) : n_(std::move(n)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double v, bool requires_grad = false);
    static Tensor from(const Shape& shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    std::size_t size() const { return n_->size(); }
    bool requires_grad() const { return n_->requires_grad; }

    const std::vector<double>& data() const { return n_->value; }
    std::vector<double>& mutable_data() { return n_->value; }
    const std::vector<double>& grad() const { return n_->grad; }
    std::vector<double>& mutable_grad() { return n_->grad; }

    double item() const;

    void zero_grad() { n_->grad.assign(n_->value.size(), 0.0); }

    // Reverse pass from a scalar. Accumulates dLoss/dLeaf into every
    // requires_grad node reachable through the tape.
    void backward() const;

    NodePtr node() const { return n_; }

private:
    NodePtr n_;
};

bool all_finite(const std::vector<double>& v);
void check_finite(const Tensor& t, const std::string& context);

// Elementwise / scalar ops.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

// Pointwise nonlinearities.
Tensor tanh_op(const Tensor& a);
Tensor sigmoid_op(const Tensor& a);
Tensor atan_op(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor abs_op(const Tensor& a);
Tensor log_op(const Tensor& a);  // throws on non-positive input
Tensor clamp_op(const Tensor& a, double lo, double hi);

// Generic differentiable scalar map; `df` receives the saved input.
Tensor pointwise(const Tensor& a, const std::function<double(double)>& f,
                 const std::function<double(double)>& df);

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);           // [n,k]x[k,m]
Tensor add_row_bias(const Tensor& x, const Tensor& b);     // [n,m]+[m]
Tensor add_channel_bias(const Tensor& x, const Tensor& b); // [n,c,h,w]+[c]

enum class PadMode { Zero, Replicate };

// x: [N,I,H,W], w: [O,I,K,K]. Output [N,O,Ho,Wo].
Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride,
              std::size_t pad, PadMode mode = PadMode::Zero);

// Exact adjoint of conv2d with the same weight layout [O,I,K,K] and zero
// padding: y [N,O,Ho,Wo] -> [N,I,H,W] with Ho == (H + 2*pad - K)/stride + 1.
Tensor conv_transpose2d(const Tensor& y, const Tensor& w, std::size_t stride,
                        std::size_t pad, std::size_t out_h, std::size_t out_w);

// Clamp-index padding of the last two dims by p on each side. Equivalent to
// the row-then-column replicate extension for any p.
Tensor replicate_pad(const Tensor& x, std::size_t p);

// Structure ops.
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor concat0(const std::vector<Tensor>& parts);
Tensor mirror_lastdim(const Tensor& a);  // per-row column reversal
Tensor reverse_all(const Tensor& a);     // flattened full reversal
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

}  // namespace itu
