#pragma once

// Dense row-major tensors with a tape-style reverse-mode autodiff graph.
//
// A Tensor is a shared handle: copies alias the same storage. Leaf tensors
// created with requires_grad=true act as parameters; every op recorded on a
// Graph pushes a backward closure, and Graph::backward replays them in
// reverse execution order.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddi {

using Shape = std::vector<std::size_t>;

/// Per-position validity flags for padded sequences (1 = real token).
/// An empty mask means every position is valid.
using Mask = std::vector<std::uint8_t>;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename Real>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    /// Throws DimensionError if the data length disagrees with the shape and
    /// NonFiniteError if any value is NaN or infinite.
    static Tensor from_data(Shape shape, std::vector<Real> data, bool requires_grad = false);
    static Tensor vector(std::vector<Real> data, bool requires_grad = false);
    static Tensor scalar(Real value, bool requires_grad = false);
    /// Skips validation; for op outputs whose shape is already known-good.
    static Tensor adopt(Shape shape, std::vector<Real> data, bool requires_grad);

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    std::size_t rank() const { return s_->shape.size(); }
    std::size_t numel() const { return s_->data.size(); }
    std::size_t dim(std::size_t axis) const { return s_->shape.at(axis); }

    std::span<Real> data() { return s_->data; }
    std::span<const Real> data() const { return s_->data; }
    std::vector<Real>& values() { return s_->data; }
    const std::vector<Real>& values() const { return s_->data; }

    Real item() const;
    Real at(std::size_t i) const { return s_->data.at(i); }
    Real at(std::size_t row, std::size_t col) const;

    bool requires_grad() const { return s_->requires_grad; }
    void set_requires_grad(bool flag) { s_->requires_grad = flag; }

    bool has_grad() const { return !s_->grad.empty(); }
    /// Allocates a zero gradient buffer if none exists.
    /// Gradients accumulate through any handle, including const ones.
    std::span<Real> ensure_grad() const;
    std::span<Real> grad() { return s_->grad; }
    std::span<const Real> grad() const { return s_->grad; }
    void zero_grad();
    void clear_grad() { s_->grad.clear(); }

    bool all_finite() const;

    /// Deep copy of values (and requires_grad), without gradient.
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

private:
    struct Storage {
        Shape shape;
        std::vector<Real> data;
        std::vector<Real> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

/// Ordered record of executed ops. Ops only record when the graph is
/// recording and at least one input requires a gradient; inference passes use
/// a non-recording graph.
template <typename Real>
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const { return recording_; }
    std::size_t size() const { return backward_ops_.size(); }

    void record(std::function<void()> backward_op);

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded op once, newest first.
    void backward(Tensor<Real>& loss);

    /// Number of closures executed by the last backward sweep.
    std::size_t last_sweep_visits() const { return visits_; }

private:
    bool recording_;
    std::vector<std::function<void()>> backward_ops_;
    std::size_t visits_ = 0;
};

enum class Pointwise { Sigmoid, Tanh, Add, Mul };

namespace ops {

/// Rank-2 x rank-2 is the usual product. A rank-1 right operand is treated
/// as a column (result rank-1, length p); a rank-1 left operand as a row
/// (result rank-1, length r).
template <typename Real>
Tensor<Real> matmul(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> pointwise(Graph<Real>& g, Pointwise mode, const Tensor<Real>& a,
                       const Tensor<Real>& b = Tensor<Real>{});

template <typename Real>
Tensor<Real> sigmoid(Graph<Real>& g, const Tensor<Real>& a) {
    return pointwise(g, Pointwise::Sigmoid, a);
}
template <typename Real>
Tensor<Real> tanh(Graph<Real>& g, const Tensor<Real>& a) {
    return pointwise(g, Pointwise::Tanh, a);
}
template <typename Real>
Tensor<Real> add(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
    return pointwise(g, Pointwise::Add, a, b);
}
template <typename Real>
Tensor<Real> mul(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
    return pointwise(g, Pointwise::Mul, a, b);
}

/// Max-subtracted softmax over a rank-1 tensor. Masked-out positions get
/// probability exactly 0; at least one position must remain.
template <typename Real>
Tensor<Real> softmax_vec(Graph<Real>& g, const Tensor<Real>& v, const Mask& mask = {});

/// Concatenation along the last axis. Rank-1 operands give [p+q]; rank-2
/// operands must share their row count and give [m x (p+q)].
template <typename Real>
Tensor<Real> concat(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b);

/// Row lookup: result[t] = table[ids[t]]. Gradient scatters back into the
/// looked-up rows only.
template <typename Real>
Tensor<Real> gather_rows(Graph<Real>& g, const Tensor<Real>& table, std::span<const int> ids);

template <typename Real>
Tensor<Real> row(Graph<Real>& g, const Tensor<Real>& matrix, std::size_t index);

/// Stacks equal-length rank-1 tensors into a [rows.size() x n] matrix.
template <typename Real>
Tensor<Real> stack_rows(Graph<Real>& g, const std::vector<Tensor<Real>>& rows);

template <typename Real>
Tensor<Real> sum(Graph<Real>& g, const Tensor<Real>& a);

template <typename Real>
Tensor<Real> scale(Graph<Real>& g, const Tensor<Real>& a, Real factor);

/// Multiplies by a fixed 0/1 keep mask scaled by 1/keep_prob.
template <typename Real>
Tensor<Real> dropout(Graph<Real>& g, const Tensor<Real>& a, Real keep_prob,
                     const std::vector<std::uint8_t>& keep);

}  // namespace ops
}  // namespace ddi
