#include "ddi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ddi {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

// ---------------------------------------------------------------------------
// Tensor

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
    const auto n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<Real>(n, Real(0)), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from_data(Shape shape, std::vector<Real> data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape) + " does not hold " +
                             std::to_string(data.size()) + " values");
    }
    for (auto extent : shape) {
        if (extent == 0 && shape.size() > 1) {
            throw DimensionError("tensor extents must be positive: " + shape_to_string(shape));
        }
    }
    for (Real v : data) {
        if (!std::isfinite(v)) throw NonFiniteError("non-finite value in tensor data");
    }
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = std::move(shape);
    t.s_->data = std::move(data);
    t.s_->requires_grad = requires_grad;
    return t;
}

template <typename Real>
Tensor<Real> Tensor<Real>::vector(std::vector<Real> data, bool requires_grad) {
    Shape shape{data.size()};
    return from_data(std::move(shape), std::move(data), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
    return from_data(Shape{}, std::vector<Real>{value}, requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::adopt(Shape shape, std::vector<Real> data, bool requires_grad) {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = std::move(shape);
    t.s_->data = std::move(data);
    t.s_->requires_grad = requires_grad;
    return t;
}

template <typename Real>
Real Tensor<Real>::item() const {
    if (numel() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
    }
    return s_->data[0];
}

template <typename Real>
Real Tensor<Real>::at(std::size_t r, std::size_t c) const {
    if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor");
    return s_->data.at(r * s_->shape[1] + c);
}

template <typename Real>
std::span<Real> Tensor<Real>::ensure_grad() const {
    if (s_->grad.empty()) s_->grad.assign(s_->data.size(), Real(0));
    return s_->grad;
}

template <typename Real>
void Tensor<Real>::zero_grad() {
    std::fill(s_->grad.begin(), s_->grad.end(), Real(0));
}

template <typename Real>
bool Tensor<Real>::all_finite() const {
    return std::all_of(s_->data.begin(), s_->data.end(),
                       [](Real v) { return std::isfinite(v); });
}

template <typename Real>
Tensor<Real> Tensor<Real>::clone() const {
    Tensor t;
    t.s_ = std::make_shared<Storage>();
    t.s_->shape = s_->shape;
    t.s_->data = s_->data;
    t.s_->requires_grad = s_->requires_grad;
    return t;
}

// ---------------------------------------------------------------------------
// Graph

template <typename Real>
void Graph<Real>::record(std::function<void()> backward_op) {
    if (recording_) backward_ops_.push_back(std::move(backward_op));
}

template <typename Real>
void Graph<Real>::backward(Tensor<Real>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw DimensionError("backward() needs a scalar loss");
    }
    auto seed = loss.ensure_grad();
    seed[0] = Real(1);
    visits_ = 0;
    for (auto it = backward_ops_.rbegin(); it != backward_ops_.rend(); ++it) {
        (*it)();
        ++visits_;
    }
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

// ---------------------------------------------------------------------------
// Ops

namespace ops {
namespace {

template <typename Real>
bool tracks(const Graph<Real>& g, const Tensor<Real>& a) {
    return g.recording() && a.requires_grad();
}

template <typename Real>
bool tracks(const Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
    return g.recording() && (a.requires_grad() || b.requires_grad());
}

template <typename Real>
Tensor<Real> make_output(Shape shape, std::vector<Real> data, bool requires_grad) {
    // Intermediate values skip the finite scan; callers that must detect
    // divergence check explicitly.
    return Tensor<Real>::adopt(std::move(shape), std::move(data), requires_grad);
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2 ||
        (a.rank() == 1 && b.rank() == 1)) {
        throw DimensionError("matmul: unsupported ranks " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const std::size_t p = a.rank() == 2 ? a.dim(0) : 1;
    const std::size_t q = a.rank() == 2 ? a.dim(1) : a.dim(0);
    const std::size_t qb = b.dim(0);
    const std::size_t r = b.rank() == 2 ? b.dim(1) : 1;
    if (q != qb) {
        throw DimensionError("matmul: inner dimensions differ " + shape_to_string(a.shape()) +
                             " x " + shape_to_string(b.shape()));
    }
    std::vector<Real> out(p * r, Real(0));
    const auto A = a.data();
    const auto B = b.data();
    for (std::size_t i = 0; i < p; ++i) {
        const Real* arow = A.data() + i * q;
        Real* orow = out.data() + i * r;
        for (std::size_t k = 0; k < q; ++k) {
            const Real av = arow[k];
            if (av == Real(0)) continue;
            const Real* brow = B.data() + k * r;
            for (std::size_t j = 0; j < r; ++j) orow[j] += av * brow[j];
        }
    }
    Shape shape;
    if (a.rank() == 2 && b.rank() == 2) shape = {p, r};
    else if (b.rank() == 1) shape = {p};
    else shape = {r};

    const bool req = tracks(g, a, b);
    auto result = make_output<Real>(std::move(shape), std::move(out), req);
    if (req) {
        g.record([a, b, result, p, q, r]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            if (a.requires_grad()) {
                // dA = G * B^T
                auto dA = a.ensure_grad();
                const auto Bv = b.data();
                for (std::size_t i = 0; i < p; ++i) {
                    for (std::size_t k = 0; k < q; ++k) {
                        Real acc = 0;
                        const Real* brow = Bv.data() + k * r;
                        const Real* grow = G.data() + i * r;
                        for (std::size_t j = 0; j < r; ++j) acc += grow[j] * brow[j];
                        dA[i * q + k] += acc;
                    }
                }
            }
            if (b.requires_grad()) {
                // dB = A^T * G
                auto dB = b.ensure_grad();
                const auto Av = a.data();
                for (std::size_t i = 0; i < p; ++i) {
                    const Real* grow = G.data() + i * r;
                    for (std::size_t k = 0; k < q; ++k) {
                        const Real av = Av[i * q + k];
                        Real* dbrow = dB.data() + k * r;
                        for (std::size_t j = 0; j < r; ++j) dbrow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> pointwise(Graph<Real>& g, Pointwise mode, const Tensor<Real>& a,
                       const Tensor<Real>& b) {
    const bool binary = mode == Pointwise::Add || mode == Pointwise::Mul;
    if (binary) {
        if (!b.defined()) throw std::invalid_argument("pointwise: binary mode needs two operands");
        if (a.shape() != b.shape()) {
            throw DimensionError("pointwise: shape mismatch " + shape_to_string(a.shape()) +
                                 " vs " + shape_to_string(b.shape()));
        }
    }
    const auto n = a.numel();
    const auto A = a.data();
    std::vector<Real> out(n);
    switch (mode) {
        case Pointwise::Sigmoid:
            for (std::size_t i = 0; i < n; ++i) out[i] = Real(1) / (Real(1) + std::exp(-A[i]));
            break;
        case Pointwise::Tanh:
            for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(A[i]);
            break;
        case Pointwise::Add: {
            const auto B = b.data();
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] + B[i];
            break;
        }
        case Pointwise::Mul: {
            const auto B = b.data();
            for (std::size_t i = 0; i < n; ++i) out[i] = A[i] * B[i];
            break;
        }
    }
    const bool req = binary ? tracks(g, a, b) : tracks(g, a);
    auto result = make_output<Real>(a.shape(), std::move(out), req);
    if (req) {
        g.record([mode, a, b, result, n]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            const auto Y = result.data();
            switch (mode) {
                case Pointwise::Sigmoid: {
                    auto dA = a.ensure_grad();
                    for (std::size_t i = 0; i < n; ++i) dA[i] += G[i] * Y[i] * (Real(1) - Y[i]);
                    break;
                }
                case Pointwise::Tanh: {
                    auto dA = a.ensure_grad();
                    for (std::size_t i = 0; i < n; ++i) dA[i] += G[i] * (Real(1) - Y[i] * Y[i]);
                    break;
                }
                case Pointwise::Add:
                    if (a.requires_grad()) {
                        auto dA = a.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) dA[i] += G[i];
                    }
                    if (b.requires_grad()) {
                        auto dB = b.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) dB[i] += G[i];
                    }
                    break;
                case Pointwise::Mul: {
                    const auto A = a.data();
                    const auto B = b.data();
                    if (a.requires_grad()) {
                        auto dA = a.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) dA[i] += G[i] * B[i];
                    }
                    if (b.requires_grad()) {
                        auto dB = b.ensure_grad();
                        for (std::size_t i = 0; i < n; ++i) dB[i] += G[i] * A[i];
                    }
                    break;
                }
            }
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> softmax_vec(Graph<Real>& g, const Tensor<Real>& v, const Mask& mask) {
    if (v.rank() != 1) throw DimensionError("softmax_vec: expects a rank-1 tensor");
    const auto k = v.numel();
    if (k == 0) throw DimensionError("softmax_vec: empty vector");
    if (!mask.empty() && mask.size() != k) {
        throw DimensionError("softmax_vec: mask length differs from input");
    }
    const auto V = v.data();
    auto valid = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };
    Real peak = -std::numeric_limits<Real>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) {
        if (!valid(i)) continue;
        if (!std::isfinite(V[i])) throw NonFiniteError("softmax_vec: non-finite input");
        peak = std::max(peak, V[i]);
        any = true;
    }
    if (!any) throw DimensionError("softmax_vec: every position is masked");
    std::vector<Real> out(k, Real(0));
    Real total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!valid(i)) continue;
        out[i] = std::exp(V[i] - peak);
        total += out[i];
    }
    for (auto& x : out) x /= total;

    const bool req = tracks(g, v);
    auto result = make_output<Real>(v.shape(), std::move(out), req);
    if (req) {
        g.record([v, result, k]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            const auto Y = result.data();
            Real dot = 0;
            for (std::size_t i = 0; i < k; ++i) dot += G[i] * Y[i];
            auto dV = v.ensure_grad();
            // Masked entries have Y = 0 and therefore receive no gradient.
            for (std::size_t i = 0; i < k; ++i) dV[i] += Y[i] * (G[i] - dot);
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> concat(Graph<Real>& g, const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.rank() != b.rank() || a.rank() < 1 || a.rank() > 2) {
        throw DimensionError("concat: rank mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    const std::size_t rows = a.rank() == 2 ? a.dim(0) : 1;
    if (a.rank() == 2 && b.dim(0) != rows) {
        throw DimensionError("concat: row counts differ " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    const std::size_t p = a.shape().back();
    const std::size_t q = b.shape().back();
    std::vector<Real> out(rows * (p + q));
    const auto A = a.data();
    const auto B = b.data();
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(A.data() + r * p, p, out.data() + r * (p + q));
        std::copy_n(B.data() + r * q, q, out.data() + r * (p + q) + p);
    }
    Shape shape = a.rank() == 2 ? Shape{rows, p + q} : Shape{p + q};
    const bool req = tracks(g, a, b);
    auto result = make_output<Real>(std::move(shape), std::move(out), req);
    if (req) {
        g.record([a, b, result, rows, p, q]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            if (a.requires_grad()) {
                auto dA = a.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < p; ++j) dA[r * p + j] += G[r * (p + q) + j];
            }
            if (b.requires_grad()) {
                auto dB = b.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < q; ++j) dB[r * q + j] += G[r * (p + q) + p + j];
            }
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> gather_rows(Graph<Real>& g, const Tensor<Real>& table, std::span<const int> ids) {
    if (table.rank() != 2) throw DimensionError("gather_rows: table must be rank-2");
    if (ids.empty()) throw DimensionError("gather_rows: no ids");
    const std::size_t rows = table.dim(0);
    const std::size_t width = table.dim(1);
    const auto T = table.data();
    std::vector<Real> out(ids.size() * width);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= rows) {
            throw DimensionError("gather_rows: id " + std::to_string(ids[t]) +
                                 " outside table of " + std::to_string(rows) + " rows");
        }
        std::copy_n(T.data() + static_cast<std::size_t>(ids[t]) * width, width,
                    out.data() + t * width);
    }
    const bool req = tracks(g, table);
    auto result = make_output<Real>(Shape{ids.size(), width}, std::move(out), req);
    if (req) {
        std::vector<int> idx(ids.begin(), ids.end());
        g.record([table, result, idx = std::move(idx), width]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            auto dT = table.ensure_grad();
            for (std::size_t t = 0; t < idx.size(); ++t) {
                Real* dst = dT.data() + static_cast<std::size_t>(idx[t]) * width;
                const Real* src = G.data() + t * width;
                for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
            }
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> row(Graph<Real>& g, const Tensor<Real>& matrix, std::size_t index) {
    if (matrix.rank() != 2) throw DimensionError("row: expects a rank-2 tensor");
    if (index >= matrix.dim(0)) throw DimensionError("row: index out of range");
    const std::size_t width = matrix.dim(1);
    const auto M = matrix.data();
    std::vector<Real> out(M.begin() + index * width, M.begin() + (index + 1) * width);
    const bool req = tracks(g, matrix);
    auto result = make_output<Real>(Shape{width}, std::move(out), req);
    if (req) {
        g.record([matrix, result, index, width]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            auto dM = matrix.ensure_grad();
            for (std::size_t j = 0; j < width; ++j) dM[index * width + j] += G[j];
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> stack_rows(Graph<Real>& g, const std::vector<Tensor<Real>>& rows) {
    if (rows.empty()) throw DimensionError("stack_rows: no rows");
    const std::size_t width = rows.front().numel();
    bool req = false;
    std::vector<Real> out;
    out.reserve(rows.size() * width);
    for (const auto& r : rows) {
        if (r.rank() != 1 || r.numel() != width) {
            throw DimensionError("stack_rows: rows must be rank-1 of equal length");
        }
        out.insert(out.end(), r.data().begin(), r.data().end());
        req = req || tracks(g, r);
    }
    auto result = make_output<Real>(Shape{rows.size(), width}, std::move(out), req);
    if (req) {
        g.record([rows, result, width]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            for (std::size_t t = 0; t < rows.size(); ++t) {
                auto& r = rows[t];
                if (!r.requires_grad()) continue;
                auto dR = r.ensure_grad();
                for (std::size_t j = 0; j < width; ++j) dR[j] += G[t * width + j];
            }
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> sum(Graph<Real>& g, const Tensor<Real>& a) {
    Real total = 0;
    for (Real v : a.data()) total += v;
    const bool req = tracks(g, a);
    auto result = make_output<Real>(Shape{}, std::vector<Real>{total}, req);
    if (req) {
        g.record([a, result]() mutable {
            if (!result.has_grad()) return;
            const Real gv = result.grad()[0];
            for (auto& d : a.ensure_grad()) d += gv;
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> scale(Graph<Real>& g, const Tensor<Real>& a, Real factor) {
    std::vector<Real> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    const bool req = tracks(g, a);
    auto result = make_output<Real>(a.shape(), std::move(out), req);
    if (req) {
        g.record([a, result, factor]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            auto dA = a.ensure_grad();
            for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += G[i] * factor;
        });
    }
    return result;
}

template <typename Real>
Tensor<Real> dropout(Graph<Real>& g, const Tensor<Real>& a, Real keep_prob,
                     const std::vector<std::uint8_t>& keep) {
    if (keep.size() != a.numel()) throw DimensionError("dropout: mask length differs from input");
    if (!(keep_prob > Real(0)) || keep_prob > Real(1)) {
        throw std::invalid_argument("dropout: keep probability must lie in (0, 1]");
    }
    const Real inv = Real(1) / keep_prob;
    std::vector<Real> factors(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) factors[i] = keep[i] ? inv : Real(0);
    std::vector<Real> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
    const bool req = tracks(g, a);
    auto result = make_output<Real>(a.shape(), std::move(out), req);
    if (req) {
        g.record([a, result, factors = std::move(factors)]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            auto dA = a.ensure_grad();
            for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += G[i] * factors[i];
        });
    }
    return result;
}

#define DDI_INSTANTIATE_OPS(Real)                                                              \
    template Tensor<Real> matmul(Graph<Real>&, const Tensor<Real>&, const Tensor<Real>&);       \
    template Tensor<Real> pointwise(Graph<Real>&, Pointwise, const Tensor<Real>&,               \
                                    const Tensor<Real>&);                                       \
    template Tensor<Real> softmax_vec(Graph<Real>&, const Tensor<Real>&, const Mask&);          \
    template Tensor<Real> concat(Graph<Real>&, const Tensor<Real>&, const Tensor<Real>&);       \
    template Tensor<Real> gather_rows(Graph<Real>&, const Tensor<Real>&, std::span<const int>); \
    template Tensor<Real> row(Graph<Real>&, const Tensor<Real>&, std::size_t);                  \
    template Tensor<Real> stack_rows(Graph<Real>&, const std::vector<Tensor<Real>>&);           \
    template Tensor<Real> sum(Graph<Real>&, const Tensor<Real>&);                               \
    template Tensor<Real> scale(Graph<Real>&, const Tensor<Real>&, Real);                       \
    template Tensor<Real> dropout(Graph<Real>&, const Tensor<Real>&, Real,                      \
                                  const std::vector<std::uint8_t>&);

DDI_INSTANTIATE_OPS(float)
DDI_INSTANTIATE_OPS(double)

#undef DDI_INSTANTIATE_OPS

}  // namespace ops
}  // namespace ddi
