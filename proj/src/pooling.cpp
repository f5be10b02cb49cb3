#include "ddi/pooling.hpp"

#include <cmath>
#include <limits>

namespace ddi {

template <typename Real>
AttentionParams<Real> AttentionParams<Real>::init(std::size_t width, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<Real> data(width);
    for (auto& v : data) v = static_cast<Real>(rng.uniform(-bound, bound));
    return {Tensor<Real>::from_data({width}, std::move(data), true)};
}

template <typename Real>
Tensor<Real> max_pool(Graph<Real>& g, const Tensor<Real>& Z, const Mask& mask) {
    if (Z.rank() != 2) throw DimensionError("max_pool: expects [m x width]");
    const std::size_t m = Z.dim(0);
    const std::size_t width = Z.dim(1);
    if (!mask.empty() && mask.size() != m) {
        throw DimensionError("max_pool: mask length differs from row count");
    }
    const auto V = Z.data();
    std::vector<Real> out(width, -std::numeric_limits<Real>::infinity());
    std::vector<std::size_t> argmax(width, m);
    for (std::size_t t = 0; t < m; ++t) {
        if (!mask.empty() && !mask[t]) continue;
        for (std::size_t j = 0; j < width; ++j) {
            const Real v = V[t * width + j];
            if (argmax[j] == m || v > out[j]) {
                out[j] = v;
                argmax[j] = t;
            }
        }
    }
    if (width > 0 && argmax[0] == m) throw DimensionError("max_pool: every row is masked");

    const bool req = g.recording() && Z.requires_grad();
    auto result = Tensor<Real>::adopt({width}, std::move(out), req);
    if (req) {
        g.record([Z = Tensor<Real>(Z), result, argmax = std::move(argmax), width]() mutable {
            if (!result.has_grad()) return;
            const auto G = result.grad();
            auto dZ = Z.ensure_grad();
            for (std::size_t j = 0; j < width; ++j) dZ[argmax[j] * width + j] += G[j];
        });
    }
    return result;
}

template <typename Real>
AttentivePooling<Real> attentive_pool(Graph<Real>& g, const Tensor<Real>& Z,
                                      const AttentionParams<Real>& p, const Mask& mask) {
    if (Z.rank() != 2) throw DimensionError("attentive_pool: expects [m x width]");
    if (p.w_a.numel() != Z.dim(1)) {
        throw DimensionError("attentive_pool: w_a has " + std::to_string(p.w_a.numel()) +
                             " entries, encoder width is " + std::to_string(Z.dim(1)));
    }
    auto H = ops::tanh(g, Z);
    auto scores = ops::matmul(g, H, p.w_a);
    auto alpha = ops::softmax_vec(g, scores, mask);
    auto pooled = ops::matmul(g, alpha, Z);
    return {pooled, alpha};
}

template struct AttentionParams<float>;
template struct AttentionParams<double>;
template Tensor<float> max_pool(Graph<float>&, const Tensor<float>&, const Mask&);
template Tensor<double> max_pool(Graph<double>&, const Tensor<double>&, const Mask&);
template AttentivePooling<float> attentive_pool(Graph<float>&, const Tensor<float>&,
                                                const AttentionParams<float>&, const Mask&);
template AttentivePooling<double> attentive_pool(Graph<double>&, const Tensor<double>&,
                                                 const AttentionParams<double>&, const Mask&);

}  // namespace ddi
