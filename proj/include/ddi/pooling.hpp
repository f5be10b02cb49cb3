#pragma once

#include "ddi/rng.hpp"
#include "ddi/tensor.hpp"

namespace ddi {

template <typename Real>
struct AttentionParams {
    Tensor<Real> w_a;  // [width of encoder output]

    static AttentionParams init(std::size_t width, Rng& rng);
};

template <typename Real>
struct AttentivePooling {
    Tensor<Real> pooled;  // [width]
    Tensor<Real> alpha;   // [m], zero on masked positions
};

/// Per-dimension maximum over unmasked rows. The gradient goes to the first
/// row attaining the maximum in each dimension.
template <typename Real>
Tensor<Real> max_pool(Graph<Real>& g, const Tensor<Real>& Z, const Mask& mask = {});

/// H = tanh(Z), alpha = softmax(H w_a) over unmasked rows, z = alpha^T Z.
template <typename Real>
AttentivePooling<Real> attentive_pool(Graph<Real>& g, const Tensor<Real>& Z,
                                      const AttentionParams<Real>& p, const Mask& mask = {});

}  // namespace ddi
