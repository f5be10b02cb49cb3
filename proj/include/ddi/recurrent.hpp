#pragma once

// LSTM cell and bidirectional encoder.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ddi/rng.hpp"
#include "ddi/tensor.hpp"

namespace ddi {

/// Gate weights of one directional LSTM. U* map the input (N x d), W* the
/// previous hidden state (N x N); h0 and c0 are learned initial states.
template <typename Real>
struct LstmParams {
    Tensor<Real> U_i, U_f, U_o, U_g;
    Tensor<Real> W_i, W_f, W_o, W_g;
    Tensor<Real> b_i, b_f, b_o, b_g;
    Tensor<Real> h0, c0;

    std::size_t hidden() const { return b_i.numel(); }
    std::size_t input() const { return U_i.dim(1); }

    /// Matrices uniform in (-1/sqrt(N), 1/sqrt(N)); biases and initial
    /// states zero.
    static LstmParams init(std::size_t hidden, std::size_t input, Rng& rng);
    static LstmParams zeros(std::size_t hidden, std::size_t input);

    /// Fixed order used by checkpoints; names are relative ("U_i", ...).
    std::vector<std::pair<std::string, Tensor<Real>*>> named();
};

template <typename Real>
struct BiLstmStack {
    LstmParams<Real> forward;
    LstmParams<Real> backward;

    static BiLstmStack init(std::size_t hidden, std::size_t input, Rng& rng);
};

template <typename Real>
struct LstmState {
    Tensor<Real> h;
    Tensor<Real> c;
};

/// One step. Throws NonFiniteError if h or c leaves the finite range.
template <typename Real>
LstmState<Real> lstm_step(Graph<Real>& g, const LstmParams<Real>& p, const Tensor<Real>& x,
                          const Tensor<Real>& h_prev, const Tensor<Real>& c_prev);

/// Returns Z [m x 2N] with row t = h_forward(t) ++ h_backward(t), where the
/// backward LSTM reads the sentence right to left and its outputs are
/// re-aligned to original positions. Masked positions are skipped by both
/// directions (state carried through) and produce zero rows.
template <typename Real>
Tensor<Real> bilstm_forward(Graph<Real>& g, const BiLstmStack<Real>& stack, const Tensor<Real>& X,
                            const Mask& mask = {});

}  // namespace ddi
