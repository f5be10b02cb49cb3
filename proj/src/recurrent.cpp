#include "ddi/recurrent.hpp"

#include <cmath>

namespace ddi {
namespace {

template <typename Real>
Tensor<Real> uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
    std::vector<Real> data(rows * cols);
    for (auto& v : data) v = static_cast<Real>(rng.uniform(-bound, bound));
    return Tensor<Real>::from_data({rows, cols}, std::move(data), true);
}

template <typename Real>
Tensor<Real> gate(Graph<Real>& g, const Tensor<Real>& U, const Tensor<Real>& W,
                  const Tensor<Real>& b, const Tensor<Real>& x, const Tensor<Real>& h) {
    return ops::add(g, ops::add(g, ops::matmul(g, U, x), ops::matmul(g, W, h)), b);
}

template <typename Real>
std::vector<Tensor<Real>> run_direction(Graph<Real>& g, const LstmParams<Real>& p,
                                        const Tensor<Real>& X, const Mask& mask, bool reverse) {
    const std::size_t m = X.dim(0);
    std::vector<Tensor<Real>> outputs(m);
    LstmState<Real> state{p.h0, p.c0};
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t t = reverse ? m - 1 - k : k;
        if (!mask.empty() && !mask[t]) continue;
        state = lstm_step(g, p, ops::row(g, X, t), state.h, state.c);
        outputs[t] = state.h;
    }
    return outputs;
}

}  // namespace

template <typename Real>
LstmParams<Real> LstmParams<Real>::init(std::size_t hidden, std::size_t input, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmParams p;
    for (Tensor<Real>* U : {&p.U_i, &p.U_f, &p.U_o, &p.U_g})
        *U = uniform_matrix<Real>(hidden, input, bound, rng);
    for (Tensor<Real>* W : {&p.W_i, &p.W_f, &p.W_o, &p.W_g})
        *W = uniform_matrix<Real>(hidden, hidden, bound, rng);
    for (Tensor<Real>* v : {&p.b_i, &p.b_f, &p.b_o, &p.b_g, &p.h0, &p.c0})
        *v = Tensor<Real>::zeros({hidden}, true);
    return p;
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::zeros(std::size_t hidden, std::size_t input) {
    LstmParams p;
    for (Tensor<Real>* U : {&p.U_i, &p.U_f, &p.U_o, &p.U_g})
        *U = Tensor<Real>::zeros({hidden, input}, true);
    for (Tensor<Real>* W : {&p.W_i, &p.W_f, &p.W_o, &p.W_g})
        *W = Tensor<Real>::zeros({hidden, hidden}, true);
    for (Tensor<Real>* v : {&p.b_i, &p.b_f, &p.b_o, &p.b_g, &p.h0, &p.c0})
        *v = Tensor<Real>::zeros({hidden}, true);
    return p;
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> LstmParams<Real>::named() {
    return {{"U_i", &U_i}, {"U_f", &U_f}, {"U_o", &U_o}, {"U_g", &U_g},
            {"W_i", &W_i}, {"W_f", &W_f}, {"W_o", &W_o}, {"W_g", &W_g},
            {"b_i", &b_i}, {"b_f", &b_f}, {"b_o", &b_o}, {"b_g", &b_g},
            {"h0", &h0},   {"c0", &c0}};
}

template <typename Real>
BiLstmStack<Real> BiLstmStack<Real>::init(std::size_t hidden, std::size_t input, Rng& rng) {
    BiLstmStack s;
    s.forward = LstmParams<Real>::init(hidden, input, rng);
    s.backward = LstmParams<Real>::init(hidden, input, rng);
    return s;
}

template <typename Real>
LstmState<Real> lstm_step(Graph<Real>& g, const LstmParams<Real>& p, const Tensor<Real>& x,
                          const Tensor<Real>& h_prev, const Tensor<Real>& c_prev) {
    const std::size_t n = p.hidden();
    if (x.rank() != 1 || x.numel() != p.input() || h_prev.numel() != n || c_prev.numel() != n) {
        throw DimensionError("lstm_step: expected x[" + std::to_string(p.input()) + "], h/c[" +
                             std::to_string(n) + "], got x" + shape_to_string(x.shape()) +
                             " h" + shape_to_string(h_prev.shape()) + " c" +
                             shape_to_string(c_prev.shape()));
    }
    auto i = ops::sigmoid(g, gate(g, p.U_i, p.W_i, p.b_i, x, h_prev));
    auto f = ops::sigmoid(g, gate(g, p.U_f, p.W_f, p.b_f, x, h_prev));
    auto o = ops::sigmoid(g, gate(g, p.U_o, p.W_o, p.b_o, x, h_prev));
    auto gg = ops::tanh(g, gate(g, p.U_g, p.W_g, p.b_g, x, h_prev));
    auto c = ops::add(g, ops::mul(g, c_prev, f), ops::mul(g, gg, i));
    auto h = ops::mul(g, ops::tanh(g, c), o);
    if (!c.all_finite() || !h.all_finite()) {
        throw NonFiniteError("lstm_step: non-finite hidden or cell state");
    }
    return {h, c};
}

template <typename Real>
Tensor<Real> bilstm_forward(Graph<Real>& g, const BiLstmStack<Real>& stack, const Tensor<Real>& X,
                            const Mask& mask) {
    if (X.rank() != 2 || X.dim(0) == 0) throw DimensionError("bilstm_forward: empty sequence");
    const std::size_t m = X.dim(0);
    if (!mask.empty() && mask.size() != m) {
        throw DimensionError("bilstm_forward: mask length differs from sequence");
    }
    auto left = run_direction(g, stack.forward, X, mask, false);
    auto right = run_direction(g, stack.backward, X, mask, true);
    const std::size_t n = stack.forward.hidden();
    std::vector<Tensor<Real>> rows;
    rows.reserve(m);
    for (std::size_t t = 0; t < m; ++t) {
        if (!left[t].defined()) {
            rows.push_back(Tensor<Real>::zeros({2 * n}));
        } else {
            rows.push_back(ops::concat(g, left[t], right[t]));
        }
    }
    return ops::stack_rows(g, rows);
}

template struct LstmParams<float>;
template struct LstmParams<double>;
template struct BiLstmStack<float>;
template struct BiLstmStack<double>;
template LstmState<float> lstm_step(Graph<float>&, const LstmParams<float>&, const Tensor<float>&,
                                    const Tensor<float>&, const Tensor<float>&);
template LstmState<double> lstm_step(Graph<double>&, const LstmParams<double>&,
                                     const Tensor<double>&, const Tensor<double>&,
                                     const Tensor<double>&);
template Tensor<float> bilstm_forward(Graph<float>&, const BiLstmStack<float>&,
                                      const Tensor<float>&, const Mask&);
template Tensor<double> bilstm_forward(Graph<double>&, const BiLstmStack<double>&,
                                       const Tensor<double>&, const Mask&);

}  // namespace ddi
