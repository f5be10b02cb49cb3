#pragma once

// Shared helpers for the unit and acceptance suites: a central-difference
// gradient checker, scratch directories and the bundled data paths.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ddi/corpus.hpp"
#include "ddi/features.hpp"
#include "ddi/model.hpp"
#include "ddi/rng.hpp"
#include "ddi/tensor.hpp"

#ifndef DDI_TEST_DATA_DIR
#define DDI_TEST_DATA_DIR "tests/data"
#endif

namespace ddi::test {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(DDI_TEST_DATA_DIR) / name;
}

/// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "ddi") {
        static std::uint64_t counter = 0;
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

template <typename Real>
Tensor<Real> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                           bool requires_grad = true) {
    std::vector<Real> data(shape_numel(shape));
    for (auto& v : data) v = static_cast<Real>(rng.uniform(lo, hi));
    return Tensor<Real>::from_data(std::move(shape), std::move(data), requires_grad);
}

/// Collapses any tensor to a scalar with fixed random weights so every output
/// element contributes a distinct gradient.
inline Tensor<double> weighted_sum(Graph<double>& g, const Tensor<double>& t, std::uint64_t seed = 7) {
    Rng rng(seed);
    auto w = random_tensor<double>(t.shape(), rng, -1.0, 1.0, false);
    return ops::sum(g, ops::mul(g, t, w));
}

struct GradCheck {
    double max_rel_error = 0;
    std::size_t checked = 0;
};

/// Compares analytic gradients of `loss_fn` against central differences for
/// every element of `params`. The relative error uses an absolute floor of
/// 1e-4 on the denominator so near-zero gradients are judged on their
/// absolute error.
inline GradCheck check_gradients(const std::function<Tensor<double>(Graph<double>&)>& loss_fn,
                                 const std::vector<Tensor<double>>& params, double eps = 1e-4) {
    for (auto p : params) p.clear_grad();
    {
        Graph<double> g;
        auto loss = loss_fn(g);
        g.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) {
        if (p.has_grad()) {
            analytic.emplace_back(p.grad().begin(), p.grad().end());
        } else {
            analytic.emplace_back(p.numel(), 0.0);
        }
    }
    auto eval = [&] {
        Graph<double> g(false);
        return loss_fn(g).item();
    };
    GradCheck out;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto values = p.data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = eval();
            values[i] = saved - eps;
            const double down = eval();
            values[i] = saved;
            const double numeric = (up - down) / (2 * eps);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
            ++out.checked;
        }
    }
    for (auto p : params) p.clear_grad();
    return out;
}

/// Every trainable tensor of a model, for gradient checks.
template <typename Real>
std::vector<Tensor<Real>> model_tensors(ModelParams<Real>& params) {
    std::vector<Tensor<Real>> out;
    for (auto& np : params.parameters()) out.push_back(*np.tensor);
    return out;
}

/// Small configuration used throughout the tests.
inline ModelConfig tiny_config(Variant v, std::size_t vocab, std::size_t hidden = 4,
                               std::size_t word_dim = 6, std::size_t position_dim = 3) {
    ModelConfig cfg = ModelConfig::defaults_for(v);
    cfg.hidden = hidden;
    cfg.word_dim = word_dim;
    cfg.position_dim = position_dim;
    cfg.word_vocab_size = vocab;
    cfg.position_radius = 10;
    cfg.keep_prob = 1.0;
    return cfg;
}

inline InstanceFeatures random_instance(std::size_t m, std::size_t vocab, int radius, Rng& rng,
                                        Label label = Label::Effect) {
    std::vector<std::string> tokens(m, "w");
    Vocabulary v;
    PositionVocab pv(radius);
    const int a = static_cast<int>(rng.below(m - 1));
    const int b = a + 1 + static_cast<int>(rng.below(m - 1 - static_cast<std::size_t>(a)));
    auto f = featurize(tokens, a, b, label, v, pv);
    for (auto& w : f.words) w = 2 + static_cast<int>(rng.below(vocab - 2));
    return f;
}

struct FeaturizedCorpus {
    Vocabulary vocab;
    std::vector<InstanceFeatures> features;
};

inline FeaturizedCorpus featurize_all(const std::vector<RawInstance>& raw, int radius = 50) {
    std::vector<std::vector<std::string>> sentences;
    for (const auto& r : raw) sentences.push_back(r.tokens);
    FeaturizedCorpus out{build_vocab(sentences), {}};
    PositionVocab pv(radius);
    for (const auto& r : raw) {
        out.features.push_back(featurize(r.tokens, r.drug_a, r.drug_b, r.label, out.vocab, pv));
    }
    return out;
}

}  // namespace ddi::test
