#pragma once

// The three classifier variants and their output layer.
//
//   B-LSTM   embed -> Bi-LSTM -> max pool                     -> tanh -> softmax(W_o, b_o)
//   AB-LSTM  embed -> Bi-LSTM -> attentive pool               -> tanh -> softmax(W_o, b_o)
//   Joint    embed -> Bi-LSTM #1 -> max pool       --+
//                  -> Bi-LSTM #2 -> attentive pool --+ concat  -> tanh -> softmax(W_o, b_o)
//
// Dropout, when enabled, is applied to the pooled feature only.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ddi/features.hpp"
#include "ddi/labels.hpp"
#include "ddi/pooling.hpp"
#include "ddi/recurrent.hpp"

namespace ddi {

enum class Variant { BLstm, AbLstm, Joint };

std::string_view variant_name(Variant v);
/// Accepts "b-lstm"/"blstm", "ab-lstm"/"ablstm", "joint"/"joint-ab-lstm".
Variant parse_variant(std::string_view text);

struct ModelConfig {
    Variant variant = Variant::Joint;
    std::size_t hidden = 150;
    std::size_t word_dim = 100;
    std::size_t position_dim = 10;
    std::size_t num_classes = kNumClasses;
    double keep_prob = 1.0;
    int position_radius = 50;
    std::size_t word_vocab_size = 2;
    bool train_word_embeddings = true;

    /// Hidden size and keep-probability used for each variant in the
    /// reference configuration (B/AB: 200 units, keep 0.7; Joint: 150, 1.0).
    static ModelConfig defaults_for(Variant v);

    bool uses_max_pool() const { return variant != Variant::AbLstm; }
    bool uses_attention() const { return variant != Variant::BLstm; }
    std::size_t stack_count() const { return variant == Variant::Joint ? 2 : 1; }
    std::size_t position_vocab_size() const { return static_cast<std::size_t>(2 * position_radius + 2); }
    std::size_t input_dim() const { return word_dim + 2 * position_dim; }
    std::size_t encoder_width() const { return 2 * hidden; }
    std::size_t feature_width() const { return stack_count() * encoder_width(); }

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

template <typename Real>
struct OutputParams {
    Tensor<Real> W_o;  // [F x C]
    Tensor<Real> b_o;  // [C]
};

template <typename Real>
struct NamedParam {
    std::string name;
    Tensor<Real>* tensor;
    bool weight_decay;  // L2 applies (weight matrices and w_a only)
};

template <typename Real>
struct ModelParams {
    EmbeddingMatrix<Real> words;
    EmbeddingMatrix<Real> pos1;
    EmbeddingMatrix<Real> pos2;
    std::vector<BiLstmStack<Real>> stacks;
    std::optional<AttentionParams<Real>> attention;
    OutputParams<Real> output;

    /// Random initialization; `pretrained` replaces the word table when given.
    static ModelParams init(const ModelConfig& cfg, Rng& rng,
                            std::optional<EmbeddingMatrix<Real>> pretrained = std::nullopt);

    /// Deterministic order shared by the optimizer and checkpoints.
    std::vector<NamedParam<Real>> parameters();

    std::size_t parameter_count();
    void zero_grad();
    /// Fully independent copy (no shared storage).
    ModelParams clone() const;
};

/// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& cfg);

template <typename Real>
struct ForwardResult {
    Tensor<Real> probs;  // [C]
    Tensor<Real> alpha;  // [m]; undefined for B-LSTM
};

/// softmax(tanh(h2) W_o + b_o) for a pooled feature h2 [F].
template <typename Real>
Tensor<Real> output_layer(Graph<Real>& g, const OutputParams<Real>& p, const Tensor<Real>& h2);

/// `dropout_rng` is required when training with keep_prob < 1.
template <typename Real>
ForwardResult<Real> forward(Graph<Real>& g, const ModelParams<Real>& params,
                            const ModelConfig& cfg, const InstanceFeatures& f,
                            const Mask& mask = {}, bool training = false,
                            Rng* dropout_rng = nullptr);

/// Argmax, lowest class id on ties.
template <typename Real>
Label predict_class(std::span<const Real> probs);

}  // namespace ddi
