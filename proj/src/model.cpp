#include "ddi/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace ddi {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::BLstm: return "b-lstm";
        case Variant::AbLstm: return "ab-lstm";
        case Variant::Joint: return "joint";
    }
    return "joint";
}

Variant parse_variant(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "b-lstm" || s == "blstm" || s == "b") return Variant::BLstm;
    if (s == "ab-lstm" || s == "ablstm" || s == "ab") return Variant::AbLstm;
    if (s == "joint" || s == "joint-ab-lstm" || s == "jointablstm") return Variant::Joint;
    throw std::invalid_argument("unknown model variant '" + std::string(text) + "'");
}

ModelConfig ModelConfig::defaults_for(Variant v) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.hidden = v == Variant::Joint ? 150 : 200;
    cfg.keep_prob = v == Variant::Joint ? 1.0 : 0.7;
    return cfg;
}

void ModelConfig::validate() const {
    if (num_classes != kNumClasses) {
        throw std::invalid_argument("model must have " + std::to_string(kNumClasses) + " classes");
    }
    if (hidden == 0 || word_dim == 0 || position_dim == 0) {
        throw std::invalid_argument("hidden size and embedding dims must be positive");
    }
    if (!(keep_prob > 0.0) || keep_prob > 1.0) {
        throw std::invalid_argument("keep probability must lie in (0, 1]");
    }
    if (position_radius < 1) throw std::invalid_argument("position radius must be >= 1");
    if (word_vocab_size < 2) throw std::invalid_argument("word vocabulary must hold PAD and UNK");
}

nlohmann::json to_json(const ModelConfig& cfg) {
    return {
        {"variant", std::string(variant_name(cfg.variant))},
        {"hidden", cfg.hidden},
        {"word_dim", cfg.word_dim},
        {"position_dim", cfg.position_dim},
        {"num_classes", cfg.num_classes},
        {"keep_prob", cfg.keep_prob},
        {"position_radius", cfg.position_radius},
        {"word_vocab_size", cfg.word_vocab_size},
        {"train_word_embeddings", cfg.train_word_embeddings},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg = ModelConfig::defaults_for(parse_variant(j.at("variant").get<std::string>()));
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.word_dim = j.value("word_dim", cfg.word_dim);
    cfg.position_dim = j.value("position_dim", cfg.position_dim);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.keep_prob = j.value("keep_prob", cfg.keep_prob);
    cfg.position_radius = j.value("position_radius", cfg.position_radius);
    cfg.word_vocab_size = j.value("word_vocab_size", cfg.word_vocab_size);
    cfg.train_word_embeddings = j.value("train_word_embeddings", cfg.train_word_embeddings);
    cfg.validate();
    return cfg;
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::init(const ModelConfig& cfg, Rng& rng,
                                          std::optional<EmbeddingMatrix<Real>> pretrained) {
    cfg.validate();
    ModelParams p;
    if (pretrained) {
        if (pretrained->rows() != cfg.word_vocab_size || pretrained->dim() != cfg.word_dim) {
            throw DimensionError("pretrained word table is " +
                                 shape_to_string(pretrained->weights.shape()) + ", expected [" +
                                 std::to_string(cfg.word_vocab_size) + "x" +
                                 std::to_string(cfg.word_dim) + "]");
        }
        p.words = std::move(*pretrained);
    } else {
        p.words = EmbeddingMatrix<Real>::random(cfg.word_vocab_size, cfg.word_dim, rng);
    }
    p.words.trainable = cfg.train_word_embeddings;
    p.words.weights.set_requires_grad(cfg.train_word_embeddings);
    p.pos1 = EmbeddingMatrix<Real>::random(cfg.position_vocab_size(), cfg.position_dim, rng);
    p.pos2 = EmbeddingMatrix<Real>::random(cfg.position_vocab_size(), cfg.position_dim, rng);
    for (std::size_t s = 0; s < cfg.stack_count(); ++s) {
        p.stacks.push_back(BiLstmStack<Real>::init(cfg.hidden, cfg.input_dim(), rng));
    }
    if (cfg.uses_attention()) p.attention = AttentionParams<Real>::init(cfg.encoder_width(), rng);

    const std::size_t F = cfg.feature_width();
    const double bound = 1.0 / std::sqrt(static_cast<double>(F));
    std::vector<Real> w(F * cfg.num_classes);
    for (auto& v : w) v = static_cast<Real>(rng.uniform(-bound, bound));
    p.output.W_o = Tensor<Real>::from_data({F, cfg.num_classes}, std::move(w), true);
    p.output.b_o = Tensor<Real>::zeros({cfg.num_classes}, true);
    return p;
}

template <typename Real>
std::vector<NamedParam<Real>> ModelParams<Real>::parameters() {
    std::vector<NamedParam<Real>> out;
    out.push_back({"embedding.word", &words.weights, false});
    out.push_back({"embedding.p1", &pos1.weights, false});
    out.push_back({"embedding.p2", &pos2.weights, false});
    for (std::size_t s = 0; s < stacks.size(); ++s) {
        const std::string prefix = "stack" + std::to_string(s) + ".";
        for (auto* dir : {&stacks[s].forward, &stacks[s].backward}) {
            const std::string dprefix = prefix + (dir == &stacks[s].forward ? "forward." : "backward.");
            for (auto& [name, tensor] : dir->named()) {
                const bool matrix = name[0] == 'U' || name[0] == 'W';
                out.push_back({dprefix + name, tensor, matrix});
            }
        }
    }
    if (attention) out.push_back({"attention.w_a", &attention->w_a, true});
    out.push_back({"output.W_o", &output.W_o, true});
    out.push_back({"output.b_o", &output.b_o, false});
    return out;
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.tensor->numel();
    return n;
}

template <typename Real>
void ModelParams<Real>::zero_grad() {
    for (auto& p : parameters()) p.tensor->clear_grad();
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::clone() const {
    ModelParams copy = *this;
    for (auto& p : copy.parameters()) *p.tensor = p.tensor->clone();
    return copy;
}

std::size_t expected_parameter_count(const ModelConfig& cfg) {
    const std::size_t N = cfg.hidden;
    const std::size_t d = cfg.input_dim();
    const std::size_t C = cfg.num_classes;
    const std::size_t embeddings =
        cfg.word_vocab_size * cfg.word_dim + 2 * cfg.position_vocab_size() * cfg.position_dim;
    const std::size_t lstm = 4 * (N * d + N * N + N) + 2 * N;
    const std::size_t stacks = cfg.stack_count() * 2 * lstm;
    const std::size_t attention = cfg.uses_attention() ? 2 * N : 0;
    const std::size_t output = cfg.feature_width() * C + C;
    return embeddings + stacks + attention + output;
}

template <typename Real>
ForwardResult<Real> forward(Graph<Real>& g, const ModelParams<Real>& params,
                            const ModelConfig& cfg, const InstanceFeatures& f, const Mask& mask,
                            bool training, Rng* dropout_rng) {
    if (params.stacks.size() != cfg.stack_count() ||
        params.attention.has_value() != cfg.uses_attention()) {
        throw std::invalid_argument("model parameters do not match variant " +
                                    std::string(variant_name(cfg.variant)));
    }
    auto X = embed(g, f, params.words, params.pos1, params.pos2);

    ForwardResult<Real> result;
    Tensor<Real> pooled;
    switch (cfg.variant) {
        case Variant::BLstm: {
            auto Z = bilstm_forward(g, params.stacks[0], X, mask);
            pooled = max_pool(g, Z, mask);
            break;
        }
        case Variant::AbLstm: {
            auto Z = bilstm_forward(g, params.stacks[0], X, mask);
            auto att = attentive_pool(g, Z, *params.attention, mask);
            pooled = att.pooled;
            result.alpha = att.alpha;
            break;
        }
        case Variant::Joint: {
            auto Z1 = bilstm_forward(g, params.stacks[0], X, mask);
            auto Z2 = bilstm_forward(g, params.stacks[1], X, mask);
            auto att = attentive_pool(g, Z2, *params.attention, mask);
            pooled = ops::concat(g, max_pool(g, Z1, mask), att.pooled);
            result.alpha = att.alpha;
            break;
        }
    }

    if (training && cfg.keep_prob < 1.0) {
        if (!dropout_rng) throw std::invalid_argument("forward: dropout needs a random stream");
        std::vector<std::uint8_t> keep(pooled.numel());
        for (auto& k : keep) k = dropout_rng->bernoulli(cfg.keep_prob) ? 1 : 0;
        pooled = ops::dropout(g, pooled, static_cast<Real>(cfg.keep_prob), keep);
    }

    result.probs = output_layer(g, params.output, pooled);
    return result;
}

template <typename Real>
Tensor<Real> output_layer(Graph<Real>& g, const OutputParams<Real>& p, const Tensor<Real>& h2) {
    auto h3 = ops::tanh(g, h2);
    return ops::softmax_vec(g, ops::add(g, ops::matmul(g, h3, p.W_o), p.b_o));
}

template <typename Real>
Label predict_class(std::span<const Real> probs) {
    if (probs.empty()) throw DimensionError("predict_class: empty probability vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return label_from_id(static_cast<int>(best));
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template Tensor<float> output_layer(Graph<float>&, const OutputParams<float>&, const Tensor<float>&);
template Tensor<double> output_layer(Graph<double>&, const OutputParams<double>&, const Tensor<double>&);
template ForwardResult<float> forward(Graph<float>&, const ModelParams<float>&, const ModelConfig&,
                                      const InstanceFeatures&, const Mask&, bool, Rng*);
template ForwardResult<double> forward(Graph<double>&, const ModelParams<double>&,
                                       const ModelConfig&, const InstanceFeatures&, const Mask&,
                                       bool, Rng*);
template Label predict_class(std::span<const float>);
template Label predict_class(std::span<const double>);

}  // namespace ddi
