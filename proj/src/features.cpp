#include "ddi/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ddi {

Vocabulary::Vocabulary() {
    add(kPadToken);
    add(kUnkToken);
}

int Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken) {
        throw std::runtime_error("vocabulary " + path.string() + " lacks the reserved entries");
    }
    Vocabulary v;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (v.add(lines[i]) != static_cast<int>(i)) {
            throw std::runtime_error("duplicate vocabulary entry '" + lines[i] + "'");
        }
    }
    return v;
}

PositionVocab::PositionVocab(int radius) : radius_(radius) {
    if (radius < 1) throw std::invalid_argument("position radius must be >= 1");
}

int PositionVocab::id(int distance) const {
    const int clamped = std::clamp(distance, -radius_, radius_);
    return clamped + radius_ + 1;
}

int PositionVocab::distance(int id) const {
    if (id <= kPad || id >= static_cast<int>(size())) {
        throw std::out_of_range("position id " + std::to_string(id) + " has no distance");
    }
    return id - radius_ - 1;
}

template <typename Real>
EmbeddingMatrix<Real> EmbeddingMatrix<Real>::random(std::size_t rows, std::size_t dim, Rng& rng,
                                                    bool trainable) {
    if (rows == 0 || dim == 0) throw std::invalid_argument("embedding matrix must be non-empty");
    std::vector<Real> data(rows * dim);
    for (auto& v : data) v = static_cast<Real>(rng.uniform(-0.05, 0.05));
    return {Tensor<Real>::from_data({rows, dim}, std::move(data), trainable), trainable};
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count) {
    if (sentences.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    // Ordered by first occurrence so ids are stable for a given corpus order.
    std::map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& s : sentences) {
        for (const auto& tok : s) {
            if (counts[tok]++ == 0) order.push_back(tok);
        }
    }
    Vocabulary vocab;
    for (const auto& tok : order) {
        if (counts[tok] >= min_count) vocab.add(tok);
    }
    return vocab;
}

InstanceFeatures featurize(const std::vector<std::string>& tokens, int drug_a_index,
                           int drug_b_index, Label label, const Vocabulary& vocab,
                           const PositionVocab& positions) {
    const int m = static_cast<int>(tokens.size());
    if (drug_a_index < 0 || drug_b_index < 0 || drug_a_index >= m || drug_b_index >= m) {
        throw std::out_of_range("featurize: drug index outside sentence of length " +
                                std::to_string(m));
    }
    if (drug_a_index >= drug_b_index) {
        throw std::invalid_argument("featurize: first drug index must precede the second");
    }
    InstanceFeatures f;
    f.label = label;
    f.words.reserve(tokens.size());
    f.p1.reserve(tokens.size());
    f.p2.reserve(tokens.size());
    for (int i = 0; i < m; ++i) {
        f.words.push_back(vocab.id(tokens[static_cast<std::size_t>(i)]));
        f.p1.push_back(positions.id(i - drug_a_index));
        f.p2.push_back(positions.id(i - drug_b_index));
    }
    return f;
}

PaddedFeatures pad_features(const InstanceFeatures& f, std::size_t length) {
    if (length < f.length()) throw std::invalid_argument("pad_features: target shorter than input");
    PaddedFeatures out{f, Mask(length, 0)};
    std::fill_n(out.mask.begin(), f.length(), std::uint8_t{1});
    out.features.words.resize(length, Vocabulary::kPad);
    out.features.p1.resize(length, PositionVocab::kPad);
    out.features.p2.resize(length, PositionVocab::kPad);
    return out;
}

template <typename Real>
EmbeddingMatrix<Real> load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                                        std::size_t dim, Rng& rng) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open word vectors " + path.string());
    auto matrix = EmbeddingMatrix<Real>::random(vocab.size(), dim, rng, true);
    auto W = matrix.weights.data();
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        fields.clear();
        std::istringstream ss(line);
        for (std::string f; ss >> f;) fields.push_back(f);
        if (fields.empty()) continue;
        if (line_no == 1 && fields.size() == 2 &&
            std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
            std::all_of(fields[1].begin(), fields[1].end(), ::isdigit)) {
            continue;
        }
        if (fields.size() != dim + 1) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim) + " values, found " +
                                     std::to_string(fields.size() - 1));
        }
        if (!vocab.contains(fields[0])) continue;
        const auto row = static_cast<std::size_t>(vocab.id(fields[0]));
        for (std::size_t j = 0; j < dim; ++j) {
            const auto& text = fields[j + 1];
            double value = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": malformed value '" + text + "'");
            }
            W[row * dim + j] = static_cast<Real>(value);
        }
    }
    return matrix;
}

template <typename Real>
Tensor<Real> embed(Graph<Real>& g, const InstanceFeatures& f, const EmbeddingMatrix<Real>& words,
                   const EmbeddingMatrix<Real>& p1, const EmbeddingMatrix<Real>& p2) {
    if (f.words.empty() || f.p1.size() != f.words.size() || f.p2.size() != f.words.size()) {
        throw DimensionError("embed: feature sequences must be non-empty and equally long");
    }
    auto xw = ops::gather_rows(g, words.weights, std::span<const int>(f.words));
    auto x1 = ops::gather_rows(g, p1.weights, std::span<const int>(f.p1));
    auto x2 = ops::gather_rows(g, p2.weights, std::span<const int>(f.p2));
    return ops::concat(g, ops::concat(g, xw, x1), x2);
}

template struct EmbeddingMatrix<float>;
template struct EmbeddingMatrix<double>;
template EmbeddingMatrix<float> load_word_vectors(const std::filesystem::path&, const Vocabulary&,
                                                  std::size_t, Rng&);
template EmbeddingMatrix<double> load_word_vectors(const std::filesystem::path&, const Vocabulary&,
                                                   std::size_t, Rng&);
template Tensor<float> embed(Graph<float>&, const InstanceFeatures&, const EmbeddingMatrix<float>&,
                             const EmbeddingMatrix<float>&, const EmbeddingMatrix<float>&);
template Tensor<double> embed(Graph<double>&, const InstanceFeatures&,
                              const EmbeddingMatrix<double>&, const EmbeddingMatrix<double>&,
                              const EmbeddingMatrix<double>&);

}  // namespace ddi
