#pragma once

// Word / position feature ids and their embedding lookup.

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddi/labels.hpp"
#include "ddi/rng.hpp"
#include "ddi/tensor.hpp"

namespace ddi {

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr const char* kPadToken = "<pad>";
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary();

    /// Returns the existing id or assigns the next dense id.
    int add(const std::string& token);
    /// Unknown tokens map to kUnk.
    int id(const std::string& token) const;
    bool contains(const std::string& token) const { return index_.count(token) != 0; }
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// One token per line, in id order (the two reserved entries included).
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

/// Signed word distance clamped to [-radius, radius]; id 0 is padding.
class PositionVocab {
public:
    static constexpr int kPad = 0;

    explicit PositionVocab(int radius = 50);

    int radius() const { return radius_; }
    int id(int distance) const;
    int distance(int id) const;
    std::size_t size() const { return static_cast<std::size_t>(2 * radius_ + 2); }

private:
    int radius_;
};

template <typename Real>
struct EmbeddingMatrix {
    Tensor<Real> weights;  // [vocab x dim]
    bool trainable = true;

    std::size_t rows() const { return weights.dim(0); }
    std::size_t dim() const { return weights.dim(1); }

    static EmbeddingMatrix random(std::size_t rows, std::size_t dim, Rng& rng,
                                  bool trainable = true);
};

struct InstanceFeatures {
    std::vector<int> words;
    std::vector<int> p1;
    std::vector<int> p2;
    Label label = Label::Negative;

    std::size_t length() const { return words.size(); }
};

/// Features padded to a common batch length, with the validity mask.
struct PaddedFeatures {
    InstanceFeatures features;
    Mask mask;
};

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count = 1);

InstanceFeatures featurize(const std::vector<std::string>& tokens, int drug_a_index,
                           int drug_b_index, Label label, const Vocabulary& vocab,
                           const PositionVocab& positions);

PaddedFeatures pad_features(const InstanceFeatures& f, std::size_t length);

/// Reads whitespace-separated "token v1 ... v_dim" lines. Rows for tokens the
/// file lacks are drawn from uniform(-0.05, 0.05). An optional leading
/// "count dim" header line is skipped.
template <typename Real>
EmbeddingMatrix<Real> load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                                        std::size_t dim, Rng& rng);

/// Row t = word row ++ p1 row ++ p2 row, giving [m x (n1 + n2 + n3)].
template <typename Real>
Tensor<Real> embed(Graph<Real>& g, const InstanceFeatures& f, const EmbeddingMatrix<Real>& words,
                   const EmbeddingMatrix<Real>& p1, const EmbeddingMatrix<Real>& p2);

}  // namespace ddi
