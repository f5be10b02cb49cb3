#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "ddi/model.hpp"

namespace ddi {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 200;
    std::size_t max_epochs = 30;
    double l2 = 1e-4;
    std::uint64_t seed = 1;
    /// Share of the training data held out for epoch selection.
    double heldout_fraction = 0.05;
    bool track_train_accuracy = true;
    /// Worker cap for per-epoch scoring; results do not depend on it.
    std::size_t threads = 1;

    /// L2 strength per variant: 1e-3 for B-LSTM, 1e-4 otherwise.
    static TrainConfig defaults_for(Variant v);
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

template <typename Real>
struct AdamState {
    std::vector<std::vector<Real>> m;
    std::vector<std::vector<Real>> v;
    long step = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0;  // mean cross-entropy, penalty excluded
    double train_accuracy = 0;
    double heldout_precision = 0;
    double heldout_recall = 0;
    double heldout_f1 = 0;
};

nlohmann::json to_json(const EpochRecord& r);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

/// -log(max(probs[label], 1e-12)) as a scalar graph node.
template <typename Real>
Tensor<Real> cross_entropy(Graph<Real>& g, const Tensor<Real>& probs, Label label);

/// One bias-corrected Adam update over every parameter that requires a
/// gradient; L2 (l2 * theta) is added to the gradient of decayed weights.
template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<NamedParam<Real>>& params,
               const TrainConfig& cfg);

/// Index of the best held-out micro-F1, earliest on ties.
std::size_t select_epoch(const std::vector<EpochRecord>& log);

struct TrainResult {
    std::vector<EpochRecord> log;
    std::size_t selected_epoch = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> heldout_indices;
};

/// Mini-batch training. The model is left holding the parameters of the
/// selected epoch (the last epoch when nothing is held out). `on_epoch` may
/// return false to stop after the current epoch.
template <typename Real>
TrainResult train(ModelParams<Real>& model, const ModelConfig& mcfg,
                  const std::vector<InstanceFeatures>& data, const TrainConfig& cfg,
                  const std::function<bool(const EpochRecord&)>& on_epoch = {});

/// Mean cross-entropy of a padded batch as one scalar graph node.
template <typename Real>
Tensor<Real> batch_loss(Graph<Real>& g, const ModelParams<Real>& model, const ModelConfig& mcfg,
                        const std::vector<InstanceFeatures>& batch, bool training, Rng* dropout);

template <typename Real>
struct Prediction {
    Label label = Label::Negative;
    std::vector<Real> probs;
    std::vector<Real> alpha;  // empty for B-LSTM
};

/// Inference over many instances; threads > 1 splits the work across workers.
template <typename Real>
std::vector<Prediction<Real>> predict_all(const ModelParams<Real>& model, const ModelConfig& mcfg,
                                          const std::vector<InstanceFeatures>& data,
                                          std::size_t threads = 1);

}  // namespace ddi
