#include "ddi/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "ddi/evaluation.hpp"

namespace ddi {

TrainConfig TrainConfig::defaults_for(Variant v) {
    TrainConfig cfg;
    cfg.l2 = v == Variant::BLstm ? 1e-3 : 1e-4;
    return cfg;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
    if (l2 < 0.0) throw std::invalid_argument("l2 must be non-negative");
    if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) {
        throw std::invalid_argument("held-out fraction must lie in [0, 1)");
    }
    if (max_epochs < 1) throw std::invalid_argument("max epochs must be >= 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate}, {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},                 {"epsilon", cfg.epsilon},
            {"batch_size", cfg.batch_size},       {"max_epochs", cfg.max_epochs},
            {"l2", cfg.l2},                       {"seed", cfg.seed},
            {"heldout_fraction", cfg.heldout_fraction},
            {"track_train_accuracy", cfg.track_train_accuracy}, {"threads", cfg.threads}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.beta1 = j.value("beta1", base.beta1);
    base.beta2 = j.value("beta2", base.beta2);
    base.epsilon = j.value("epsilon", base.epsilon);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.l2 = j.value("l2", base.l2);
    base.seed = j.value("seed", base.seed);
    base.heldout_fraction = j.value("heldout_fraction", base.heldout_fraction);
    base.track_train_accuracy = j.value("track_train_accuracy", base.track_train_accuracy);
    base.threads = j.value("threads", base.threads);
    base.validate();
    return base;
}

nlohmann::json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"train_accuracy", r.train_accuracy},
            {"heldout_P", r.heldout_precision},
            {"heldout_R", r.heldout_recall},
            {"heldout_F1", r.heldout_f1}};
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
    EpochRecord r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.train_loss = j.at("train_loss").get<double>();
    r.train_accuracy = j.value("train_accuracy", 0.0);
    r.heldout_precision = j.at("heldout_P").get<double>();
    r.heldout_recall = j.at("heldout_R").get<double>();
    r.heldout_f1 = j.at("heldout_F1").get<double>();
    return r;
}

template <typename Real>
Tensor<Real> cross_entropy(Graph<Real>& g, const Tensor<Real>& probs, Label label) {
    const auto idx = static_cast<std::size_t>(label_id(label));
    if (probs.rank() != 1 || idx >= probs.numel()) {
        throw std::out_of_range("cross_entropy: label outside probability vector");
    }
    constexpr Real kFloor = Real(1e-12);
    const Real p = probs.data()[idx];
    const bool floored = !(p > kFloor);
    const Real loss = -std::log(floored ? kFloor : p);
    const bool req = g.recording() && probs.requires_grad();
    auto result = Tensor<Real>::adopt({}, {loss}, req);
    if (req) {
        g.record([probs, result, idx, floored]() mutable {
            if (!result.has_grad() || floored) return;
            const Real gv = result.grad()[0];
            probs.ensure_grad()[idx] += -gv / probs.data()[idx];
        });
    }
    return result;
}

template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<NamedParam<Real>>& params,
               const TrainConfig& cfg) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].tensor->numel(), Real(0));
            state.v[i].assign(params[i].tensor->numel(), Real(0));
        }
    }
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adam_step: optimizer state does not match parameter list");
    }
    for (auto& p : params) {
        if (p.tensor->requires_grad() && !p.tensor->has_grad()) {
            throw std::invalid_argument("adam_step: missing gradient for " + p.name);
        }
    }
    ++state.step;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (!p.tensor->requires_grad()) continue;
        auto theta = p.tensor->data();
        const auto grad = p.tensor->grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        const double decay = p.weight_decay ? cfg.l2 : 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double g = static_cast<double>(grad[k]) + decay * static_cast<double>(theta[k]);
            const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * g;
            const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * g * g;
            m[k] = static_cast<Real>(mk);
            v[k] = static_cast<Real>(vk);
            const double m_hat = mk / correction1;
            const double v_hat = vk / correction2;
            theta[k] = static_cast<Real>(static_cast<double>(theta[k]) -
                                         cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
        }
    }
}

std::size_t select_epoch(const std::vector<EpochRecord>& log) {
    if (log.empty()) throw std::invalid_argument("select_epoch: empty training log");
    std::size_t best = 0;
    for (std::size_t i = 1; i < log.size(); ++i) {
        if (log[i].heldout_f1 > log[best].heldout_f1) best = i;
    }
    return best;
}

template <typename Real>
Tensor<Real> batch_loss(Graph<Real>& g, const ModelParams<Real>& model, const ModelConfig& mcfg,
                        const std::vector<InstanceFeatures>& batch, bool training, Rng* dropout) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    std::size_t longest = 0;
    for (const auto& f : batch) longest = std::max(longest, f.length());
    Tensor<Real> total;
    for (const auto& f : batch) {
        const auto padded = pad_features(f, longest);
        auto out = forward(g, model, mcfg, padded.features, padded.mask, training, dropout);
        auto loss = cross_entropy(g, out.probs, f.label);
        total = total.defined() ? ops::add(g, total, loss) : loss;
    }
    return ops::scale(g, total, Real(1) / static_cast<Real>(batch.size()));
}

template <typename Real>
std::vector<Prediction<Real>> predict_all(const ModelParams<Real>& model, const ModelConfig& mcfg,
                                          const std::vector<InstanceFeatures>& data,
                                          std::size_t threads) {
    std::vector<Prediction<Real>> out(data.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Graph<Real> g(false);
            auto res = forward(g, model, mcfg, data[i]);
            auto& p = out[i];
            p.probs.assign(res.probs.data().begin(), res.probs.data().end());
            if (res.alpha.defined()) p.alpha.assign(res.alpha.data().begin(), res.alpha.data().end());
            p.label = predict_class<Real>(p.probs);
        }
    };
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, data.size()));
    if (threads == 1) {
        work(0, data.size());
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (data.size() + threads - 1) / threads;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(data.size(), begin + chunk);
        pool.emplace_back([&, t, begin, end] {
            try {
                work(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

namespace {

template <typename Real>
std::vector<Label> predict_subset(const ModelParams<Real>& model, const ModelConfig& mcfg,
                                  const std::vector<InstanceFeatures>& data,
                                  const std::vector<std::size_t>& indices, std::size_t threads) {
    std::vector<InstanceFeatures> subset;
    subset.reserve(indices.size());
    for (auto i : indices) subset.push_back(data[i]);
    std::vector<Label> labels;
    labels.reserve(indices.size());
    for (const auto& p : predict_all(model, mcfg, subset, threads)) labels.push_back(p.label);
    return labels;
}

}  // namespace

template <typename Real>
TrainResult train(ModelParams<Real>& model, const ModelConfig& mcfg,
                  const std::vector<InstanceFeatures>& data, const TrainConfig& cfg,
                  const std::function<bool(const EpochRecord&)>& on_epoch) {
    if (data.empty()) throw std::invalid_argument("train: no training instances");
    cfg.validate();
    mcfg.validate();

    TrainResult result;
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto split_rng = Rng::stream(cfg.seed, "split");
    split_rng.shuffle(order);
    std::size_t heldout = 0;
    if (cfg.heldout_fraction > 0.0 && data.size() > 1) {
        heldout = static_cast<std::size_t>(
            std::llround(cfg.heldout_fraction * static_cast<double>(data.size())));
        heldout = std::clamp<std::size_t>(heldout, 1, data.size() - 1);
    }
    result.heldout_indices.assign(order.begin(), order.begin() + static_cast<long>(heldout));
    result.train_indices.assign(order.begin() + static_cast<long>(heldout), order.end());
    std::sort(result.heldout_indices.begin(), result.heldout_indices.end());
    std::sort(result.train_indices.begin(), result.train_indices.end());

    std::vector<Label> heldout_gold;
    for (auto i : result.heldout_indices) heldout_gold.push_back(data[i].label);

    auto shuffle_rng = Rng::stream(cfg.seed, "shuffle");
    auto dropout_rng = Rng::stream(cfg.seed, "dropout");
    AdamState<Real> adam;
    auto params = model.parameters();
    std::vector<std::size_t> epoch_order = result.train_indices;
    std::optional<ModelParams<Real>> best;
    double best_f1 = -1.0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(epoch_order);
        double loss_sum = 0;
        for (std::size_t start = 0, batch_no = 0; start < epoch_order.size();
             start += cfg.batch_size, ++batch_no) {
            const std::size_t end = std::min(epoch_order.size(), start + cfg.batch_size);
            std::vector<InstanceFeatures> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) batch.push_back(data[epoch_order[k]]);

            model.zero_grad();
            Graph<Real> g;
            Tensor<Real> loss;
            try {
                loss = batch_loss(g, model, mcfg, batch, true, &dropout_rng);
            } catch (const NonFiniteError& e) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << ", batch " << batch_no << ": "
                    << e.what();
                throw TrainingError(msg.str());
            }
            const double value = static_cast<double>(loss.item());
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch " << batch_no;
                throw TrainingError(msg.str());
            }
            loss_sum += value * static_cast<double>(batch.size());
            g.backward(loss);
            adam_step(adam, params, cfg);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(epoch_order.size());
        if (cfg.track_train_accuracy) {
            auto predicted = predict_subset(model, mcfg, data, result.train_indices, cfg.threads);
            std::size_t hits = 0;
            for (std::size_t k = 0; k < predicted.size(); ++k) {
                if (predicted[k] == data[result.train_indices[k]].label) ++hits;
            }
            rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(predicted.size());
        }
        if (heldout) {
            auto predicted = predict_subset(model, mcfg, data, result.heldout_indices, cfg.threads);
            const auto report = evaluate(heldout_gold, predicted);
            rec.heldout_precision = report.micro.precision;
            rec.heldout_recall = report.micro.recall;
            rec.heldout_f1 = report.micro.f1;
            if (rec.heldout_f1 > best_f1) {
                best_f1 = rec.heldout_f1;
                best = model.clone();
            }
        }
        result.log.push_back(rec);
        if (on_epoch && !on_epoch(rec)) break;
    }

    if (heldout) {
        result.selected_epoch = select_epoch(result.log);
        // Copy values back into the live tensors so external handles stay valid.
        auto live = model.parameters();
        auto chosen = best->parameters();
        for (std::size_t i = 0; i < live.size(); ++i) {
            auto dst = live[i].tensor->data();
            auto src = chosen[i].tensor->data();
            std::copy(src.begin(), src.end(), dst.begin());
        }
    } else {
        result.selected_epoch = result.log.size() - 1;
    }
    model.zero_grad();
    return result;
}

template Tensor<float> cross_entropy(Graph<float>&, const Tensor<float>&, Label);
template Tensor<double> cross_entropy(Graph<double>&, const Tensor<double>&, Label);
template void adam_step(AdamState<float>&, std::vector<NamedParam<float>>&, const TrainConfig&);
template void adam_step(AdamState<double>&, std::vector<NamedParam<double>>&, const TrainConfig&);
template Tensor<float> batch_loss(Graph<float>&, const ModelParams<float>&, const ModelConfig&,
                                  const std::vector<InstanceFeatures>&, bool, Rng*);
template Tensor<double> batch_loss(Graph<double>&, const ModelParams<double>&, const ModelConfig&,
                                   const std::vector<InstanceFeatures>&, bool, Rng*);
template std::vector<Prediction<float>> predict_all(const ModelParams<float>&, const ModelConfig&,
                                                    const std::vector<InstanceFeatures>&,
                                                    std::size_t);
template std::vector<Prediction<double>> predict_all(const ModelParams<double>&,
                                                     const ModelConfig&,
                                                     const std::vector<InstanceFeatures>&,
                                                     std::size_t);
template TrainResult train(ModelParams<float>&, const ModelConfig&,
                           const std::vector<InstanceFeatures>&, const TrainConfig&,
                           const std::function<bool(const EpochRecord&)>&);
template TrainResult train(ModelParams<double>&, const ModelConfig&,
                           const std::vector<InstanceFeatures>&, const TrainConfig&,
                           const std::function<bool(const EpochRecord&)>&);

}  // namespace ddi
