// Acceptance run: one PASS/FAIL/SKIP line per criterion; exit status is
// nonzero only when a criterion fails.

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "ddi/checkpoint.hpp"
#include "ddi/cli.hpp"
#include "ddi/evaluation.hpp"
#include "ddi/filtering.hpp"
#include "ddi/training.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ddi;
namespace oracle = ddi::test::oracle;
namespace fs = std::filesystem;
using ddi::test::check_gradients;
using ddi::test::random_tensor;
using ddi::test::weighted_sum;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

using Check = std::function<Tensor<double>(Graph<double>&)>;

std::vector<oracle::Vec> rows_of(const Tensor<float>& Z) {
    std::vector<oracle::Vec> out(Z.dim(0), oracle::Vec(Z.dim(1)));
    for (std::size_t t = 0; t < Z.dim(0); ++t) {
        for (std::size_t j = 0; j < Z.dim(1); ++j) out[t][j] = Z.at(t, j);
    }
    return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    std::vector<std::pair<std::string, std::function<double()>>> cases;
    auto add = [&](std::string name, Check fn, std::vector<Tensor<double>> params) {
        cases.emplace_back(std::move(name), [fn, params] { return check_gradients(fn, params).max_rel_error; });
    };

    auto A = random_tensor<double>({3, 4}, rng), B = random_tensor<double>({4, 2}, rng);
    auto v4 = random_tensor<double>({4}, rng), v3 = random_tensor<double>({3}, rng);
    add("matmul", [=](Graph<double>& g) { return weighted_sum(g, ops::matmul(g, A, B)); }, {A, B});
    add("matvec", [=](Graph<double>& g) { return weighted_sum(g, ops::matmul(g, A, v4)); }, {A, v4});
    add("vecmat", [=](Graph<double>& g) { return weighted_sum(g, ops::matmul(g, v3, A)); }, {v3, A});
    auto P = random_tensor<double>({3, 4}, rng);
    add("sigmoid", [=](Graph<double>& g) { return weighted_sum(g, ops::sigmoid(g, A)); }, {A});
    add("tanh", [=](Graph<double>& g) { return weighted_sum(g, ops::tanh(g, A)); }, {A});
    add("add", [=](Graph<double>& g) { return weighted_sum(g, ops::add(g, A, P)); }, {A, P});
    add("mul", [=](Graph<double>& g) { return weighted_sum(g, ops::mul(g, A, P)); }, {A, P});
    add("softmax", [=](Graph<double>& g) { return weighted_sum(g, ops::softmax_vec(g, v4)); }, {v4});
    add("softmax masked",
        [=](Graph<double>& g) { return weighted_sum(g, ops::softmax_vec(g, v4, Mask{1, 0, 1, 1})); }, {v4});
    add("concat", [=](Graph<double>& g) { return weighted_sum(g, ops::concat(g, v4, v3)); }, {v4, v3});
    add("concat rows", [=](Graph<double>& g) { return weighted_sum(g, ops::concat(g, A, P)); }, {A, P});
    const std::vector<int> ids{2, 0, 2};
    add("gather_rows", [=](Graph<double>& g) { return weighted_sum(g, ops::gather_rows(g, A, ids)); }, {A});
    add("row", [=](Graph<double>& g) { return weighted_sum(g, ops::row(g, A, 1)); }, {A});
    add("stack_rows", [=](Graph<double>& g) { return weighted_sum(g, ops::stack_rows(g, {v4, v4, v4})); }, {v4});
    add("sum", [=](Graph<double>& g) { return ops::sum(g, ops::mul(g, A, A)); }, {A});
    add("scale", [=](Graph<double>& g) { return weighted_sum(g, ops::scale(g, A, -1.5)); }, {A});
    const std::vector<std::uint8_t> keep{1, 0, 1, 1};
    add("dropout", [=](Graph<double>& g) { return weighted_sum(g, ops::dropout(g, v4, 0.7, keep)); }, {v4});

    auto lstm = LstmParams<double>::init(3, 4, rng);
    for (auto& [_, t] : lstm.named()) {
        for (auto& x : t->data()) x = rng.uniform(-0.5, 0.5);
    }
    std::vector<Tensor<double>> lstm_tensors;
    for (auto& [_, t] : lstm.named()) lstm_tensors.push_back(*t);
    auto h = random_tensor<double>({3}, rng), c = random_tensor<double>({3}, rng);
    auto lt = lstm_tensors;
    lt.insert(lt.end(), {v4, h, c});
    add("lstm_step",
        [=](Graph<double>& g) {
            auto s = lstm_step(g, lstm, v4, h, c);
            return ops::add(g, weighted_sum(g, s.h, 1), weighted_sum(g, s.c, 2));
        },
        lt);
    auto stack = BiLstmStack<double>::init(3, 4, rng);
    auto X = random_tensor<double>({5, 4}, rng);
    std::vector<Tensor<double>> st{X};
    for (auto* dir : {&stack.forward, &stack.backward}) {
        for (auto& [_, t] : dir->named()) st.push_back(*t);
    }
    add("bilstm masked",
        [=](Graph<double>& g) { return weighted_sum(g, bilstm_forward(g, stack, X, Mask{1, 1, 0, 1, 1})); }, st);
    auto Z = random_tensor<double>({5, 6}, rng);
    add("max_pool", [=](Graph<double>& g) { return weighted_sum(g, max_pool(g, Z, Mask{1, 1, 1, 0, 1})); }, {Z});
    auto att = AttentionParams<double>::init(6, rng);
    add("attentive_pool",
        [=](Graph<double>& g) {
            auto r = attentive_pool(g, Z, att, Mask{1, 0, 1, 1, 1});
            return ops::add(g, weighted_sum(g, r.pooled, 1), weighted_sum(g, r.alpha, 2));
        },
        {Z, att.w_a});
    OutputParams<double> out{random_tensor<double>({6, 5}, rng), random_tensor<double>({5}, rng)};
    auto h2 = random_tensor<double>({6}, rng);
    add("output_layer", [=](Graph<double>& g) { return weighted_sum(g, output_layer(g, out, h2)); },
        {out.W_o, out.b_o, h2});
    add("cross_entropy",
        [=](Graph<double>& g) { return cross_entropy(g, output_layer(g, out, h2), Label::Int); },
        {out.W_o, out.b_o, h2});
    auto words = EmbeddingMatrix<double>::random(9, 4, rng);
    auto p1 = EmbeddingMatrix<double>::random(12, 2, rng);
    auto p2 = EmbeddingMatrix<double>::random(12, 2, rng);
    auto fe = ddi::test::random_instance(5, 9, 5, rng);
    add("embed", [=](Graph<double>& g) { return weighted_sum(g, embed(g, fe, words, p1, p2)); },
        {words.weights, p1.weights, p2.weights});

    // Full models: 6 tokens, N = 8, d = 8 + 2 * 2 = 12.
    for (auto v : {Variant::BLstm, Variant::AbLstm, Variant::Joint}) {
        auto cfg = ddi::test::tiny_config(v, 15, 8, 8, 2);
        cfg.position_radius = 6;
        auto params = std::make_shared<ModelParams<double>>(ModelParams<double>::init(cfg, rng));
        auto f = ddi::test::random_instance(6, 15, cfg.position_radius, rng, Label::Mechanism);
        auto tensors = ddi::test::model_tensors(*params);
        add(std::string(variant_name(v)),
            [=](Graph<double>& g) { return cross_entropy(g, forward(g, *params, cfg, f).probs, f.label); },
            tensors);
    }

    double worst = 0;
    std::string worst_name;
    for (auto& [name, run] : cases) {
        const double e = run();
        if (e > worst) {
            worst = e;
            worst_name = name;
        }
    }
    const double secs = seconds_since(t0);
    return pass_if(worst < 1e-3 && secs < 30.0, std::to_string(cases.size()) + " checks, max rel error " +
                                                    fmt(worst) + " (" + worst_name + "), " + fmt(secs) + " s");
}

Outcome oracles() {
    Rng rng(202);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto p = LstmParams<float>::init(8, 12, rng);
        for (auto& [_, t] : p.named()) {
            for (auto& x : t->data()) x = static_cast<float>(rng.uniform(-0.5, 0.5));
        }
        auto x = random_tensor<float>({12}, rng, -1, 1, false);
        auto h = random_tensor<float>({8}, rng, -1, 1, false);
        auto c = random_tensor<float>({8}, rng, -1, 1, false);
        Graph<float> g(false);
        auto s = lstm_step(g, p, x, h, c);
        auto ref = oracle::lstm_step(p, oracle::values(x), oracle::values(h), oracle::values(c));
        worst = std::max({worst, max_abs_diff(oracle::values(s.h), ref.h), max_abs_diff(oracle::values(s.c), ref.c)});

        auto Z = random_tensor<float>({7, 16}, rng, -1, 1, false);
        auto att = AttentionParams<float>::init(16, rng);
        auto r = attentive_pool(g, Z, att);
        auto aref = oracle::attentive_pool(rows_of(Z), oracle::values(att.w_a));
        worst = std::max({worst, max_abs_diff(oracle::values(r.pooled), aref.pooled),
                          max_abs_diff(oracle::values(r.alpha), aref.alpha)});

        OutputParams<float> out{random_tensor<float>({16, 5}, rng, -1, 1, false),
                                random_tensor<float>({5}, rng, -1, 1, false)};
        auto h2 = random_tensor<float>({16}, rng, -1, 1, false);
        auto probs = output_layer(g, out, h2);
        auto oref = oracle::output_layer(oracle::values(h2), oracle::values(out.W_o), oracle::values(out.b_o));
        worst = std::max(worst, max_abs_diff(oracle::values(probs), oref));
    }
    return pass_if(worst < 1e-6, "lstm_step, attentive_pool, output layer in float: max abs diff " + fmt(worst));
}

Outcome normalization() {
    Rng rng(303);
    ModelConfig cfgs[] = {ddi::test::tiny_config(Variant::AbLstm, 30, 6, 6, 3),
                          ddi::test::tiny_config(Variant::Joint, 30, 6, 6, 3)};
    std::vector<ModelParams<double>> models;
    for (auto& c : cfgs) models.push_back(ModelParams<double>::init(c, rng));
    double worst_p = 0, worst_a = 0;
    std::size_t instances = 0;
    bool pads_zero = true;
    // Batches of 10 padded to their longest member, like training batches.
    for (int batch = 0; batch < 100; ++batch) {
        const std::size_t k = static_cast<std::size_t>(batch) % 2;
        std::vector<InstanceFeatures> items;
        std::size_t longest = 0;
        for (int i = 0; i < 10; ++i) {
            items.push_back(ddi::test::random_instance(2 + rng.below(20), 30, cfgs[k].position_radius, rng));
            longest = std::max(longest, items.back().length());
        }
        for (const auto& f : items) {
            auto padded = pad_features(f, longest + static_cast<std::size_t>(batch % 3));
            Graph<double> g(false);
            auto r = forward(g, models[k], cfgs[k], padded.features, padded.mask);
            double ps = 0, as = 0;
            for (double x : r.probs.values()) ps += x;
            for (std::size_t t = 0; t < r.alpha.numel(); ++t) {
                as += r.alpha.at(t);
                if (!padded.mask[t] && r.alpha.at(t) != 0.0) pads_zero = false;
            }
            worst_p = std::max(worst_p, std::abs(ps - 1));
            worst_a = std::max(worst_a, std::abs(as - 1));
            ++instances;
        }
    }
    return pass_if(worst_p < 1e-7 && worst_a < 1e-7 && pads_zero,
                   std::to_string(instances) + " padded instances: |sum p - 1| <= " + fmt(worst_p) +
                       ", |sum alpha - 1| <= " + fmt(worst_a) + (pads_zero ? ", padding alpha = 0" : ", padding alpha != 0"));
}

Outcome adam() {
    TrainConfig cfg;
    cfg.l2 = 0;
    double worst = 0;
    for (double grad : {1.0, -1.0, 0.01, -0.01}) {
        auto theta = Tensor<double>::vector({0.25}, true);
        theta.ensure_grad()[0] = grad;
        std::vector<NamedParam<double>> params{{"theta", &theta, false}};
        AdamState<double> state;
        adam_step(state, params, cfg);
        const double expected = -cfg.learning_rate * grad / (std::abs(grad) + cfg.epsilon);
        worst = std::max(worst, std::abs((theta.at(0) - 0.25) - expected));
    }
    return pass_if(worst < 1e-9, "max |delta - closed form| = " + fmt(worst));
}

Outcome overfit() {
    const auto raw = read_instances(ddi::test::data_path("synthetic.jsonl"));
    const auto corpus = ddi::test::featurize_all(raw, 3);
    std::ostringstream detail;
    bool ok = true;
    for (auto v : {Variant::BLstm, Variant::AbLstm, Variant::Joint}) {
        const auto t0 = std::chrono::steady_clock::now();
        auto mcfg = ModelConfig::defaults_for(v);
        mcfg.hidden = 8;
        mcfg.word_dim = 16;
        mcfg.position_dim = 2;
        mcfg.position_radius = 3;
        mcfg.word_vocab_size = corpus.vocab.size();
        auto tcfg = TrainConfig::defaults_for(v);
        tcfg.batch_size = 8;
        tcfg.learning_rate = 1e-2;
        tcfg.max_epochs = 300;
        tcfg.heldout_fraction = 0.2;  // 8 instances, so the split holds positives
        tcfg.seed = 5;
        if (v == Variant::Joint) tcfg.l2 = 1e-2;
        auto init = Rng::stream(tcfg.seed, "init");
        auto model = ModelParams<float>::init(mcfg, init);
        const bool need_heldout = v == Variant::Joint;
        auto result = train(model, mcfg, corpus.features, tcfg, [&](const EpochRecord& r) {
            return !(r.train_accuracy == 1.0 && (!need_heldout || r.heldout_f1 == 1.0));
        });
        const double secs = seconds_since(t0);
        bool fitted = false;
        std::size_t fit_epoch = 0;
        for (const auto& r : result.log) {
            if (r.train_accuracy == 1.0) {
                fitted = true;
                fit_epoch = r.epoch;
                break;
            }
        }
        const bool perfect_pick = result.log[result.selected_epoch].heldout_f1 == 1.0;
        ok = ok && fitted && secs < 60.0 && (v != Variant::Joint || perfect_pick);
        detail << variant_name(v) << ": " << (fitted ? "100% train acc at epoch " + std::to_string(fit_epoch) : "not fitted")
               << ", " << fmt(secs) << " s";
        if (v == Variant::Joint) detail << ", selected epoch held-out F1 " << result.log[result.selected_epoch].heldout_f1;
        if (v != Variant::Joint) detail << "; ";
    }
    return pass_if(ok, detail.str());
}

Outcome filtering() {
    auto inst = generate_instances(parse_corpus(ddi::test::data_path("filter_fixture.xml")));
    auto expected = nlohmann::json::parse(ddi::test::read_file(ddi::test::data_path("filter_fixture_expected.json")));
    std::map<std::string, int> want, got;
    for (const auto& e : expected.at("removed")) want[e.at("pair")] = e.at("rule");
    auto report = apply_filters(inst, FilterMode::Test);
    for (const auto& rm : report.removed) got[rm.instance.provenance.pair] = static_cast<int>(rm.rule);
    std::set<std::string> sentences;
    for (const auto& i : inst) sentences.insert(i.provenance.sentence);
    return pass_if(got == want && report.removed_positive() == 0 &&
                       report.removed_by_rule[0] > 0 && report.removed_by_rule[1] > 0 && report.removed_by_rule[2] > 0,
                   std::to_string(sentences.size()) + " sentences, " + std::to_string(got.size()) + "/" +
                       std::to_string(want.size()) + " expected removals (rules " +
                       std::to_string(report.removed_by_rule[0]) + "/" + std::to_string(report.removed_by_rule[1]) +
                       "/" + std::to_string(report.removed_by_rule[2]) + "), " +
                       std::to_string(report.removed_positive()) + " positives removed");
}

Outcome determinism() {
    ddi::test::TempDir dir;
    auto train_into = [&](const fs::path& out) {
        std::ostringstream sink;
        return cli::dispatch({"train", "-i", ddi::test::data_path("synthetic.jsonl").string(), "-o", out.string(),
                              "--variant", "ab-lstm", "--hidden", "8", "--word-dim", "8", "--position-dim", "2",
                              "--batch", "8", "--max-epochs", "4", "--seed", "77"},
                             sink, sink);
    };
    if (train_into(dir / "a") != 0 || train_into(dir / "b") != 0) return {Status::Fail, "train run failed"};
    std::vector<std::string> differing;
    for (const char* f : {"manifest", "params.bin", "vocab", "train_log.jsonl"}) {
        if (ddi::test::read_file(dir / "a" / f) != ddi::test::read_file(dir / "b" / f)) differing.push_back(f);
    }
    auto strip = [&](const fs::path& p) {
        auto j = nlohmann::json::parse(ddi::test::read_file(p));
        j.erase("started_at");
        j.erase("finished_at");
        j.erase("argv");
        j.erase("outputs");
        return j;
    };
    if (strip(dir / "a" / "run.json") != strip(dir / "b" / "run.json")) differing.push_back("run.json");
    std::string detail = "checkpoint files and log byte-identical across two seeded runs";
    if (!differing.empty()) {
        detail = "differs:";
        for (const auto& d : differing) detail += " " + d;
    }
    return pass_if(differing.empty(), detail);
}

Outcome checkpoint_round_trip() {
    const auto raw = read_instances(ddi::test::data_path("synthetic.jsonl"));
    const auto corpus = ddi::test::featurize_all(raw, 10);
    auto mcfg = ddi::test::tiny_config(Variant::Joint, corpus.vocab.size(), 6, 8, 3);
    auto tcfg = TrainConfig::defaults_for(mcfg.variant);
    tcfg.max_epochs = 2;
    tcfg.batch_size = 10;
    Rng rng(404);
    auto model = ModelParams<float>::init(mcfg, rng);
    train(model, mcfg, corpus.features, tcfg);

    std::vector<InstanceFeatures> data;
    for (int i = 0; i < 100; ++i) {
        data.push_back(ddi::test::random_instance(2 + rng.below(25), corpus.vocab.size(), mcfg.position_radius, rng));
    }
    ddi::test::TempDir dir;
    save_checkpoint(dir / "ck", mcfg, model, corpus.vocab);
    auto loaded = load_checkpoint<float>(dir / "ck");
    auto a = predict_all(model, mcfg, data);
    auto b = predict_all(loaded.params, loaded.config, data);
    std::size_t same = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (a[i].probs == b[i].probs && a[i].alpha == b[i].alpha && a[i].label == b[i].label) ++same;
    }
    return pass_if(same == data.size(), std::to_string(same) + "/100 predictions bit-identical after reload");
}

Outcome evaluation_oracle() {
    auto r = evaluate({Label::Advice, Label::Advice, Label::Effect, Label::Negative},
                      {Label::Advice, Label::Effect, Label::Effect, Label::Negative});
    const double third2 = 2.0 / 3.0;
    const auto m = mcnemar(15, 5);
    return pass_if(r.micro.precision == third2 && r.micro.recall == third2 && r.micro.f1 == third2 &&
                       m.statistic == 4.05,
                   "micro P/R/F1 = " + fmt(r.micro.precision) + "/" + fmt(r.micro.recall) + "/" + fmt(r.micro.f1) +
                       ", McNemar(15,5) = " + fmt(m.statistic));
}

std::optional<fs::path> find_dir(const fs::path& root, const std::string& name, int depth = 3) {
    if (!fs::is_directory(root)) return std::nullopt;
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_directory()) continue;
        std::string n = e.path().filename().string();
        std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (n == name) return e.path();
    }
    if (depth == 0) return std::nullopt;
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_directory()) continue;
        if (auto hit = find_dir(e.path(), name, depth - 1)) return hit;
    }
    return std::nullopt;
}

Outcome corpus_counts() {
    const char* env = std::getenv("DDI_CORPUS_DIR");
    if (!env || !*env) return {Status::Skip, "DDI_CORPUS_DIR not set"};
    const auto train_dir = find_dir(env, "train");
    const auto test_dir = find_dir(env, "test");
    if (!train_dir || !test_dir) return {Status::Fail, std::string("no Train/ and Test/ directories under ") + env};
    const auto train = generate_instances(parse_corpus(*train_dir));
    const auto test = generate_instances(parse_corpus(*test_dir));
    const auto ftrain = apply_filters(train, FilterMode::Train);
    const auto ftest = apply_filters(test, FilterMode::Test);
    std::size_t test_pos = 0, kept_pos = 0;
    for (const auto& i : test) test_pos += is_positive(i.label);
    for (const auto& i : ftest.surviving) kept_pos += is_positive(i.label);
    auto within = [](std::size_t got, double want) { return std::abs(static_cast<double>(got) - want) <= 0.03 * want; };
    const bool ok = train.size() == 27774 && test.size() == 5716 && kept_pos == test_pos && test_pos == 979 &&
                    within(ftrain.surviving.size(), 16495) && within(ftest.surviving.size(), 4025);
    return pass_if(ok, "pairs " + std::to_string(train.size()) + "/" + std::to_string(test.size()) +
                           ", after filtering " + std::to_string(ftrain.surviving.size()) + "/" +
                           std::to_string(ftest.surviving.size()) + ", test positives kept " +
                           std::to_string(kept_pos) + "/" + std::to_string(test_pos));
}

Outcome full_scores() {
    return {Status::Skip,
            "test-set F1 needs the licensed corpus, pretrained vectors and repeated runs; see README for the recipe"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradients},
        {"oracle equivalence", oracles},
        {"normalization invariants", normalization},
        {"adam first step", adam},
        {"overfit smoke test", overfit},
        {"filtering fixture", filtering},
        {"determinism", determinism},
        {"checkpoint round trip", checkpoint_round_trip},
        {"evaluation oracle", evaluation_oracle},
        {"corpus statistics", corpus_counts},
        {"published scores", full_scores},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        if (o.status == Status::Fail) ++failures;
        std::cout << tag << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
