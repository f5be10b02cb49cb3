#include "ddi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddi/checkpoint.hpp"
#include "ddi/corpus.hpp"
#include "ddi/evaluation.hpp"
#include "ddi/filtering.hpp"
#include "ddi/training.hpp"

#ifndef DDI_VERSION
#define DDI_VERSION "unknown"
#endif

namespace ddi::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    write_file_atomic(path, text);
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
        }
    }
    return rows;
}

// One manifest per run, written next to the primary output.
struct RunManifest {
    RunManifest(std::string cmd, std::vector<std::string> args)
        : command(std::move(cmd)), argv(std::move(args)) {}

    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    json result = json::object();
    std::string started_at = utc_now();

    void write(const fs::path& path) const {
        json j{{"command", command},
               {"argv", argv},
               {"config", config},
               {"seed", seed ? json(*seed) : json(nullptr)},
               {"inputs", inputs},
               {"outputs", outputs},
               {"result", result},
               {"code_version", DDI_VERSION},
               {"started_at", started_at},
               {"finished_at", utc_now()}};
        write_json(path, j);
    }
};

fs::path manifest_beside(const fs::path& output) {
    return output.parent_path() / (output.filename().string() + ".run.json");
}

void reject_unknown(const json& section, const json& known, const std::string& where) {
    if (!section.is_object()) throw UsageError(where + " must be an object");
    for (const auto& [key, _] : section.items()) {
        if (!known.contains(key)) throw UsageError("unknown key '" + key + "' in " + where);
    }
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    auto cfg = read_json(path);
    reject_unknown(cfg, json{{"model", 0}, {"train", 0}, {"data", 0}, {"filter", 0}}, "config file");
    return cfg;
}

std::string_view pooling_for(Variant v) {
    switch (v) {
        case Variant::BLstm: return "max";
        case Variant::AbLstm: return "attention";
        case Variant::Joint: return "both";
    }
    return "";
}

json prediction_row(const RawInstance& inst, const Prediction<float>& p) {
    std::vector<double> probs(p.probs.begin(), p.probs.end());
    return {{"pair", inst.provenance.pair}, {"label", std::string(label_name(p.label))}, {"probs", probs}};
}

json attention_row(const RawInstance& inst, const Prediction<float>& p) {
    std::vector<double> alpha(p.alpha.begin(), p.alpha.end());
    return {{"document", inst.provenance.document},
            {"sentence", inst.provenance.sentence},
            {"pair", inst.provenance.pair},
            {"tokens", inst.tokens},
            {"alpha", alpha}};
}

std::vector<InstanceFeatures> featurize_with(const std::vector<RawInstance>& raw, const Vocabulary& vocab,
                                             int radius) {
    PositionVocab pv(radius);
    std::vector<InstanceFeatures> out;
    out.reserve(raw.size());
    for (const auto& r : raw) out.push_back(featurize(r.tokens, r.drug_a, r.drug_b, r.label, vocab, pv));
    return out;
}

struct PredictionRecord {
    std::string pair;
    Label label;
};

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
    std::vector<PredictionRecord> out;
    for (const auto& row : read_jsonl(path)) {
        out.push_back({row.at("pair").get<std::string>(), parse_label(row.at("label").get<std::string>())});
    }
    return out;
}

// Predictions must line up one-to-one with the gold instances.
std::vector<Label> align(const std::vector<PredictionRecord>& pred, const std::vector<RawInstance>& gold,
                         const std::string& what) {
    if (pred.size() != gold.size()) {
        throw std::runtime_error(what + " has " + std::to_string(pred.size()) + " records but gold has " +
                                 std::to_string(gold.size()) + "; files are not aligned");
    }
    std::vector<Label> labels;
    labels.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].pair != gold[i].provenance.pair) {
            throw std::runtime_error(what + " record " + std::to_string(i) + " is pair " + pred[i].pair +
                                     " but gold has " + gold[i].provenance.pair);
        }
        labels.push_back(pred[i].label);
    }
    return labels;
}

struct Context {
    std::vector<std::string> argv;
    std::ostream& out;
    std::ostream& err;
};

// ---- preprocess ---------------------------------------------------------

struct PreprocessArgs {
    std::string input, output;
};

void run_preprocess(const PreprocessArgs& a, Context& ctx) {
    RunManifest m{"preprocess", ctx.argv};
    auto instances = generate_instances(parse_corpus(a.input));
    write_instances(a.output, instances);
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& i : instances) ++counts[static_cast<std::size_t>(label_id(i.label))];
    json by_label = json::object();
    for (Label l : kAllLabels) by_label[std::string(label_name(l))] = counts[static_cast<std::size_t>(label_id(l))];
    m.inputs = {{"corpus", a.input}};
    m.outputs = {{"instances", a.output}};
    m.result = {{"instances", instances.size()}, {"by_label", by_label}};
    m.write(manifest_beside(a.output));
    ctx.out << instances.size() << " instances written to " << a.output << "\n";
}

// ---- filter -------------------------------------------------------------

struct FilterArgs {
    std::string input, output, report, mode, config;
};

void run_filter(const FilterArgs& a, Context& ctx) {
    RunManifest m{"filter", ctx.argv};
    const auto file_cfg = load_config(a.config);
    FilterConfig fcfg;
    if (file_cfg.contains("filter")) fcfg = filter_config_from_json(file_cfg["filter"]);
    const auto mode = parse_filter_mode(a.mode);
    auto report = apply_filters(read_instances(a.input), mode, fcfg);
    write_instances(a.output, report.surviving);
    write_json(a.report, to_json(report));
    m.config = {{"mode", std::string(filter_mode_name(mode))}, {"filter", to_json(fcfg)}};
    m.inputs = {{"instances", a.input}};
    m.outputs = {{"instances", a.output}, {"report", a.report}};
    m.result = {{"input", report.input_count},
                {"surviving", report.surviving.size()},
                {"removed", report.removed.size()},
                {"removed_positive", report.removed_positive()}};
    m.write(manifest_beside(a.output));
    ctx.out << report.surviving.size() << " of " << report.input_count << " instances kept ("
            << report.removed_positive() << " positives removed)\n";
}

// ---- train --------------------------------------------------------------

struct TrainArgs {
    std::string input, output, config, variant, pooling, word_vectors;
    std::size_t hidden = 0, batch = 0, max_epochs = 0, threads = 1, word_dim = 0, position_dim = 0;
    double keep_prob = 0, l2 = 0, lr = 0, heldout = 0;
    std::uint64_t seed = 0;
    int radius = 0, min_count = 1;
    std::map<std::string, CLI::Option*> opts;

    bool given(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

struct ResolvedTrain {
    ModelConfig model;
    TrainConfig train;
    int min_count = 1;
    std::string word_vectors;

    json to_json() const {
        return {{"model", ddi::to_json(model)},
                {"train", ddi::to_json(train)},
                {"data", {{"min_count", min_count}, {"word_vectors", word_vectors}}}};
    }
};

// defaults < config file < flags
ResolvedTrain resolve_train(const TrainArgs& a) {
    const auto file_cfg = load_config(a.config);
    json model_sec = file_cfg.value("model", json::object());
    json train_sec = file_cfg.value("train", json::object());
    json data_sec = file_cfg.value("data", json::object());

    std::string variant_text = model_sec.value("variant", std::string("joint"));
    if (a.given("variant")) variant_text = a.variant;
    const Variant variant = parse_variant(variant_text);

    std::string pooling = model_sec.value("pooling", std::string(pooling_for(variant)));
    if (a.given("pooling")) pooling = a.pooling;
    if (pooling != pooling_for(variant)) {
        throw UsageError("config contradiction: variant " + std::string(variant_name(variant)) + " uses " +
                         std::string(pooling_for(variant)) + " pooling, not " + pooling);
    }
    model_sec.erase("pooling");

    ResolvedTrain r;
    json mj = ddi::to_json(ModelConfig::defaults_for(variant));
    reject_unknown(model_sec, mj, "model section");
    mj.update(model_sec);
    mj["variant"] = std::string(variant_name(variant));
    r.model = model_config_from_json(mj);

    json tj = ddi::to_json(TrainConfig::defaults_for(variant));
    reject_unknown(train_sec, tj, "train section");
    tj.update(train_sec);
    r.train = train_config_from_json(tj);

    reject_unknown(data_sec, json{{"min_count", 0}, {"word_vectors", 0}}, "data section");
    r.min_count = data_sec.value("min_count", 1);
    r.word_vectors = data_sec.value("word_vectors", std::string());

    if (a.given("hidden")) r.model.hidden = a.hidden;
    if (a.given("keep-prob")) r.model.keep_prob = a.keep_prob;
    if (a.given("word-dim")) r.model.word_dim = a.word_dim;
    if (a.given("position-dim")) r.model.position_dim = a.position_dim;
    if (a.given("radius")) r.model.position_radius = a.radius;
    if (a.given("batch")) r.train.batch_size = a.batch;
    if (a.given("l2")) r.train.l2 = a.l2;
    if (a.given("lr")) r.train.learning_rate = a.lr;
    if (a.given("max-epochs")) r.train.max_epochs = a.max_epochs;
    if (a.given("heldout")) r.train.heldout_fraction = a.heldout;
    if (a.given("seed")) r.train.seed = a.seed;
    if (a.given("threads")) r.train.threads = a.threads;
    if (a.given("min-count")) r.min_count = a.min_count;
    if (a.given("word-vectors")) r.word_vectors = a.word_vectors;
    r.model.validate();
    r.train.validate();
    if (r.min_count < 1) throw UsageError("min count must be >= 1");
    return r;
}

void run_train(const TrainArgs& a, Context& ctx) {
    RunManifest m{"train", ctx.argv};
    auto r = resolve_train(a);
    const auto raw = read_instances(a.input);
    std::vector<std::vector<std::string>> sentences;
    sentences.reserve(raw.size());
    for (const auto& i : raw) sentences.push_back(i.tokens);
    const auto vocab = build_vocab(sentences, r.min_count);
    r.model.word_vocab_size = vocab.size();
    const auto data = featurize_with(raw, vocab, r.model.position_radius);

    auto init_rng = Rng::stream(r.train.seed, "init");
    std::optional<EmbeddingMatrix<float>> pretrained;
    if (!r.word_vectors.empty()) {
        pretrained = load_word_vectors<float>(r.word_vectors, vocab, r.model.word_dim, init_rng);
    }
    auto params = ModelParams<float>::init(r.model, init_rng, pretrained);

    std::vector<json> log;
    auto result = train(params, r.model, data, r.train, [&](const EpochRecord& rec) {
        log.push_back(to_json(rec));
        ctx.out << "epoch " << rec.epoch << " loss " << rec.train_loss << " acc " << rec.train_accuracy
                << " heldout F1 " << rec.heldout_f1 << "\n";
        return true;
    });
    log.push_back({{"selected_epoch", result.selected_epoch},
                   {"train_instances", result.train_indices.size()},
                   {"heldout_instances", result.heldout_indices.size()}});

    const fs::path out_dir = a.output;
    save_checkpoint(out_dir, r.model, params, vocab);
    write_jsonl(out_dir / "train_log.jsonl", log);

    m.config = r.to_json();
    m.seed = r.train.seed;
    m.inputs = {{"instances", a.input}};
    if (!r.word_vectors.empty()) m.inputs["word_vectors"] = r.word_vectors;
    m.outputs = {{"checkpoint", out_dir.string()}, {"log", (out_dir / "train_log.jsonl").string()}};
    m.result = {{"selected_epoch", result.selected_epoch},
                {"parameters", params.parameter_count()},
                {"vocabulary", vocab.size()}};
    m.write(out_dir / "run.json");
    ctx.out << "selected epoch " << result.selected_epoch << ", checkpoint in " << out_dir.string() << "\n";
}

// ---- predict / attention-export -------------------------------------------

struct PredictArgs {
    std::string checkpoint, input, output, attention;
    std::size_t threads = 1;
};

std::vector<Prediction<float>> predict_file(const std::string& checkpoint, const std::vector<RawInstance>& raw,
                                            std::size_t threads, ModelConfig* cfg_out = nullptr) {
    auto ck = load_checkpoint<float>(checkpoint);
    if (cfg_out) *cfg_out = ck.config;
    const auto data = featurize_with(raw, ck.vocab, ck.config.position_radius);
    return predict_all(ck.params, ck.config, data, threads);
}

void run_predict(const PredictArgs& a, Context& ctx) {
    RunManifest m{"predict", ctx.argv};
    const auto raw = read_instances(a.input);
    ModelConfig cfg;
    const auto preds = predict_file(a.checkpoint, raw, a.threads, &cfg);
    if (!a.attention.empty() && !cfg.uses_attention()) {
        throw UsageError("b-lstm checkpoints have no attention weights to export");
    }
    std::vector<json> rows, alpha_rows;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        rows.push_back(prediction_row(raw[i], preds[i]));
        if (!a.attention.empty()) alpha_rows.push_back(attention_row(raw[i], preds[i]));
    }
    write_jsonl(a.output, rows);
    m.inputs = {{"checkpoint", a.checkpoint}, {"instances", a.input}};
    m.outputs = {{"predictions", a.output}};
    if (!a.attention.empty()) {
        write_jsonl(a.attention, alpha_rows);
        m.outputs["attention"] = a.attention;
    }
    m.config = {{"model", to_json(cfg)}, {"threads", a.threads}};
    m.write(manifest_beside(a.output));
    ctx.out << rows.size() << " predictions written to " << a.output << "\n";
}

void run_attention_export(const PredictArgs& a, Context& ctx) {
    RunManifest m{"attention-export", ctx.argv};
    const auto raw = read_instances(a.input);
    ModelConfig cfg;
    const auto preds = predict_file(a.checkpoint, raw, a.threads, &cfg);
    if (!cfg.uses_attention()) throw UsageError("b-lstm checkpoints have no attention weights to export");
    std::vector<json> rows;
    for (std::size_t i = 0; i < raw.size(); ++i) rows.push_back(attention_row(raw[i], preds[i]));
    write_jsonl(a.output, rows);
    m.config = {{"model", to_json(cfg)}, {"threads", a.threads}};
    m.inputs = {{"checkpoint", a.checkpoint}, {"instances", a.input}};
    m.outputs = {{"attention", a.output}};
    m.write(manifest_beside(a.output));
    ctx.out << rows.size() << " attention records written to " << a.output << "\n";
}

// ---- evaluate / analyze -------------------------------------------------

struct EvaluateArgs {
    std::string predictions, gold, filter_report, output, compare;
};

void run_evaluate(const EvaluateArgs& a, Context& ctx) {
    RunManifest m{"evaluate", ctx.argv};
    const auto gold_raw = read_instances(a.gold);
    const auto pred = align(read_predictions(a.predictions), gold_raw, "predictions file");
    std::vector<Label> gold;
    for (const auto& g : gold_raw) gold.push_back(g.label);

    std::vector<Label> reinserted;
    m.inputs = {{"predictions", a.predictions}, {"gold", a.gold}};
    if (!a.filter_report.empty()) {
        const auto fr = filter_report_from_json(read_json(a.filter_report));
        if (fr.mode != FilterMode::Test) throw UsageError("filter report was not produced in test mode");
        for (const auto& rm : fr.removed) reinserted.push_back(rm.instance.label);
        m.inputs["filter_report"] = a.filter_report;
    }
    const auto report = evaluate(gold, pred, reinserted);
    json j = to_json(report);

    if (!a.compare.empty()) {
        const auto other = align(read_predictions(a.compare), gold_raw, "comparison file");
        std::size_t b = 0, c = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool x = pred[i] == gold[i], y = other[i] == gold[i];
            if (x && !y) ++b;
            if (!x && y) ++c;
        }
        json mc = {{"b", b}, {"c", c}};
        if (b + c > 0) mc.update(to_json(mcnemar(b, c)));
        j["mcnemar"] = mc;
        m.inputs["compare"] = a.compare;
    }
    write_json(a.output, j);
    m.outputs = {{"report", a.output}};
    m.write(manifest_beside(a.output));
    ctx.out << "micro P " << report.micro.precision << " R " << report.micro.recall << " F1 " << report.micro.f1
            << ", macro F1 " << report.macro_f1 << "\n";
}

struct AnalyzeArgs {
    std::string predictions, gold, output;
};

void run_analyze(const AnalyzeArgs& a, Context& ctx) {
    RunManifest m{"analyze", ctx.argv};
    const auto gold_raw = read_instances(a.gold);
    const auto pred = align(read_predictions(a.predictions), gold_raw, "predictions file");
    std::vector<LengthSample> samples;
    for (std::size_t i = 0; i < gold_raw.size(); ++i) {
        const auto& g = gold_raw[i];
        samples.push_back(make_length_sample(g.tokens.size(), g.drug_a, g.drug_b, pred[i] == g.label,
                                             is_positive(g.label)));
    }
    write_json(a.output, to_json(length_stats(samples)));
    m.inputs = {{"predictions", a.predictions}, {"gold", a.gold}};
    m.outputs = {{"stats", a.output}};
    m.write(manifest_beside(a.output));
    ctx.out << "length statistics for " << samples.size() << " instances written to " << a.output << "\n";
}

int run(const std::vector<std::string>& args, Context& ctx, int depth);

int rerun(const std::string& manifest, Context& ctx, int depth) {
    if (depth > 0) throw UsageError("a rerun manifest cannot itself be a rerun");
    const auto j = read_json(manifest);
    const auto argv = j.at("argv").get<std::vector<std::string>>();
    Context inner{argv, ctx.out, ctx.err};
    return run(argv, inner, depth + 1);
}

int run(const std::vector<std::string>& args, Context& ctx, int depth) {
    CLI::App app{"Drug-drug interaction classification with Bi-LSTM models", "ddi"};
    app.require_subcommand(1);
    app.set_version_flag("--version", DDI_VERSION);

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "Corpus XML to an instance file");
    pre_cmd->add_option("-i,--input", pre.input, "XML file or directory")->required()->check(CLI::ExistingPath);
    pre_cmd->add_option("-o,--output", pre.output, "Instance file (JSONL)")->required();

    FilterArgs fil;
    auto* fil_cmd = app.add_subcommand("filter", "Remove trivially negative pairs");
    fil_cmd->add_option("-i,--input", fil.input)->required()->check(CLI::ExistingFile);
    fil_cmd->add_option("-o,--output", fil.output, "Surviving instances")->required();
    fil_cmd->add_option("--report", fil.report, "Filter report (JSON)")->required();
    fil_cmd->add_option("--mode", fil.mode, "train or test")->required();
    fil_cmd->add_option("--config", fil.config, "JSON config with a 'filter' section")->check(CLI::ExistingFile);

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    tr_cmd->add_option("-i,--input", tr.input)->required()->check(CLI::ExistingFile);
    tr_cmd->add_option("-o,--output", tr.output, "Checkpoint directory")->required();
    tr_cmd->add_option("--config", tr.config, "JSON config (model/train/data sections)")->check(CLI::ExistingFile);
    tr.opts["variant"] = tr_cmd->add_option("--variant", tr.variant, "b-lstm, ab-lstm or joint");
    tr.opts["pooling"] = tr_cmd->add_option("--pooling", tr.pooling, "max, attention or both (must match variant)");
    tr.opts["hidden"] = tr_cmd->add_option("--hidden", tr.hidden);
    tr.opts["batch"] = tr_cmd->add_option("--batch", tr.batch);
    tr.opts["keep-prob"] = tr_cmd->add_option("--keep-prob", tr.keep_prob);
    tr.opts["l2"] = tr_cmd->add_option("--l2", tr.l2);
    tr.opts["lr"] = tr_cmd->add_option("--lr", tr.lr);
    tr.opts["max-epochs"] = tr_cmd->add_option("--max-epochs", tr.max_epochs);
    tr.opts["heldout"] = tr_cmd->add_option("--heldout", tr.heldout, "Held-out fraction for epoch selection");
    tr.opts["seed"] = tr_cmd->add_option("--seed", tr.seed);
    tr.opts["threads"] = tr_cmd->add_option("--threads", tr.threads);
    tr.opts["word-dim"] = tr_cmd->add_option("--word-dim", tr.word_dim);
    tr.opts["position-dim"] = tr_cmd->add_option("--position-dim", tr.position_dim);
    tr.opts["radius"] = tr_cmd->add_option("--radius", tr.radius, "Position distance clamp");
    tr.opts["min-count"] = tr_cmd->add_option("--min-count", tr.min_count);
    tr.opts["word-vectors"] =
        tr_cmd->add_option("--word-vectors", tr.word_vectors, "Pretrained vectors (text)")->check(CLI::ExistingFile);

    PredictArgs pr;
    auto* pr_cmd = app.add_subcommand("predict", "Label instances with a checkpoint");
    pr_cmd->add_option("-c,--checkpoint", pr.checkpoint)->required()->check(CLI::ExistingDirectory);
    pr_cmd->add_option("-i,--input", pr.input)->required()->check(CLI::ExistingFile);
    pr_cmd->add_option("-o,--output", pr.output, "Predictions (JSONL)")->required();
    pr_cmd->add_option("--attention", pr.attention, "Also write attention records here");
    pr_cmd->add_option("--threads", pr.threads);

    PredictArgs ax;
    auto* ax_cmd = app.add_subcommand("attention-export", "Per-instance attention weights");
    ax_cmd->add_option("-c,--checkpoint", ax.checkpoint)->required()->check(CLI::ExistingDirectory);
    ax_cmd->add_option("-i,--input", ax.input)->required()->check(CLI::ExistingFile);
    ax_cmd->add_option("-o,--output", ax.output)->required();
    ax_cmd->add_option("--threads", ax.threads);

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
    ev_cmd->add_option("-p,--predictions", ev.predictions)->required()->check(CLI::ExistingFile);
    ev_cmd->add_option("-g,--gold", ev.gold, "Instance file the predictions were made on")
        ->required()
        ->check(CLI::ExistingFile);
    ev_cmd->add_option("--filter-report", ev.filter_report, "Test-mode filter report")->check(CLI::ExistingFile);
    ev_cmd->add_option("--compare", ev.compare, "Second predictions file for McNemar")->check(CLI::ExistingFile);
    ev_cmd->add_option("-o,--output", ev.output)->required();

    AnalyzeArgs an;
    auto* an_cmd = app.add_subcommand("analyze", "Sentence length statistics of errors");
    an_cmd->add_option("-p,--predictions", an.predictions)->required()->check(CLI::ExistingFile);
    an_cmd->add_option("-g,--gold", an.gold)->required()->check(CLI::ExistingFile);
    an_cmd->add_option("-o,--output", an.output)->required();

    std::string manifest;
    auto* re_cmd = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
    re_cmd->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        ctx.out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        ctx.out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        ctx.out << DDI_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (pre_cmd->parsed()) run_preprocess(pre, ctx);
    else if (fil_cmd->parsed()) run_filter(fil, ctx);
    else if (tr_cmd->parsed()) run_train(tr, ctx);
    else if (pr_cmd->parsed()) run_predict(pr, ctx);
    else if (ax_cmd->parsed()) run_attention_export(ax, ctx);
    else if (ev_cmd->parsed()) run_evaluate(ev, ctx);
    else if (an_cmd->parsed()) run_analyze(an, ctx);
    else if (re_cmd->parsed()) return rerun(manifest, ctx, depth);
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto report = [&](std::string msg) {
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "ddi: " << msg << "\n";
    };
    Context ctx{args, out, err};
    try {
        return run(args, ctx, 0);
    } catch (const UsageError& e) {
        report(e.what());
        return 2;
    } catch (const std::exception& e) {
        report(e.what());
        return 1;
    }
}

}  // namespace ddi::cli
