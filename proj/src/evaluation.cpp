#include "ddi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace ddi {

ClassScores ClassScores::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassScores s;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    // 2PR/(P+R) written over counts, zero when P + R = 0.
    s.f1 = tp ? static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
    return s;
}

std::size_t EvalReport::gold_count(Label l) const {
    std::size_t n = 0;
    for (auto v : confusion[static_cast<std::size_t>(label_id(l))]) n += v;
    return n;
}

EvalReport evaluate(const std::vector<Label>& gold, const std::vector<Label>& predicted,
                    const std::vector<Label>& filtered_out) {
    if (gold.size() != predicted.size()) {
        throw std::invalid_argument("evaluate: " + std::to_string(predicted.size()) +
                                    " predictions for " + std::to_string(gold.size()) +
                                    " gold instances");
    }
    EvalReport r;
    auto tally = [&r](Label g, Label p) {
        ++r.confusion[static_cast<std::size_t>(label_id(g))][static_cast<std::size_t>(label_id(p))];
    };
    for (std::size_t i = 0; i < gold.size(); ++i) tally(gold[i], predicted[i]);
    for (Label g : filtered_out) tally(g, Label::Negative);
    r.instances = gold.size() + filtered_out.size();
    r.reinserted = filtered_out.size();

    std::size_t tp = 0, fp = 0, fn = 0;
    double f1_sum = 0;
    for (std::size_t c = 0; c < kNumPositiveClasses; ++c) {
        std::size_t ctp = r.confusion[c][c];
        std::size_t cfp = 0, cfn = 0;
        for (std::size_t o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            cfp += r.confusion[o][c];
            cfn += r.confusion[c][o];
        }
        r.per_class[c] = ClassScores::from_counts(ctp, cfp, cfn);
        f1_sum += r.per_class[c].f1;
        tp += ctp;
        fp += cfp;
        fn += cfn;
    }
    // A wrong positive class counts as FP for the predicted class and FN for
    // the gold class, so micro FP/FN are the per-class sums.
    r.micro = ClassScores::from_counts(tp, fp, fn);
    r.macro_f1 = f1_sum / static_cast<double>(kNumPositiveClasses);
    return r;
}

namespace {

nlohmann::json scores_json(const ClassScores& s) {
    return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn},
            {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j;
    nlohmann::json labels = nlohmann::json::array();
    for (Label l : kAllLabels) labels.push_back(std::string(label_name(l)));
    j["labels"] = labels;
    j["confusion"] = r.confusion;
    nlohmann::json per_class;
    for (std::size_t c = 0; c < kNumPositiveClasses; ++c) {
        per_class[std::string(label_name(label_from_id(static_cast<int>(c))))] =
            scores_json(r.per_class[c]);
    }
    j["per_class"] = per_class;
    j["micro"] = scores_json(r.micro);
    j["macro_f1"] = r.macro_f1;
    j["instances"] = r.instances;
    j["reinserted_negatives"] = r.reinserted;
    return j;
}

McNemarResult mcnemar(std::size_t b, std::size_t c) {
    if (b + c == 0) throw std::invalid_argument("mcnemar: no discordant pairs");
    const double diff = std::fabs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    McNemarResult r;
    r.statistic = diff * diff / static_cast<double>(b + c);
    // Survival function of chi-square with one degree of freedom.
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
    static constexpr std::array<std::pair<double, double>, 4> kCritical{
        {{0.001, 10.828}, {0.01, 6.635}, {0.05, 3.841}, {0.1, 2.706}}};
    for (auto [level, critical] : kCritical) {
        if (r.statistic > critical) {
            r.significance = level;
            break;
        }
    }
    return r;
}

nlohmann::json to_json(const McNemarResult& r) {
    return {{"statistic", r.statistic},
            {"p_value", r.p_value},
            {"significance", r.significance},
            {"significant_at_0.05", r.significant_at_05()}};
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

void moments(const std::vector<double>& xs, double& mean, double& sd) {
    double sum = 0;
    for (double x : xs) sum += x;
    mean = sum / static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(xs.size()));
}

BoxSummary box(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return {xs.front(), quantile_sorted(xs, 0.25), quantile_sorted(xs, 0.5),
            quantile_sorted(xs, 0.75), xs.back()};
}

std::optional<GroupStats> group(const std::vector<LengthSample>& samples,
                                bool (*member)(const LengthSample&)) {
    std::vector<double> lengths, seps;
    for (const auto& s : samples) {
        if (!member(s)) continue;
        lengths.push_back(static_cast<double>(s.length));
        seps.push_back(static_cast<double>(s.separation));
    }
    if (lengths.empty()) return std::nullopt;
    GroupStats g;
    g.count = lengths.size();
    moments(lengths, g.mean_length, g.sd_length);
    moments(seps, g.mean_separation, g.sd_separation);
    g.length_box = box(lengths);
    g.separation_box = box(seps);
    return g;
}

nlohmann::json box_json(const BoxSummary& b) {
    return {{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}};
}

nlohmann::json group_json(const std::optional<GroupStats>& g) {
    if (!g) return nullptr;
    return {{"count", g->count},
            {"mean_length", g->mean_length},
            {"sd_length", g->sd_length},
            {"mean_separation", g->mean_separation},
            {"sd_separation", g->sd_separation},
            {"length_box", box_json(g->length_box)},
            {"separation_box", box_json(g->separation_box)}};
}

}  // namespace

LengthSample make_length_sample(std::size_t length, int drug_a, int drug_b, bool correct,
                                bool gold_positive) {
    const auto sep = static_cast<std::size_t>(drug_b > drug_a ? drug_b - drug_a : drug_a - drug_b);
    return {length, sep, correct, gold_positive};
}

LengthStats length_stats(const std::vector<LengthSample>& samples) {
    LengthStats out;
    out.correct = group(samples, [](const LengthSample& s) { return s.correct; });
    out.incorrect = group(samples, [](const LengthSample& s) { return !s.correct; });
    out.true_positive =
        group(samples, [](const LengthSample& s) { return s.correct && s.gold_positive; });
    return out;
}

nlohmann::json to_json(const LengthStats& s) {
    return {{"all_correct_vs_incorrect",
             {{"correct", group_json(s.correct)}, {"incorrect", group_json(s.incorrect)}}},
            {"true_positive_vs_incorrect",
             {{"true_positive", group_json(s.true_positive)},
              {"incorrect", group_json(s.incorrect)}}}};
}

}  // namespace ddi
