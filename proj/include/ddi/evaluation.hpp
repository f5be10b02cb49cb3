#pragma once

// Challenge-style scoring: per-class and micro P/R/F1 over the four
// interaction classes, the macro average of class F1 (MAVG), McNemar's test
// and the sentence-length analysis of misclassified instances.

#include <array>
#include <optional>
#include <vector>

#include "json.hpp"

#include "ddi/labels.hpp"

namespace ddi {

struct ClassScores {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;

    static ClassScores from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

struct EvalReport {
    /// confusion[gold][predicted]
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
    std::array<ClassScores, kNumPositiveClasses> per_class{};
    ClassScores micro;
    double macro_f1 = 0;
    std::size_t instances = 0;
    std::size_t reinserted = 0;

    std::size_t gold_count(Label l) const;
};

/// `filtered_out` carries the gold labels of instances removed before
/// prediction; they are scored as predicted Negative.
EvalReport evaluate(const std::vector<Label>& gold, const std::vector<Label>& predicted,
                    const std::vector<Label>& filtered_out = {});

nlohmann::json to_json(const EvalReport& r);

struct McNemarResult {
    double statistic = 0;
    double p_value = 1;
    /// Strongest conventional level (0.001, 0.01, 0.05, 0.1) whose chi-square
    /// critical value the statistic exceeds; 1.0 if none.
    double significance = 1.0;
    bool significant_at_05() const { return significance <= 0.05; }
};

/// Continuity-corrected McNemar statistic (|b - c| - 1)^2 / (b + c) for
/// discordant counts b (only model 1 correct) and c (only model 2 correct).
McNemarResult mcnemar(std::size_t b, std::size_t c);

nlohmann::json to_json(const McNemarResult& r);

struct LengthSample {
    std::size_t length = 0;
    std::size_t separation = 0;  // |index(DRUG-B) - index(DRUG-A)|
    bool correct = false;
    bool gold_positive = false;
};

LengthSample make_length_sample(std::size_t length, int drug_a, int drug_b, bool correct,
                                bool gold_positive);

struct BoxSummary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct GroupStats {
    std::size_t count = 0;
    double mean_length = 0, sd_length = 0;
    double mean_separation = 0, sd_separation = 0;
    BoxSummary length_box, separation_box;
};

/// Two groupings are reported: correct vs incorrect over all instances, and
/// true positives (correct, gold positive) vs incorrect. Empty groups are
/// absent rather than NaN.
struct LengthStats {
    std::optional<GroupStats> correct;
    std::optional<GroupStats> incorrect;
    std::optional<GroupStats> true_positive;
};

LengthStats length_stats(const std::vector<LengthSample>& samples);

/// Linear-interpolation quantile of a sorted, non-empty sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

nlohmann::json to_json(const LengthStats& s);

}  // namespace ddi
