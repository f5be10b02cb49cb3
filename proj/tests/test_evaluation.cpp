#include "doctest.h"

#include <cmath>

#include "ddi/evaluation.hpp"
#include "ddi/rng.hpp"

using namespace ddi;

namespace {
constexpr Label A = Label::Advice, E = Label::Effect, M = Label::Mechanism, I = Label::Int,
                Neg = Label::Negative;
}

TEST_CASE("evaluate examples") {
    SUBCASE("perfect") {
        std::vector<Label> gold{A, E, M, I, Neg, A};
        auto r = evaluate(gold, gold);
        CHECK(r.micro.f1 == 1.0);
        CHECK(r.macro_f1 == 1.0);
        for (const auto& c : r.per_class) CHECK(c.f1 == 1.0);
    }
    SUBCASE("all negative") {
        std::vector<Label> gold{A, E, Neg};
        auto r = evaluate(gold, {Neg, Neg, Neg});
        CHECK(r.micro.recall == 0.0);
        CHECK(r.micro.f1 == 0.0);
        CHECK(r.micro.precision == 0.0);
    }
    SUBCASE("hand confusion matrix") {
        auto r = evaluate({A, A, E, Neg}, {A, E, E, Neg});
        const auto& a = r.per_class[0];
        const auto& e = r.per_class[1];
        CHECK(a.precision == 1.0);
        CHECK(a.recall == 0.5);
        CHECK(a.f1 == doctest::Approx(2.0 / 3));
        CHECK(e.precision == 0.5);
        CHECK(e.recall == 1.0);
        CHECK(e.f1 == doctest::Approx(2.0 / 3));
        CHECK(r.micro.tp == 2);
        CHECK(r.micro.fp == 1);
        CHECK(r.micro.fn == 1);
        CHECK(r.micro.precision == 2.0 / 3);
        CHECK(r.micro.recall == 2.0 / 3);
        CHECK(r.micro.f1 == 2.0 / 3);
        CHECK(r.confusion[0][1] == 1);
    }
    CHECK_THROWS(evaluate({A, E}, {A}));
}

TEST_CASE("filtered-out instances are scored as predicted negative") {
    std::vector<Label> gold{A, E, Neg};
    std::vector<Label> pred{A, Neg, E};
    auto base = evaluate(gold, pred);
    auto with = evaluate(gold, pred, {Neg, Neg, Neg});
    CHECK(with.reinserted == 3);
    CHECK(with.instances == 6);
    CHECK(with.confusion[4][4] == base.confusion[4][4] + 3);
    CHECK(with.micro.precision >= base.micro.precision);
    auto pos = evaluate(gold, pred, {M});
    CHECK(pos.micro.fn == base.micro.fn + 1);
    CHECK(pos.gold_count(M) == 1);
}

TEST_CASE("evaluation invariants on random predictions") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<Label> gold(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = label_from_id(static_cast<int>(rng.below(5)));
            pred[i] = label_from_id(static_cast<int>(rng.below(5)));
        }
        auto r = evaluate(gold, pred);
        double mean = 0;
        for (const auto& c : r.per_class) {
            mean += c.f1 / 4;
            for (double v : {c.precision, c.recall, c.f1}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            if (c.precision + c.recall > 0) {
                CHECK(c.f1 == doctest::Approx(2 * c.precision * c.recall / (c.precision + c.recall)));
            }
        }
        CHECK(std::abs(mean - r.macro_f1) < 1e-12);
        for (Label l : kAllLabels) {
            std::size_t row = 0;
            for (auto v : r.confusion[static_cast<std::size_t>(label_id(l))]) row += v;
            CHECK(row == r.gold_count(l));
        }
        // Permutation invariance.
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<Label> g2, p2;
        for (auto i : order) {
            g2.push_back(gold[i]);
            p2.push_back(pred[i]);
        }
        auto s = evaluate(g2, p2);
        CHECK(s.micro.f1 == r.micro.f1);
        CHECK(s.confusion == r.confusion);
    }
}

TEST_CASE("mcnemar examples") {
    auto eq = mcnemar(10, 10);
    CHECK(eq.statistic == doctest::Approx(1.0 / 20));
    CHECK_FALSE(eq.significant_at_05());
    auto r = mcnemar(15, 5);
    CHECK(r.statistic == 4.05);
    CHECK(r.significant_at_05());
    CHECK(r.significance == 0.05);
    CHECK(r.p_value == doctest::Approx(0.0442).epsilon(1e-3));
    CHECK(mcnemar(1, 0).statistic == 0.0);
    CHECK_THROWS(mcnemar(0, 0));
    CHECK(mcnemar(100, 10).significance == 0.001);
}

TEST_CASE("length_stats examples") {
    SUBCASE("single correct instance") {
        auto s = length_stats({{10, 3, true, true}});
        REQUIRE(s.correct);
        CHECK(s.correct->mean_length == 10);
        CHECK(s.correct->sd_length == 0);
        CHECK_FALSE(s.incorrect);
        REQUIRE(s.true_positive);
        CHECK(s.true_positive->count == 1);
    }
    SUBCASE("population stddev") {
        auto s = length_stats({{2, 1, false, false}, {4, 2, false, true}});
        REQUIRE(s.incorrect);
        CHECK(s.incorrect->mean_length == 3);
        CHECK(s.incorrect->sd_length == 1);
        CHECK(s.incorrect->mean_separation == 1.5);
        CHECK_FALSE(s.correct);
        CHECK_FALSE(s.true_positive);
        auto j = to_json(s);
        CHECK(j["all_correct_vs_incorrect"]["correct"].is_null());
        CHECK(j["all_correct_vs_incorrect"]["incorrect"]["count"] == 2);
        CHECK(j["true_positive_vs_incorrect"]["true_positive"].is_null());
    }
    SUBCASE("box summary") {
        std::vector<LengthSample> v;
        for (std::size_t len : {1, 2, 3, 4, 5}) v.push_back({len, 1, true, false});
        auto s = length_stats(v);
        CHECK(s.correct->length_box.median == 3);
        CHECK(s.correct->length_box.q1 == 2);
        CHECK(s.correct->length_box.q3 == 4);
        CHECK(s.correct->length_box.min == 1);
        CHECK(s.correct->length_box.max == 5);
    }
    CHECK(quantile_sorted({1, 2}, 0.5) == 1.5);
    // [DRUG-A, x, DRUG-B]
    CHECK(make_length_sample(3, 0, 2, true, false).separation == 2);
    CHECK(make_length_sample(3, 0, 2, true, false).length == 3);
}

TEST_CASE("report json") {
    auto r = evaluate({A, A, E, Neg}, {A, E, E, Neg});
    auto j = to_json(r);
    CHECK(j["micro"]["f1"].get<double>() == doctest::Approx(2.0 / 3));
    CHECK(j.contains("per_class"));
    CHECK(j.contains("confusion"));
    CHECK(to_json(mcnemar(15, 5))["statistic"] == 4.05);
}
