#include "doctest.h"

#include <cstring>
#include <fstream>
#include <limits>

#include "ddi/checkpoint.hpp"
#include "support.hpp"

using namespace ddi;
using ddi::test::TempDir;

namespace {

Vocabulary small_vocab() {
    Vocabulary v;
    for (const char* t : {"aspirin", "increases", "DRUG-A", "DRUG-B"}) v.add(t);
    return v;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
    for (auto v : {Variant::BLstm, Variant::AbLstm, Variant::Joint}) {
        auto vocab = small_vocab();
        auto cfg = ddi::test::tiny_config(v, vocab.size());
        Rng rng(4);
        auto p = ModelParams<float>::init(cfg, rng);
        TempDir dir;
        save_checkpoint(dir / "ckpt", cfg, p, vocab);
        CHECK(std::filesystem::exists(dir / "ckpt" / "manifest"));
        CHECK(std::filesystem::exists(dir / "ckpt" / "params.bin"));
        CHECK(std::filesystem::exists(dir / "ckpt" / "vocab"));
        auto back = load_checkpoint<float>(dir / "ckpt");
        CHECK(to_json(back.config) == to_json(cfg));
        CHECK(back.vocab.size() == vocab.size());
        auto a = p.parameters();
        auto b = back.params.parameters();
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].name == b[i].name);
            CHECK(a[i].tensor->values() == b[i].tensor->values());
        }
        for (int trial = 0; trial < 5; ++trial) {
            auto f = ddi::test::random_instance(3 + trial, vocab.size(), cfg.position_radius, rng);
            Graph<float> g1(false), g2(false);
            CHECK(forward(g1, p, cfg, f).probs.values() == forward(g2, back.params, cfg, f).probs.values());
        }
    }
}

TEST_CASE("atomic write leaves no temporary files") {
    TempDir dir;
    write_file_atomic(dir / "x.txt", "one");
    write_file_atomic(dir / "x.txt", "two");
    CHECK(ddi::test::read_file(dir / "x.txt") == "two");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
    CHECK(entries == 1);
}

TEST_CASE("damaged checkpoints are rejected") {
    auto vocab = small_vocab();
    auto cfg = ddi::test::tiny_config(Variant::AbLstm, vocab.size());
    Rng rng(5);
    auto p = ModelParams<float>::init(cfg, rng);
    TempDir dir;
    const auto ck = dir / "ckpt";
    save_checkpoint(ck, cfg, p, vocab);
    const auto blob = ddi::test::read_file(ck / "params.bin");

    SUBCASE("missing directory") { CHECK_THROWS(load_checkpoint<float>(dir / "nothing")); }
    SUBCASE("truncated parameters") {
        write_file_atomic(ck / "params.bin", blob.substr(0, blob.size() - 4));
        CHECK_THROWS(load_checkpoint<float>(ck));
    }
    SUBCASE("trailing bytes") {
        write_file_atomic(ck / "params.bin", blob + "abcd");
        CHECK_THROWS(load_checkpoint<float>(ck));
    }
    SUBCASE("non-finite value") {
        auto bad = blob;
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bad.data(), &nan, sizeof nan);
        write_file_atomic(ck / "params.bin", bad);
        CHECK_THROWS_AS(load_checkpoint<float>(ck), NonFiniteError);
    }
    SUBCASE("wrong format tag") {
        auto m = nlohmann::json::parse(ddi::test::read_file(ck / "manifest"));
        m["format"] = "other";
        write_file_atomic(ck / "manifest", m.dump());
        CHECK_THROWS(load_checkpoint<float>(ck));
    }
    SUBCASE("vocab disagreement") {
        std::ofstream(ck / "vocab", std::ios::app) << "extra\n";
        CHECK_THROWS(load_checkpoint<float>(ck));
    }
}
