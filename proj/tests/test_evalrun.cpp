#include "oracles.hpp"
#include "synth.hpp"

#include "vwsd/error.hpp"
#include "vwsd/evalrun.hpp"

#include <doctest.h>

#include <algorithm>

using namespace vwsd;

namespace {

std::vector<std::string> ten() {
    std::vector<std::string> out;
    for (int i = 0; i < 10; ++i) out.push_back("i" + std::to_string(i));
    return out;
}

Ranking with_gold_at(const std::string& id, std::size_t rank) {
    auto imgs = ten();
    std::swap(imgs[0], imgs[rank - 1]);  // i0 is gold
    return {id, imgs, "x"};
}

SampleScores clip(const std::vector<double>& s) {
    SampleScores out{"s", {}};
    const auto ids = ten();
    for (std::size_t k = 0; k < s.size(); ++k) out.rows.push_back({ids[k], s[k], 0.0, s[k]});
    return out;
}

RetrievalScores wiki(const std::vector<double>& s) { return {"s", ten(), s, {}, false}; }

std::vector<double> descending() {
    std::vector<double> v(10);
    for (std::size_t k = 0; k < 10; ++k) v[k] = 1.0 - 0.1 * static_cast<double>(k);
    return v;
}

} // namespace

TEST_SUITE("evalrun") {

TEST_CASE("metric hand checks") {
    GoldMap gold;
    for (int i = 0; i < 5; ++i) gold["s" + std::to_string(i)] = "i0";
    std::vector<Ranking> all;
    for (int i = 0; i < 5; ++i) all.push_back(with_gold_at("s" + std::to_string(i), 1));
    CHECK(accuracy(all, gold) == 1.0);
    CHECK(mrr(all, gold) == 1.0);

    std::vector<Ranking> one{with_gold_at("s0", 2)};
    CHECK(accuracy(one, gold) == 0.0);
    CHECK(mrr(one, gold) == 0.5);

    all[3] = with_gold_at("s3", 3);
    CHECK(accuracy(all, gold) == doctest::Approx(0.8));
    CHECK(mrr(all, gold) == doctest::Approx((4.0 + 1.0 / 3.0) / 5.0));

    std::vector<Ranking> four{with_gold_at("s0", 4)};
    CHECK(mrr(four, gold) == 0.25);
    std::vector<Ranking> pair{with_gold_at("s0", 1), with_gold_at("s1", 2)};
    CHECK(mrr(pair, gold) == 0.75);
    CHECK(accuracy(pair, gold) == 0.5);
}

TEST_CASE("metrics agree with counting") {
    synth::Rng rng(1);
    std::uniform_int_distribution<std::size_t> r(1, 10);
    for (int t = 0; t < 50; ++t) {
        GoldMap gold;
        std::vector<Ranking> rs;
        std::vector<std::size_t> ranks;
        for (int i = 0; i < 1 + t; ++i) {
            const auto id = "s" + std::to_string(i);
            gold[id] = "i0";
            ranks.push_back(r(rng));
            rs.push_back(with_gold_at(id, ranks.back()));
        }
        CHECK(accuracy(rs, gold) == doctest::Approx(oracle::accuracy(ranks)).epsilon(1e-12));
        CHECK(mrr(rs, gold) == doctest::Approx(oracle::mrr(ranks)).epsilon(1e-12));
        CHECK(mrr(rs, gold) >= accuracy(rs, gold));
        CHECK(mrr(rs, gold) >= 0.1);
    }
}

TEST_CASE("gold problems are input errors") {
    const auto ds = make_dataset({{"s", "t", "t c", ten(), {}}});
    CHECK_THROWS_WITH_AS(gold_map(ds), doctest::Contains("'s'"), InputError);
    GoldMap gold{{"s", "zz"}};
    CHECK_THROWS_AS(gold_rank(with_gold_at("s", 1), gold), InputError);
    CHECK_THROWS_AS(gold_rank(with_gold_at("other", 1), gold), InputError);
    CHECK_THROWS_AS(accuracy(std::vector<Ranking>{}, gold), InputError);
}

TEST_CASE("order by score keeps ties in candidate order") {
    CHECK(order_by_score(clip({0.1, 0.5, 0.5, 0.2, 0, 0, 0, 0, 0, 0.9})) ==
          std::vector<std::string>{"i9", "i1", "i2", "i3", "i0", "i4", "i5", "i6", "i7", "i8"});
}

TEST_CASE("heuristic picks a lone confident retrieval hit") {
    std::vector<double> w(10, 0.1);
    w[6] = 0.95;
    const auto order = heuristic_select(clip(descending()), nullptr, 0.9, 0.8);
    CHECK(order == order_by_score(clip(descending())));
    const auto ws = wiki(w);
    const auto got = heuristic_select(clip(descending()), &ws);
    CHECK(got.front() == "i6");
    std::vector<std::string> rest(got.begin() + 1, got.end());
    CHECK(rest == std::vector<std::string>{"i0", "i1", "i2", "i3", "i4", "i5", "i7", "i8", "i9"});
}

TEST_CASE("heuristic falls back to the classifier order") {
    const auto base = order_by_score(clip(descending()));
    std::vector<double> w(10, 0.1);
    w[6] = 0.95;
    w[2] = 0.85;  // a competitor in the gap
    auto ws = wiki(w);
    CHECK(heuristic_select(clip(descending()), &ws) == base);
    w[2] = 0.95;  // two confident hits
    ws = wiki(w);
    CHECK(heuristic_select(clip(descending()), &ws) == base);
    ws = wiki(std::vector<double>(10, 0.0));
    CHECK(heuristic_select(clip(descending()), &ws) == base);
    ws = wiki(std::vector<double>(10, 0.5));  // everything below lo, nothing above hi
    CHECK(heuristic_select(clip(descending()), &ws) == base);
}

TEST_CASE("heuristic thresholds are strict") {
    const auto base = order_by_score(clip(descending()));
    std::vector<double> w(10, 0.1);
    w[6] = 0.9;
    auto ws = wiki(w);
    CHECK(heuristic_select(clip(descending()), &ws) == base);
    w[6] = 0.9000001;
    w[3] = 0.8;
    ws = wiki(w);
    CHECK(heuristic_select(clip(descending()), &ws) == base);
    w[3] = 0.7999999;
    ws = wiki(w);
    CHECK(heuristic_select(clip(descending()), &ws).front() == "i6");
    ws = wiki(std::vector<double>(9, 0.0));
    CHECK_THROWS_AS(heuristic_select(clip(descending()), &ws), InputError);
}

TEST_CASE("heuristic output is a permutation") {
    synth::Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(10), w(10);
        for (auto& x : a) x = u(rng);
        for (auto& x : w) x = u(rng);
        const auto ws = wiki(w);
        auto got = heuristic_select(clip(a), &ws);
        std::sort(got.begin(), got.end());
        CHECK(got == ten());
    }
}

TEST_CASE("ablation presets") {
    const auto p = ablation_presets();
    REQUIRE(p.size() == 6);
    const std::vector<std::string> names{"original", "no_penalties", "no_ltr", "no_expansion", "no_wikipedia",
                                         "clip_only"};
    for (std::size_t i = 0; i < 6; ++i) CHECK(p[i].name == names[i]);
    CHECK(p[0].penalties);
    CHECK(p[0].ltr);
    CHECK(p[0].expansion);
    CHECK(p[0].wikipedia);
    CHECK_FALSE(p[1].penalties);
    CHECK_FALSE(p[2].ltr);
    CHECK_FALSE(p[3].expansion);
    CHECK_FALSE(p[4].wikipedia);
    const auto c = ablation_preset("clip_only");
    CHECK_FALSE(c.penalties);
    CHECK_FALSE(c.ltr);
    CHECK_FALSE(c.expansion);
    CHECK_FALSE(c.wikipedia);
    CHECK_THROWS_AS(ablation_preset("bogus"), InputError);
}

TEST_CASE("report tsv") {
    const std::vector<ReportRow> rows{{"original", "en", 463, 0.5, 2.0 / 3.0, "ltr"}};
    CHECK(format_report_tsv(rows) ==
          "config\tlanguage\tn_samples\taccuracy\tmrr\tmode\noriginal\ten\t463\t0.500000\t0.666667\tltr\n");
    CHECK(format_report_text(rows).find("50.00") != std::string::npos);
}

TEST_CASE("rankings round trip") {
    const std::vector<Ranking> rs{with_gold_at("a", 3), with_gold_at("b", 1)};
    synth::TempDir tmp;
    save_rankings(tmp / "r.jsonl", rs);
    const auto back = load_rankings(tmp / "r.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].sample_id == "a");
    CHECK(back[0].images == rs[0].images);
    CHECK(back[1].config == "x");
    synth::write_file(tmp / "bad.jsonl", "{\"sample\": 1}\n");
    CHECK_THROWS_AS(load_rankings(tmp / "bad.jsonl"), InputError);
}

}
