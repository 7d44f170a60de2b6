#include "oracles.hpp"
#include "synth.hpp"

#include "vwsd/error.hpp"
#include "vwsd/features.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace vwsd;

namespace {

std::vector<std::string> ten(const std::string& prefix) {
    std::vector<std::string> out;
    for (int i = 0; i < 10; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

SampleScores rows_for(const Sample& s, const std::vector<double>& scores, double penalty = 0.0) {
    SampleScores out{s.id, {}};
    for (std::size_t k = 0; k < s.images.size(); ++k)
        out.rows.push_back({s.images[k], scores[k] + penalty, penalty, scores[k]});
    return out;
}

RetrievalScores wiki_for(const Sample& s, const std::vector<double>& scores) {
    return {s.id, s.images, scores, {}, false};
}

struct Fixture {
    Dataset ds;
    std::vector<WordSims> sims = std::vector<WordSims>(10);
};

Fixture one_sample(std::vector<std::string> images = ten("x")) {
    return {make_dataset({{"s", "bank", "bank river", std::move(images), std::string("x0")}})};
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("feature names") {
    CHECK(feature_name(feat::A) == "A");
    CHECK(feature_name(feat::O) == "O");
}

TEST_CASE("equal scores give zero contrasts") {
    auto f = one_sample();
    const auto& s = f.ds.samples[0];
    const auto v = extract(s, rows_for(s, std::vector<double>(10, 0.3)), wiki_for(s, std::vector<double>(10, 0.0)),
                           f.sims, f.ds);
    for (const auto& x : v) {
        CHECK(x[feat::B] == doctest::Approx(0.3));
        CHECK(x[feat::C] == doctest::Approx(0.3));
        CHECK(std::abs(x[feat::D]) < 1e-12);
        CHECK(std::abs(x[feat::E]) < 1e-12);
    }
}

TEST_CASE("hand arithmetic for candidate 0") {
    auto f = one_sample();
    const auto& s = f.ds.samples[0];
    const std::vector<double> a = {0.9, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0, -0.1, -0.2, -0.3};
    const std::vector<double> w = {0.2, 0.95, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4};
    const auto v = extract(s, rows_for(s, a, 0.05), wiki_for(s, w), f.sims, f.ds);
    const double c0 = (0.5 + 0.4 + 0.3 + 0.2 + 0.1 + 0.0 - 0.1 - 0.2 - 0.3) / 9.0;
    CHECK(v[0][feat::A] == 0.9);
    CHECK(v[0][feat::B] == 0.5);
    CHECK(v[0][feat::C] == doctest::Approx(c0).epsilon(1e-12));
    CHECK(v[0][feat::D] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(v[0][feat::E] == doctest::Approx(0.9 - c0).epsilon(1e-12));
    CHECK(v[0][feat::F] == 0.05);
    CHECK(v[0][feat::G] == 0.2);
    CHECK(v[0][feat::H] == 0.95);
    CHECK(v[0][feat::I] == doctest::Approx((0.95 + 0.1 + 0.4) / 9.0).epsilon(1e-12));
    CHECK(v[1][feat::B] == 0.9);  // the best other for candidate 1 is candidate 0
}

TEST_CASE("log cards") {
    std::vector<Sample> samples;
    for (int i = 0; i < 10; ++i) {
        auto imgs = ten("u" + std::to_string(i) + "_");
        imgs[0] = "popular";
        samples.push_back({"s" + std::to_string(i), "bank", "bank river", imgs, {}});
    }
    const auto ds = make_dataset(samples);
    const auto& s = ds.samples[0];
    const auto v = extract(s, rows_for(s, std::vector<double>(10, 0.1)), wiki_for(s, std::vector<double>(10, 0.0)),
                           std::vector<WordSims>(10), ds);
    CHECK(v[0][feat::N] == doctest::Approx(1.0));
    CHECK(v[1][feat::N] == 0.0);
    CHECK(v[0][feat::O] == doctest::Approx(1.0));  // "river" occurs in all ten contexts
}

TEST_CASE("context word card uses the rarest token") {
    const auto ds = make_dataset({{"a", "bank", "bank river side", ten("a"), {}},
                                  {"b", "bank", "bank river", ten("b"), {}},
                                  {"c", "x", "x", ten("c"), {}}});
    CHECK(context_word_card(ds.samples[0], ds) == 1);  // "side"
    CHECK(context_word_card(ds.samples[1], ds) == 2);
    CHECK(context_word_card(ds.samples[2], ds) == 1);  // falls back to the target word
}

TEST_CASE("word-level similarities") {
    const Sample s{"s", "bank", "bank river", ten("x"), {}};
    EmbeddingStore images(3), words(3);
    for (int k = 0; k < 10; ++k)
        images.add(s.images[k], k == 0 ? std::vector<double>{1, 0, 0} : std::vector<double>{0, 1, k * 0.1});
    words.add("bank", std::vector<double>{1, 0, 0});
    words.add("river", std::vector<double>{0, 0, 1});
    const auto sims = word_level_sims(s, images, words);
    CHECK(sims[0].target == doctest::Approx(1.0));
    CHECK(sims[0].context == 0.0);

    synth::Rng rng(1);
    EmbeddingStore im6(6), w6(6);
    for (const auto& id : s.images) im6.add(id, synth::gaussian(rng, 6));
    w6.add("bank", synth::gaussian(rng, 6));
    w6.add("river", synth::gaussian(rng, 6));
    const auto r = word_level_sims(s, im6, w6);
    for (int k = 0; k < 10; ++k) {
        CHECK(r[k].target == doctest::Approx(oracle::cos(oracle::vec(im6, s.images[k]), oracle::vec(w6, "bank"))));
        CHECK(r[k].context == doctest::Approx(oracle::cos(oracle::vec(im6, s.images[k]), oracle::vec(w6, "river"))));
    }

    EmbeddingStore missing(3);
    missing.add("bank", std::vector<double>{1, 0, 0});
    CHECK_THROWS_WITH_AS(word_level_sims(s, images, missing), doctest::Contains("river"), InputError);
}

TEST_CASE("mismatched inputs name the feature") {
    auto f = one_sample();
    const auto& s = f.ds.samples[0];
    auto rows = rows_for(s, std::vector<double>(10, 0.1));
    rows.rows[4].image = "other";
    CHECK_THROWS_WITH_AS(extract(s, rows, wiki_for(s, std::vector<double>(10, 0.0)), f.sims, f.ds),
                         doctest::Contains("feature A"), InputError);
    auto short_wiki = wiki_for(s, std::vector<double>(9, 0.0));
    CHECK_THROWS_WITH_AS(extract(s, rows_for(s, std::vector<double>(10, 0.1)), short_wiki, f.sims, f.ds),
                         doctest::Contains("feature G"), InputError);
    CHECK_THROWS_WITH_AS(extract(s, rows_for(s, std::vector<double>(10, 0.1)),
                                 wiki_for(s, std::vector<double>(10, 0.0)), std::vector<WordSims>(3), f.ds),
                         doctest::Contains("feature L"), InputError);
}

TEST_CASE("contrast identities and the argmax property") {
    synth::Rng rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto f = one_sample();
    const auto& s = f.ds.samples[0];
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(10), w(10);
        for (auto& x : a) x = u(rng);
        for (auto& x : w) x = u(rng);
        const auto v = extract(s, rows_for(s, a), wiki_for(s, w), f.sims, f.ds);
        int nonneg = 0;
        double max_d = -1e9;
        for (const auto& x : v) {
            CHECK(std::abs(x[feat::D] - (x[feat::A] - x[feat::B])) < 1e-9);
            CHECK(std::abs(x[feat::E] - (x[feat::A] - x[feat::C])) < 1e-9);
            CHECK(std::abs(x[feat::J] - (x[feat::G] - x[feat::H])) < 1e-9);
            CHECK(std::abs(x[feat::K] - (x[feat::G] - x[feat::I])) < 1e-9);
            CHECK(x[feat::N] >= 0.0);
            CHECK(x[feat::O] >= 0.0);
            nonneg += x[feat::D] >= 0.0 ? 1 : 0;
            max_d = std::max(max_d, x[feat::D]);
        }
        CHECK(max_d >= 0.0);
        CHECK(nonneg == 1);
        const auto best = std::max_element(a.begin(), a.end()) - a.begin();
        CHECK(v[static_cast<std::size_t>(best)][feat::D] >= 0.0);
    }
}

TEST_CASE("permuting candidates permutes the vectors") {
    synth::Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto images = ten("x");
    auto f = one_sample(images);
    const auto& s = f.ds.samples[0];
    std::vector<double> a(10), w(10);
    std::vector<WordSims> sims(10);
    for (int k = 0; k < 10; ++k) {
        a[k] = u(rng);
        w[k] = u(rng);
        sims[k] = {u(rng), u(rng)};
    }
    const auto base = extract(s, rows_for(s, a), wiki_for(s, w), sims, f.ds);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::size_t> perm(10);
        for (std::size_t k = 0; k < 10; ++k) perm[k] = k;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::string> pi(10);
        std::vector<double> pa(10), pw(10);
        std::vector<WordSims> ps(10);
        for (std::size_t k = 0; k < 10; ++k) {
            pi[k] = images[perm[k]];
            pa[k] = a[perm[k]];
            pw[k] = w[perm[k]];
            ps[k] = sims[perm[k]];
        }
        auto g = one_sample(pi);
        const auto& ps_sample = g.ds.samples[0];
        const auto got = extract(ps_sample, rows_for(ps_sample, pa), wiki_for(ps_sample, pw), ps, g.ds);
        for (std::size_t k = 0; k < 10; ++k)
            for (std::size_t j = 0; j < kFeatureCount; ++j)
                CHECK(got[k][j] == doctest::Approx(base[perm[k]][j]).epsilon(1e-12));
    }
}

TEST_CASE("retrieval features can be cleared") {
    auto f = one_sample();
    const auto& s = f.ds.samples[0];
    auto v = extract(s, rows_for(s, std::vector<double>(10, 0.2)), wiki_for(s, std::vector<double>(10, 0.7)),
                     f.sims, f.ds);
    clear_retrieval_features(v);
    for (const auto& x : v) {
        for (std::size_t k = feat::G; k <= feat::K; ++k) CHECK(x[k] == 0.0);
        CHECK(x[feat::A] == 0.2);
    }
}

TEST_CASE("groups carry one positive label") {
    auto f = one_sample();
    const auto g = make_group(f.ds.samples[0], std::vector<FeatureVector>(10));
    CHECK(std::count(g.labels.begin(), g.labels.end(), 1) == 1);
    CHECK(g.labels[0] == 1);
    Sample unlabeled{"u", "t", "t c", ten("y"), {}};
    CHECK(make_group(unlabeled, std::vector<FeatureVector>(10)).labels.empty());
}

TEST_CASE("feature files round trip bit for bit") {
    synth::Rng rng(4);
    std::normal_distribution<double> z(0.0, 1.0);
    FeatureMatrix m;
    for (int i = 0; i < 5; ++i) {
        Sample s{"s" + std::to_string(i), "t", "t c", ten("x" + std::to_string(i) + "_"), {}};
        if (i != 2) s.gold = s.images[static_cast<std::size_t>(i)];
        std::vector<FeatureVector> v(10);
        for (auto& x : v)
            for (auto& y : x) y = z(rng) / 3.0;
        m.groups.push_back(make_group(s, v));
    }
    synth::TempDir tmp;
    save_features(tmp / "f.tsv", m);
    CHECK(synth::read_file(tmp / "f.tsv").rfind("sample\timage\tA\tB", 0) == 0);
    const auto back = load_features(tmp / "f.tsv");
    REQUIRE(back.groups.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back.groups[i].sample_id == m.groups[i].sample_id);
        CHECK(back.groups[i].images == m.groups[i].images);
        CHECK(back.groups[i].labels == m.groups[i].labels);
        CHECK(back.groups[i].vectors == m.groups[i].vectors);
    }
}

TEST_CASE("malformed feature files") {
    synth::TempDir tmp;
    synth::write_file(tmp / "f.tsv", "sample\timage\tA\n");
    CHECK_THROWS_AS(load_features(tmp / "f.tsv"), InputError);
}

}
