#pragma once

// Synthetic data for tests: random vectors with prescribed cosines,
// random datasets and corpora, and a scratch directory.

#include "vwsd/store.hpp"
#include "vwsd/wikindex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace synth {

using Rng = std::mt19937_64;

inline std::vector<double> gaussian(Rng& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return v;
}

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline std::vector<double> unit(Rng& rng, std::size_t dim) {
    auto v = gaussian(rng, dim);
    const double n = norm(v);
    for (auto& x : v) x /= n;
    return v;
}

/// Unit vector whose cosine with the unit vector c is exactly a.
inline std::vector<double> with_cosine(Rng& rng, const std::vector<double>& c, double a) {
    auto u = gaussian(rng, c.size());
    double proj = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) proj += u[i] * c[i];
    for (std::size_t i = 0; i < c.size(); ++i) u[i] -= proj * c[i];
    const double n = norm(u);
    const double s = std::sqrt(std::max(0.0, 1.0 - a * a));
    std::vector<double> x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) x[i] = a * c[i] + s * u[i] / n;
    return x;
}

/// Ten distinct images per sample drawn from a pool of n_images, so cards
/// vary. Targets and contexts come from a small vocabulary.
inline std::vector<vwsd::Sample> random_samples(Rng& rng, std::size_t n_samples, std::size_t n_images,
                                                bool with_gold = true) {
    static const char* words[] = {"bank", "river", "money", "plant", "tree", "shrub", "star",
                                  "galaxy", "mouse", "cat", "key", "door", "bass", "fish"};
    std::uniform_int_distribution<std::size_t> word(0, std::size(words) - 1);
    std::vector<std::size_t> pool(n_images);
    for (std::size_t i = 0; i < n_images; ++i) pool[i] = i;
    std::vector<vwsd::Sample> out;
    for (std::size_t s = 0; s < n_samples; ++s) {
        vwsd::Sample sample;
        sample.id = "s" + std::to_string(s);
        sample.target = words[word(rng)];
        sample.context = sample.target + " " + words[word(rng)];
        std::shuffle(pool.begin(), pool.end(), rng);
        for (std::size_t k = 0; k < vwsd::kCandidatesPerSample; ++k)
            sample.images.push_back("img" + std::to_string(pool[k]));
        if (with_gold) sample.gold = sample.images[rng() % vwsd::kCandidatesPerSample];
        out.push_back(std::move(sample));
    }
    return out;
}

/// Random embeddings for every sample context and every pooled image.
struct Stores {
    vwsd::EmbeddingStore contexts;
    vwsd::EmbeddingStore images;
};

inline Stores random_stores(Rng& rng, const vwsd::Dataset& ds, std::size_t dim) {
    Stores st{vwsd::EmbeddingStore(dim), vwsd::EmbeddingStore(dim)};
    for (const auto& s : ds.samples) {
        st.contexts.add(s.id, unit(rng, dim));
        for (const auto& img : s.images)
            if (!st.images.contains(img)) st.images.add(img, unit(rng, dim));
    }
    return st;
}

/// Documents of random length over a Zipf-ish vocabulary "w0".."w{V-1}".
inline std::vector<vwsd::Article> random_corpus(Rng& rng, std::size_t n_docs, std::size_t vocab) {
    std::vector<double> weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> term(weights.begin(), weights.end());
    std::uniform_int_distribution<int> len(1, 40);
    std::vector<vwsd::Article> docs;
    for (std::size_t d = 0; d < n_docs; ++d) {
        vwsd::Article a;
        a.id = "a" + std::to_string(d);
        a.title = "w" + std::to_string(term(rng));
        const int n = len(rng);
        for (int i = 0; i < n; ++i) a.text += (i ? " " : "") + ("w" + std::to_string(term(rng)));
        docs.push_back(std::move(a));
    }
    return docs;
}

inline std::string random_query(Rng& rng, std::size_t vocab, int max_len = 4) {
    std::uniform_int_distribution<std::size_t> term(0, vocab + vocab / 4);  // some unseen terms
    std::uniform_int_distribution<int> len(1, max_len);
    std::string q;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) q += (i ? " " : "") + ("w" + std::to_string(term(rng)));
    return q;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("vwsd-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace synth
