#include "vwsd/features.hpp"

#include "vwsd/error.hpp"
#include "vwsd/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace vwsd {

namespace {

constexpr std::string_view kNames[kFeatureCount] = {"A", "B", "C", "D", "E", "F", "G", "H",
                                                     "I", "J", "K", "L", "M", "N", "O"};

struct OtherStats {
    double max = 0.0;
    double mean = 0.0;
};

OtherStats others(const std::vector<double>& values, std::size_t self) {
    OtherStats s{-std::numeric_limits<double>::infinity(), 0.0};
    double sum = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (j == self) continue;
        s.max = std::max(s.max, values[j]);
        sum += values[j];
    }
    s.mean = sum / static_cast<double>(values.size() - 1);
    return s;
}

void fill_block(FeatureVector& v, std::size_t first, const std::vector<double>& values, std::size_t self) {
    const auto o = others(values, self);
    v[first] = values[self];
    v[first + 1] = o.max;
    v[first + 2] = o.mean;
    v[first + 3] = values[self] - o.max;
    v[first + 4] = values[self] - o.mean;
}

void append_double(std::string& out, double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, end);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return out;
}

} // namespace

std::string_view feature_name(std::size_t index) { return kNames[index]; }

std::string word_key(std::string_view word) { return join_tokens(tokenize(word)); }

std::vector<WordSims> word_level_sims(const Sample& sample, const EmbeddingStore& images,
                                      const EmbeddingStore& words) {
    const auto target_key = word_key(sample.target);
    const auto context_key = context_word(sample.target, sample.context);
    const auto t = words.find(target_key);
    if (!t) throw InputError("sample '" + sample.id + "': no word embedding for target '" + target_key + "'");
    const auto c = words.find(context_key);
    if (!c)
        throw InputError("sample '" + sample.id + "': no word embedding for context word '" + context_key +
                         "'");
    std::vector<WordSims> out;
    out.reserve(sample.images.size());
    for (const auto& img : sample.images) {
        const auto x = images.at(img);
        out.push_back({cosine(x, *t), cosine(x, *c)});
    }
    return out;
}

int context_word_card(const Sample& sample, const Dataset& dataset) {
    const auto tokens = tokenize(context_word(sample.target, sample.context));
    int card = std::numeric_limits<int>::max();
    for (const auto& t : tokens) card = std::min(card, dataset.card_of_word(t));
    if (tokens.empty()) card = 1;
    return std::max(card, 1);
}

std::vector<FeatureVector> extract(const Sample& sample, const SampleScores& scores,
                                   const RetrievalScores& wiki, const std::vector<WordSims>& word_sims,
                                   const Dataset& dataset) {
    const std::size_t n = sample.images.size();
    auto check = [&](bool ok, std::string_view feature, const std::string& what) {
        if (!ok)
            throw InputError("sample '" + sample.id + "': cannot compute feature " + std::string(feature) +
                             ": " + what);
    };
    check(scores.sample_id == sample.id, "A", "score rows belong to '" + scores.sample_id + "'");
    check(wiki.sample_id == sample.id, "G", "retrieval scores belong to '" + wiki.sample_id + "'");
    check(scores.rows.size() == n, "A", "expected " + std::to_string(n) + " score rows");
    check(wiki.scores.size() == n, "G", "expected " + std::to_string(n) + " retrieval scores");
    check(word_sims.size() == n, "L", "expected " + std::to_string(n) + " word similarities");
    for (std::size_t i = 0; i < n; ++i) {
        check(scores.rows[i].image == sample.images[i], "A", "missing score for image '" + sample.images[i] + "'");
        check(wiki.images.size() == n && wiki.images[i] == sample.images[i], "G",
              "missing retrieval score for image '" + sample.images[i] + "'");
    }

    std::vector<double> clip(n), retrieval(n);
    for (std::size_t i = 0; i < n; ++i) {
        clip[i] = scores.rows[i].score;
        retrieval[i] = wiki.scores[i];
    }
    const double word_card_log = std::log10(static_cast<double>(context_word_card(sample, dataset)));

    std::vector<FeatureVector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = out[i];
        fill_block(v, feat::A, clip, i);
        v[feat::F] = scores.rows[i].penalty;
        fill_block(v, feat::G, retrieval, i);
        v[feat::L] = word_sims[i].target;
        v[feat::M] = word_sims[i].context;
        const int card = dataset.card_of_image(sample.images[i]);
        check(card >= 1, "N", "image '" + sample.images[i] + "' has no card in the dataset");
        v[feat::N] = std::log10(static_cast<double>(card));
        v[feat::O] = word_card_log;
    }
    return out;
}

void clear_retrieval_features(std::vector<FeatureVector>& vectors) {
    for (auto& v : vectors)
        for (std::size_t k = feat::G; k <= feat::K; ++k) v[k] = 0.0;
}

FeatureGroup make_group(const Sample& sample, std::vector<FeatureVector> vectors) {
    FeatureGroup g{sample.id, sample.images, std::move(vectors), {}};
    if (sample.gold) {
        g.labels.reserve(sample.images.size());
        for (const auto& img : sample.images) g.labels.push_back(img == *sample.gold ? 1 : 0);
    }
    return g;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& matrix) {
    std::string out = "sample\timage";
    for (auto name : kNames) {
        out += '\t';
        out += name;
    }
    out += "\tlabel\n";
    for (const auto& g : matrix.groups) {
        for (std::size_t i = 0; i < g.vectors.size(); ++i) {
            out += g.sample_id;
            out += '\t';
            out += g.images.at(i);
            for (double x : g.vectors[i]) {
                out += '\t';
                append_double(out, x);
            }
            out += '\t';
            out += g.labels.empty() ? "-1" : std::to_string(g.labels[i]);
            out += '\n';
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path.string());
    f << out;
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    FeatureMatrix m;
    std::string line;
    std::size_t line_no = 0;
    const std::size_t columns = kFeatureCount + 3;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto fields = split_tabs(line);
        if (fields.size() != columns)
            throw InputError(where + ": expected " + std::to_string(columns) + " columns, got " +
                             std::to_string(fields.size()));
        if (line_no == 1 && fields.front() == "sample") continue;
        FeatureVector v{};
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            const auto f = fields[2 + k];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[k]);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw InputError(where + ": bad value for feature " + std::string(kNames[k]));
        }
        int label = 0;
        const auto lf = fields.back();
        auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
        if (ec != std::errc() || label < -1 || label > 1) throw InputError(where + ": bad label");

        const std::string sample(fields[0]);
        if (m.groups.empty() || m.groups.back().sample_id != sample) m.groups.push_back({sample, {}, {}, {}});
        auto& g = m.groups.back();
        const bool labeled = label >= 0;
        if (!g.vectors.empty() && labeled != !g.labels.empty())
            throw InputError(where + ": group '" + sample + "' mixes labeled and unlabeled rows");
        g.images.emplace_back(fields[1]);
        g.vectors.push_back(v);
        if (labeled) g.labels.push_back(label);
    }
    for (const auto& g : m.groups) {
        if (!g.labels.empty() && std::count(g.labels.begin(), g.labels.end(), 1) != 1)
            throw InputError(path.string() + ": group '" + g.sample_id + "' must have exactly one positive label");
    }
    return m;
}

} // namespace vwsd
