#include "vwsd/wikindex.hpp"

#include "vwsd/error.hpp"
#include "vwsd/parallel.hpp"
#include "vwsd/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

namespace vwsd {

namespace {

constexpr char kIndexMagic[4] = {'V', 'W', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_ += s;
    }
    void raw(const char* p, std::size_t n) { buf_.append(p, n); }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(const std::string& bytes, std::string where) : bytes_(bytes), where_(std::move(where)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool magic(const char (&m)[4]) {
        need(4);
        const bool ok = std::memcmp(bytes_.data() + pos_, m, 4) == 0;
        pos_ += 4;
        return ok;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw InputError(where_ + ": truncated index file");
    }
    const std::string& bytes_;
    std::string where_;
    std::size_t pos_ = 0;
};

double bm25_idf(std::size_t n_docs, std::size_t df) {
    const double n = static_cast<double>(n_docs);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

} // namespace

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<Article> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Article a;
            a.id = j.at("id").get<std::string>();
            a.title = j.value("title", std::string{});
            a.text = j.value("text", std::string{});
            a.images = j.value("images", std::vector<std::string>{});
            out.push_back(std::move(a));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_corpus(const std::filesystem::path& path, std::span<const Article> articles) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& a : articles) {
        nlohmann::ordered_json j;
        j["id"] = a.id;
        j["title"] = a.title;
        j["text"] = a.text;
        j["images"] = a.images;
        out << j.dump() << '\n';
    }
}

ArticleIndex ArticleIndex::build(std::span<const Article> articles, Bm25Params params) {
    if (articles.empty()) throw InputError("cannot index an empty corpus");
    ArticleIndex index;
    index.params_ = params;
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, std::uint32_t> tf;
    for (std::uint32_t doc = 0; doc < articles.size(); ++doc) {
        const auto& a = articles[doc];
        if (!ids.insert(a.id).second) throw InputError("duplicate article id '" + a.id + "'");
        const auto tokens = tokenize(a.title + "\n" + a.text);
        tf.clear();
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [token, count] : tf) index.postings_[token].push_back({doc, count});
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.article_ids_.push_back(a.id);
        index.images_.push_back(a.images);
    }
    index.finalize();
    return index;
}

void ArticleIndex::finalize() {
    double total = 0.0;
    for (auto len : doc_lengths_) total += len;
    avg_doc_length_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

const std::vector<Posting>* ArticleIndex::postings(const std::string& token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? nullptr : &it->second;
}

double ArticleIndex::idf(const std::string& token) const {
    const auto* p = postings(token);
    return bm25_idf(doc_count(), p ? p->size() : 0);
}

std::vector<double> ArticleIndex::scores(std::string_view query) const {
    std::vector<double> out(doc_count(), 0.0);
    const double k1 = params_.k1;
    const double b = params_.b;
    for (const auto& token : tokenize(query)) {
        const auto* plist = postings(token);
        if (!plist) continue;
        const double w = bm25_idf(doc_count(), plist->size());
        for (const auto& p : *plist) {
            const double tf = p.tf;
            const double norm = k1 * (1.0 - b + b * doc_lengths_[p.doc] / avg_doc_length_);
            out[p.doc] += w * tf * (k1 + 1.0) / (tf + norm);
        }
    }
    return out;
}

std::vector<SearchHit> ArticleIndex::search(std::string_view query, std::size_t top_k) const {
    const auto s = scores(query);
    std::vector<SearchHit> hits;
    for (std::uint32_t d = 0; d < s.size(); ++d)
        if (s[d] > 0.0) hits.push_back({d, s[d]});
    auto better = [](const SearchHit& a, const SearchHit& b) {
        return a.score != b.score ? a.score > b.score : a.doc < b.doc;
    };
    const std::size_t k = std::min(top_k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
    return hits;
}

void ArticleIndex::save(const std::filesystem::path& path) const {
    Writer w;
    w.raw(kIndexMagic, 4);
    w.u32(kIndexVersion);
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u32(static_cast<std::uint32_t>(doc_count()));
    for (std::size_t d = 0; d < doc_count(); ++d) {
        w.str(article_ids_[d]);
        w.u32(doc_lengths_[d]);
        w.u32(static_cast<std::uint32_t>(images_[d].size()));
        for (const auto& img : images_[d]) w.str(img);
    }
    std::vector<const std::string*> tokens;
    tokens.reserve(postings_.size());
    for (const auto& entry : postings_) tokens.push_back(&entry.first);
    std::sort(tokens.begin(), tokens.end(), [](const auto* a, const auto* b) { return *a < *b; });
    w.u32(static_cast<std::uint32_t>(tokens.size()));
    for (const auto* t : tokens) {
        const auto& plist = postings_.at(*t);
        w.str(*t);
        w.u32(static_cast<std::uint32_t>(plist.size()));
        for (const auto& p : plist) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

ArticleIndex ArticleIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    Reader r(bytes, path.string());
    if (!r.magic(kIndexMagic)) throw InputError(path.string() + ": not an index file (bad magic)");
    if (const auto v = r.u32(); v != kIndexVersion)
        throw InputError(path.string() + ": unsupported index version " + std::to_string(v));
    ArticleIndex index;
    index.params_.k1 = r.f64();
    index.params_.b = r.f64();
    const auto n_docs = r.u32();
    if (n_docs == 0) throw InputError(path.string() + ": index has no documents");
    for (std::uint32_t d = 0; d < n_docs; ++d) {
        index.article_ids_.push_back(r.str());
        index.doc_lengths_.push_back(r.u32());
        std::vector<std::string> imgs(r.u32());
        for (auto& img : imgs) img = r.str();
        index.images_.push_back(std::move(imgs));
    }
    const auto n_tokens = r.u32();
    for (std::uint32_t t = 0; t < n_tokens; ++t) {
        auto token = r.str();
        std::vector<Posting> plist(r.u32());
        for (auto& p : plist) {
            p.doc = r.u32();
            p.tf = r.u32();
            if (p.doc >= n_docs) throw InputError(path.string() + ": posting references unknown doc");
        }
        index.postings_.emplace(std::move(token), std::move(plist));
    }
    if (!r.done()) throw InputError(path.string() + ": trailing bytes in index file");
    index.finalize();
    return index;
}

Retrieval retrieve(const ArticleIndex& index, std::string_view context, std::string_view target_word,
                   std::size_t top_k) {
    Retrieval r;
    r.hits = index.search(context, top_k);
    if (r.hits.empty()) {
        r.used_fallback = true;
        r.hits = index.search(target_word, top_k);
    }
    return r;
}

RetrievalScores score_images(const Sample& sample, const Retrieval& retrieved, const ArticleIndex& index,
                             const EmbeddingStore& images, const EmbeddingStore& article_images) {
    RetrievalScores out;
    out.sample_id = sample.id;
    out.images = sample.images;
    out.used_fallback = retrieved.used_fallback;
    std::vector<std::span<const double>> pool;
    for (const auto& hit : retrieved.hits) {
        out.retrieved_article_ids.push_back(index.article_id(hit.doc));
        for (const auto& img : index.article_images(hit.doc))
            if (auto v = article_images.find(img)) pool.push_back(*v);
    }
    out.scores.reserve(sample.images.size());
    for (const auto& img : sample.images) {
        const auto x = images.at(img);
        double best = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const double c = cosine(x, pool[i]);
            best = i == 0 ? c : std::max(best, c);
        }
        out.scores.push_back(best);
    }
    return out;
}

std::vector<RetrievalScores> retrieve_dataset(const Dataset& dataset, const ArticleIndex& index,
                                              const EmbeddingStore& images,
                                              const EmbeddingStore& article_images, std::size_t top_k,
                                              unsigned threads) {
    std::vector<RetrievalScores> out(dataset.samples.size());
    parallel_for(dataset.samples.size(), threads, [&](std::size_t i) {
        const auto& s = dataset.samples[i];
        out[i] = score_images(s, retrieve(index, s.context, s.target, top_k), index, images, article_images);
    });
    return out;
}

RetrievalScores empty_retrieval(const Sample& sample) {
    RetrievalScores out;
    out.sample_id = sample.id;
    out.images = sample.images;
    out.scores.assign(sample.images.size(), 0.0);
    return out;
}

void save_retrieval(const std::filesystem::path& path, const std::vector<RetrievalScores>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["sample"] = r.sample_id;
        j["articles"] = r.retrieved_article_ids;
        j["fallback"] = r.used_fallback;
        auto& scores = j["scores"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < r.scores.size(); ++i) {
            nlohmann::ordered_json row;
            row["image"] = r.images.at(i);
            row["score"] = r.scores[i];
            scores.push_back(std::move(row));
        }
        out << j.dump() << '\n';
    }
}

std::vector<RetrievalScores> load_retrieval(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<RetrievalScores> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            RetrievalScores r;
            r.sample_id = j.at("sample").get<std::string>();
            r.retrieved_article_ids = j.at("articles").get<std::vector<std::string>>();
            r.used_fallback = j.at("fallback").get<bool>();
            for (const auto& s : j.at("scores")) {
                r.images.push_back(s.at("image").get<std::string>());
                r.scores.push_back(s.at("score").get<double>());
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace vwsd
