#pragma once

#include "vwsd/store.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vwsd {

struct Article {
    std::string id;
    std::string title;
    std::string text;
    std::vector<std::string> images;
};

/// JSONL: {"id", "title", "text", "images": [ids]}.
std::vector<Article> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, std::span<const Article> articles);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
};

struct SearchHit {
    std::uint32_t doc = 0;
    double score = 0.0;
};

/// Okapi BM25 over title + text of each article, with the article's image
/// ids kept as payload.
///
///   score(q, d) = sum over query tokens t of
///       idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avglen))
///   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
///
/// Repeated query tokens contribute once per occurrence.
class ArticleIndex {
public:
    ArticleIndex() = default;

    /// Throws InputError for an empty corpus or duplicate article ids.
    static ArticleIndex build(std::span<const Article> articles, Bm25Params params = {});

    /// Binary layout, little-endian: "VWIX", u32 version, f64 k1, f64 b,
    /// u32 doc count, then per doc {str id, u32 length, u32 n, n x str image},
    /// then u32 token count and per token (sorted) {str token, u32 n,
    /// n x (u32 doc, u32 tf)}. A str is a u32 byte length plus bytes.
    void save(const std::filesystem::path& path) const;
    static ArticleIndex load(const std::filesystem::path& path);

    /// BM25 score of every document for the tokenized query.
    std::vector<double> scores(std::string_view query) const;

    /// Up to top_k documents with positive score, best first; ties by
    /// ordinal.
    std::vector<SearchHit> search(std::string_view query, std::size_t top_k) const;

    double idf(const std::string& token) const;

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    const std::string& article_id(std::uint32_t doc) const { return article_ids_.at(doc); }
    const std::vector<std::string>& article_images(std::uint32_t doc) const { return images_.at(doc); }
    const std::vector<Posting>* postings(const std::string& token) const;

private:
    void finalize();

    Bm25Params params_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> article_ids_;
    std::vector<std::vector<std::string>> images_;
    double avg_doc_length_ = 0.0;
};

struct Retrieval {
    std::vector<SearchHit> hits;
    bool used_fallback = false;
};

/// Top-k articles for the full context; when none scores above zero the
/// search is repeated with the target word alone.
Retrieval retrieve(const ArticleIndex& index, std::string_view context, std::string_view target_word,
                   std::size_t top_k = 10);

struct RetrievalScores {
    std::string sample_id;
    std::vector<std::string> images;  // candidate order
    std::vector<double> scores;
    std::vector<std::string> retrieved_article_ids;
    bool used_fallback = false;
};

/// Each candidate's score is its highest cosine to any image attached to a
/// retrieved article; 0 when no article image has an embedding. Candidates
/// must have embeddings; article images without one are skipped.
RetrievalScores score_images(const Sample& sample, const Retrieval& retrieved, const ArticleIndex& index,
                             const EmbeddingStore& images, const EmbeddingStore& article_images);

/// Retrieval plus image scoring for every sample. The raw context is the
/// query.
std::vector<RetrievalScores> retrieve_dataset(const Dataset& dataset, const ArticleIndex& index,
                                              const EmbeddingStore& images,
                                              const EmbeddingStore& article_images, std::size_t top_k,
                                              unsigned threads = 1);

/// All-zero scores with no retrieved articles.
RetrievalScores empty_retrieval(const Sample& sample);

/// JSONL: {"sample", "articles": [ids], "fallback": bool,
///         "scores": [{"image", "score"} x10]}.
void save_retrieval(const std::filesystem::path& path, const std::vector<RetrievalScores>& rows);
std::vector<RetrievalScores> load_retrieval(const std::filesystem::path& path);

} // namespace vwsd
