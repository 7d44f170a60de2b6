#pragma once

#include "vwsd/scorer.hpp"
#include "vwsd/store.hpp"
#include "vwsd/wikindex.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vwsd {

inline constexpr std::size_t kFeatureCount = 15;

/// Per-candidate ranking features, in order:
///
///   A  image score (similarity minus penalty)
///   B  max score of the other nine candidates
///   C  mean score of the other nine candidates
///   D  A - B
///   E  A - C
///   F  image penalty
///   G..K  the same five statistics over retrieval scores
///   L  cosine(image, target word embedding)
///   M  cosine(image, context word embedding)
///   N  log10(card(image))
///   O  log10(card(context word))
using FeatureVector = std::array<double, kFeatureCount>;

namespace feat {
enum : std::size_t { A, B, C, D, E, F, G, H, I, J, K, L, M, N, O };
} // namespace feat

std::string_view feature_name(std::size_t index);

struct WordSims {
    double target = 0.0;   // L
    double context = 0.0;  // M
};

/// Lookup key of a word in the word-embedding store: its tokens joined by
/// single spaces.
std::string word_key(std::string_view word);

/// L and M for every candidate. Word embeddings are keyed by word_key() of
/// the target and of the context word. Throws InputError if either is
/// missing.
std::vector<WordSims> word_level_sims(const Sample& sample, const EmbeddingStore& images,
                                      const EmbeddingStore& words);

/// card of the context word: the smallest word_card among its tokens,
/// at least 1.
int context_word_card(const Sample& sample, const Dataset& dataset);

/// Ten feature vectors in candidate order. Every upstream input must be
/// keyed by the same sample and list the same candidates.
std::vector<FeatureVector> extract(const Sample& sample, const SampleScores& scores,
                                   const RetrievalScores& wiki, const std::vector<WordSims>& word_sims,
                                   const Dataset& dataset);

/// Zeroes the retrieval features G..K.
void clear_retrieval_features(std::vector<FeatureVector>& vectors);

struct FeatureGroup {
    std::string sample_id;
    std::vector<std::string> images;
    std::vector<FeatureVector> vectors;
    std::vector<int> labels;  // empty when the sample has no gold image
};

struct FeatureMatrix {
    std::vector<FeatureGroup> groups;
};

FeatureGroup make_group(const Sample& sample, std::vector<FeatureVector> vectors);

/// TSV with header `sample image A .. O label`; label is -1 for unlabeled
/// groups. Values are written with round-trip precision.
void save_features(const std::filesystem::path& path, const FeatureMatrix& matrix);
FeatureMatrix load_features(const std::filesystem::path& path);

} // namespace vwsd
