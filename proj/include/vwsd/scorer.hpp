#pragma once

#include "vwsd/store.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace vwsd {

/// Per-image penalty: the image's mean similarity to every context in the
/// dataset, scaled by card(image) / max card.
struct PenaltyTable {
    std::unordered_map<std::string, double> penalties;
    int max_card = 1;

    /// Throws InputError when the image has no entry.
    double at(const std::string& image_id) const;
};

/// Builds penalties for every image referenced by the dataset. Context
/// vectors are looked up by sample id; |C| is the number of samples.
PenaltyTable compute_penalties(const Dataset& dataset, const EmbeddingStore& contexts,
                               const EmbeddingStore& images, unsigned threads = 1);

/// All penalties zero; used when penalties are switched off.
PenaltyTable zero_penalties(const Dataset& dataset);

struct ScoreRow {
    std::string image;
    double sim = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

struct SampleScores {
    std::string sample_id;
    std::vector<ScoreRow> rows;  // candidate order
};

using ScoreTable = std::vector<SampleScores>;

/// score = cosine(context, image) - penalty(image) for each candidate.
SampleScores score_sample(const Sample& sample, const EmbeddingStore& contexts,
                          const EmbeddingStore& images, const PenaltyTable& penalties);

ScoreTable score_dataset(const Dataset& dataset, const EmbeddingStore& contexts,
                         const EmbeddingStore& images, const PenaltyTable& penalties,
                         unsigned threads = 1);

/// Index of the best candidate; ties go to the earliest.
std::size_t best_candidate(const SampleScores& scores);

/// JSONL: {"sample": id, "scores": [{"image", "sim", "penalty", "score"} x10]}.
void save_scores(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable load_scores(const std::filesystem::path& path);

/// Context vectors in use for scoring: the expanded vector for each sample
/// when `expanded` has one, otherwise the raw vector. Keyed by sample id.
EmbeddingStore select_contexts(const Dataset& dataset, const EmbeddingStore& raw,
                               const EmbeddingStore* expanded);

} // namespace vwsd
