#pragma once

#include "vwsd/evalrun.hpp"
#include "vwsd/features.hpp"
#include "vwsd/gbrank.hpp"
#include "vwsd/scorer.hpp"
#include "vwsd/store.hpp"
#include "vwsd/wikindex.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vwsd {

/// Loaded artifacts for one dataset. Only `dataset`, `contexts` and
/// `images` are always required; the rest are needed by the stages that
/// use them and checked there.
struct PipelineInputs {
    const Dataset* dataset = nullptr;
    const EmbeddingStore* contexts = nullptr;           // raw contexts, keyed by sample id
    const EmbeddingStore* expanded_contexts = nullptr;  // expanded contexts, keyed by sample id
    const EmbeddingStore* images = nullptr;
    const EmbeddingStore* words = nullptr;  // single-word text embeddings for L and M
    const ArticleIndex* index = nullptr;
    const EmbeddingStore* article_images = nullptr;
    const gbrank::RankModel* model = nullptr;
    const gbrank::RankModel* model_no_wiki = nullptr;  // trained with G..K zeroed
};

struct PipelineOptions {
    std::string language = "other";
    std::size_t top_k = 10;
    double heuristic_hi = 0.9;
    double heuristic_lo = 0.8;
    unsigned threads = 1;
};

/// Classifier scores with or without penalties and expansion.
ScoreTable score_stage(const PipelineInputs& in, bool penalties, bool expansion, unsigned threads = 1);

/// Retrieval scores for every sample, in dataset order.
std::vector<RetrievalScores> retrieval_stage(const PipelineInputs& in, const PipelineOptions& options);

/// Reorders loaded per-sample tables to dataset order. Throws InputError if
/// a sample is missing or its candidate list differs.
ScoreTable align_scores(const Dataset& dataset, ScoreTable table);
std::vector<RetrievalScores> align_retrieval(const Dataset& dataset, std::vector<RetrievalScores> rows);

/// Feature groups for every sample. With `wiki` empty or `wikipedia` false,
/// features G..K are zero.
FeatureMatrix feature_stage(const Dataset& dataset, const ScoreTable& scores,
                            std::span<const RetrievalScores> wiki, const EmbeddingStore& images,
                            const EmbeddingStore& words, bool wikipedia, unsigned threads = 1);

/// Final ordering. With LTR, candidates are sorted by model score, ties
/// broken by classifier score and then candidate order, so a model with no
/// trees reproduces the classifier ranking. Without LTR the heuristic rule
/// is applied (its retrieval branch only when `wikipedia` is set).
std::vector<Ranking> rank_stage(const Dataset& dataset, const ScoreTable& scores,
                                std::span<const RetrievalScores> wiki, const FeatureMatrix* features,
                                const AblationConfig& config, const gbrank::RankModel* model,
                                const PipelineOptions& options);

/// Full flow for one configuration: score, retrieve, extract features,
/// rank. `wiki_cache`, when given, holds precomputed retrieval scores.
std::vector<Ranking> run_config(const PipelineInputs& in, const AblationConfig& config,
                                const PipelineOptions& options,
                                const std::vector<RetrievalScores>* wiki_cache = nullptr);

/// Mode label recorded in the report for a configuration.
std::string report_mode(const PipelineInputs& in, const AblationConfig& config);

struct AblationReport {
    std::vector<ReportRow> rows;
    std::vector<std::vector<Ranking>> rankings;  // parallel to rows
};

/// One accuracy/MRR row per configuration. Retrieval runs once and is
/// shared across configurations.
AblationReport run_ablation(const PipelineInputs& in, std::span<const AblationConfig> configs,
                            const PipelineOptions& options);

/// Evaluates rankings against the dataset's gold labels.
ReportRow evaluate(const Dataset& dataset, std::span<const Ranking> rankings, const std::string& config,
                   const std::string& language, const std::string& mode);

/// Converts labeled feature groups into a training set; unlabeled groups
/// are skipped.
gbrank::TrainingSet training_set(const FeatureMatrix& matrix);

} // namespace vwsd
