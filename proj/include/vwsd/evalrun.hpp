#pragma once

#include "vwsd/scorer.hpp"
#include "vwsd/store.hpp"
#include "vwsd/wikindex.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vwsd {

/// Candidates of one sample, best first.
struct Ranking {
    std::string sample_id;
    std::vector<std::string> images;
    std::string config;
};

using GoldMap = std::unordered_map<std::string, std::string>;

/// Sample id -> gold image. Throws InputError if any sample lacks gold.
GoldMap gold_map(const Dataset& dataset);

/// 1-based position of the gold image in the ranking.
std::size_t gold_rank(const Ranking& ranking, const GoldMap& gold);

/// Fraction of rankings with the gold image first.
double accuracy(std::span<const Ranking> rankings, const GoldMap& gold);

/// Mean of 1 / rank of the gold image.
double mrr(std::span<const Ranking> rankings, const GoldMap& gold);

/// Candidate ids by descending score; ties keep candidate order.
std::vector<std::string> order_by_score(const SampleScores& scores);

/// No-LTR selection rule: if exactly one candidate has a retrieval score
/// above `hi` and every other candidate is below `lo`, it goes first and the
/// rest follow by classifier score. Otherwise the classifier order is used.
/// Pass wiki = nullptr to disable the retrieval branch.
std::vector<std::string> heuristic_select(const SampleScores& clip, const RetrievalScores* wiki,
                                          double hi = 0.9, double lo = 0.8);

struct AblationConfig {
    std::string name;
    bool penalties = true;
    bool ltr = true;
    bool expansion = true;
    bool wikipedia = true;
};

/// original, no_penalties, no_ltr, no_expansion, no_wikipedia, clip_only.
std::vector<AblationConfig> ablation_presets();

/// Throws InputError for an unknown name.
AblationConfig ablation_preset(std::string_view name);

struct ReportRow {
    std::string config;
    std::string language;
    std::size_t n_samples = 0;
    double accuracy = 0.0;
    double mrr = 0.0;
    std::string mode;
};

/// Columns: config, language, n_samples, accuracy, mrr, mode.
std::string format_report_tsv(std::span<const ReportRow> rows);
std::string format_report_text(std::span<const ReportRow> rows);

/// JSONL: {"sample", "config", "ranking": [ids]}.
void save_rankings(const std::filesystem::path& path, std::span<const Ranking> rankings);
std::vector<Ranking> load_rankings(const std::filesystem::path& path);

} // namespace vwsd
