#include "vwsd/pipeline.hpp"

#include "vwsd/error.hpp"
#include "vwsd/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace vwsd {

namespace {

const Dataset& need_dataset(const PipelineInputs& in) {
    if (!in.dataset) throw InputError("no dataset loaded");
    return *in.dataset;
}

template <class T>
const T& need(const T* p, const char* what) {
    if (!p) throw InputError(std::string("missing input: ") + what);
    return *p;
}

template <class Row, class Images>
std::vector<Row> align(const Dataset& dataset, std::vector<Row> rows, const char* what, Images&& images_of) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < rows.size(); ++i) pos.emplace(rows[i].sample_id, i);
    std::vector<Row> out;
    out.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
        auto it = pos.find(s.id);
        if (it == pos.end()) throw InputError(std::string(what) + " missing for sample '" + s.id + "'");
        auto& row = rows[it->second];
        if (images_of(row) != s.images)
            throw InputError(std::string(what) + " for sample '" + s.id + "' list different candidates");
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace

ScoreTable score_stage(const PipelineInputs& in, bool penalties, bool expansion, unsigned threads) {
    const auto& ds = need_dataset(in);
    const auto& raw = need(in.contexts, "context embeddings");
    const auto& images = need(in.images, "image embeddings");
    const bool use_expanded = expansion && in.expanded_contexts;
    const EmbeddingStore selected = use_expanded ? select_contexts(ds, raw, in.expanded_contexts) : EmbeddingStore{};
    const EmbeddingStore& contexts = use_expanded ? selected : raw;
    require_embeddings(ds, contexts, images);
    const PenaltyTable table = penalties ? compute_penalties(ds, contexts, images, threads) : zero_penalties(ds);
    return score_dataset(ds, contexts, images, table, threads);
}

std::vector<RetrievalScores> retrieval_stage(const PipelineInputs& in, const PipelineOptions& options) {
    const auto& ds = need_dataset(in);
    return retrieve_dataset(ds, need(in.index, "article index"), need(in.images, "image embeddings"),
                            need(in.article_images, "article image embeddings"), options.top_k, options.threads);
}

ScoreTable align_scores(const Dataset& dataset, ScoreTable table) {
    return align(dataset, std::move(table), "classifier scores", [](const SampleScores& s) {
        std::vector<std::string> ids;
        for (const auto& r : s.rows) ids.push_back(r.image);
        return ids;
    });
}

std::vector<RetrievalScores> align_retrieval(const Dataset& dataset, std::vector<RetrievalScores> rows) {
    return align(dataset, std::move(rows), "retrieval scores", [](const RetrievalScores& r) { return r.images; });
}

FeatureMatrix feature_stage(const Dataset& dataset, const ScoreTable& scores,
                            std::span<const RetrievalScores> wiki, const EmbeddingStore& images,
                            const EmbeddingStore& words, bool wikipedia, unsigned threads) {
    const std::size_t n = dataset.samples.size();
    if (scores.size() != n) throw InputError("classifier scores do not cover the dataset");
    if (!wiki.empty() && wiki.size() != n) throw InputError("retrieval scores do not cover the dataset");
    FeatureMatrix m;
    m.groups.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& s = dataset.samples[i];
        const RetrievalScores empty = wiki.empty() ? empty_retrieval(s) : RetrievalScores{};
        const RetrievalScores& w = wiki.empty() ? empty : wiki[i];
        auto vectors = extract(s, scores[i], w, word_level_sims(s, images, words), dataset);
        if (!wikipedia) clear_retrieval_features(vectors);
        m.groups[i] = make_group(s, std::move(vectors));
    });
    return m;
}

std::vector<Ranking> rank_stage(const Dataset& dataset, const ScoreTable& scores,
                                std::span<const RetrievalScores> wiki, const FeatureMatrix* features,
                                const AblationConfig& config, const gbrank::RankModel* model,
                                const PipelineOptions& options) {
    const std::size_t n = dataset.samples.size();
    if (scores.size() != n) throw InputError("classifier scores do not cover the dataset");
    std::vector<Ranking> out(n);
    if (config.ltr) {
        if (!model) throw InputError("config '" + config.name + "' requests LTR but no trained model was given");
        if (!features || features->groups.size() != n) throw InputError("features do not cover the dataset");
        for (std::size_t i = 0; i < n; ++i) {
            const auto& g = features->groups[i];
            const auto& rows = scores[i].rows;
            std::vector<double> pred;
            pred.reserve(g.vectors.size());
            for (const auto& v : g.vectors) pred.push_back(model->predict(v));
            std::vector<std::size_t> idx(pred.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (pred[a] != pred[b]) return pred[a] > pred[b];
                return rows[a].score > rows[b].score;
            });
            out[i].sample_id = dataset.samples[i].id;
            for (auto k : idx) out[i].images.push_back(rows[k].image);
            out[i].config = config.name;
        }
        return out;
    }
    const bool use_wiki = config.wikipedia && !wiki.empty();
    if (use_wiki && wiki.size() != n) throw InputError("retrieval scores do not cover the dataset");
    for (std::size_t i = 0; i < n; ++i) {
        out[i].sample_id = dataset.samples[i].id;
        out[i].images = heuristic_select(scores[i], use_wiki ? &wiki[i] : nullptr, options.heuristic_hi,
                                         options.heuristic_lo);
        out[i].config = config.name;
    }
    return out;
}

std::vector<Ranking> run_config(const PipelineInputs& in, const AblationConfig& config,
                                const PipelineOptions& options, const std::vector<RetrievalScores>* wiki_cache) {
    const auto& ds = need_dataset(in);
    if (config.ltr && !in.model)
        throw InputError("config '" + config.name + "' requests LTR but no trained model was given");
    const ScoreTable scores = score_stage(in, config.penalties, config.expansion, options.threads);
    std::vector<RetrievalScores> computed;
    std::span<const RetrievalScores> wiki;
    if (config.wikipedia) {
        if (!wiki_cache) computed = retrieval_stage(in, options);
        wiki = wiki_cache ? std::span<const RetrievalScores>(*wiki_cache) : std::span<const RetrievalScores>(computed);
    }
    if (!config.ltr) return rank_stage(ds, scores, wiki, nullptr, config, nullptr, options);

    const FeatureMatrix features = feature_stage(ds, scores, wiki, need(in.images, "image embeddings"),
                                                 need(in.words, "word embeddings"), config.wikipedia,
                                                 options.threads);
    const gbrank::RankModel* model = !config.wikipedia && in.model_no_wiki ? in.model_no_wiki : in.model;
    return rank_stage(ds, scores, wiki, &features, config, model, options);
}

std::string report_mode(const PipelineInputs& in, const AblationConfig& config) {
    if (!config.ltr) return config.wikipedia ? "heuristic" : "classifier";
    if (config.wikipedia) return "ltr";
    return in.model_no_wiki ? "ltr+wiki_retrained" : "ltr+wiki_zero_filled";
}

ReportRow evaluate(const Dataset& dataset, std::span<const Ranking> rankings, const std::string& config,
                   const std::string& language, const std::string& mode) {
    const auto gold = gold_map(dataset);
    return {config, language, rankings.size(), accuracy(rankings, gold), mrr(rankings, gold), mode};
}

AblationReport run_ablation(const PipelineInputs& in, std::span<const AblationConfig> configs,
                            const PipelineOptions& options) {
    const auto& ds = need_dataset(in);
    gold_map(ds);
    for (const auto& c : configs)
        if (c.ltr && !in.model)
            throw InputError("config '" + c.name + "' requests LTR but no trained model was given");

    std::vector<RetrievalScores> wiki;
    const bool any_wiki = std::any_of(configs.begin(), configs.end(), [](const auto& c) { return c.wikipedia; });
    if (any_wiki) wiki = retrieval_stage(in, options);

    AblationReport report;
    for (const auto& c : configs) {
        auto rankings = run_config(in, c, options, any_wiki ? &wiki : nullptr);
        report.rows.push_back(evaluate(ds, rankings, c.name, options.language, report_mode(in, c)));
        report.rankings.push_back(std::move(rankings));
    }
    return report;
}

gbrank::TrainingSet training_set(const FeatureMatrix& matrix) {
    gbrank::TrainingSet set(kFeatureCount);
    for (const auto& g : matrix.groups) {
        if (g.labels.empty()) continue;
        std::vector<std::vector<double>> rows;
        rows.reserve(g.vectors.size());
        for (const auto& v : g.vectors) rows.emplace_back(v.begin(), v.end());
        set.add_group(rows, g.labels);
    }
    return set;
}

} // namespace vwsd
