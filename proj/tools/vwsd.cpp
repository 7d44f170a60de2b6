// vwsd: command-line front end for the visual word sense disambiguation
// ranking engine. Every stage reads and writes plain files so runs can be
// split, cached and resumed.

#include "vwsd/error.hpp"
#include "vwsd/evalrun.hpp"
#include "vwsd/features.hpp"
#include "vwsd/gbrank.hpp"
#include "vwsd/lexicon.hpp"
#include "vwsd/pipeline.hpp"
#include "vwsd/scorer.hpp"
#include "vwsd/store.hpp"
#include "vwsd/wikindex.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using namespace vwsd;

constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

/// Options shared by all subcommands; settable from the config file.
struct RunConfig {
    std::string language = "other";
    std::string dataset;
    std::string contexts;
    std::string expanded_contexts;
    std::string images;
    std::string words;
    std::string article_images;
    std::string word_vectors;
    std::vector<std::string> lexicons;
    std::string corpus;
    std::string index;
    std::string model;
    std::string model_no_wiki;
    std::string policy;
    double k1 = 1.2;
    double b = 0.75;
    std::size_t top_k = 10;
    double hi = 0.9;
    double lo = 0.8;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw InputError(std::string("missing required option --") + flag);
    return value;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

PipelineOptions options_from(const RunConfig& rc) {
    PipelineOptions o;
    o.language = rc.language;
    o.top_k = rc.top_k;
    o.heuristic_hi = rc.hi;
    o.heuristic_lo = rc.lo;
    o.threads = rc.threads;
    return o;
}

/// Artifacts loaded on demand for one command.
struct Loaded {
    std::optional<Dataset> dataset;
    std::optional<EmbeddingStore> contexts, expanded, images, words, article_images;
    std::optional<ArticleIndex> index;
    std::optional<gbrank::RankModel> model, model_no_wiki;

    PipelineInputs inputs() const {
        PipelineInputs in;
        in.dataset = dataset ? &*dataset : nullptr;
        in.contexts = contexts ? &*contexts : nullptr;
        in.expanded_contexts = expanded ? &*expanded : nullptr;
        in.images = images ? &*images : nullptr;
        in.words = words ? &*words : nullptr;
        in.article_images = article_images ? &*article_images : nullptr;
        in.index = index ? &*index : nullptr;
        in.model = model ? &*model : nullptr;
        in.model_no_wiki = model_no_wiki ? &*model_no_wiki : nullptr;
        return in;
    }
};

void load_optional_store(std::optional<EmbeddingStore>& slot, const std::string& path) {
    if (!path.empty()) slot = load_embeddings(path);
}

ArticleIndex load_or_build_index(const RunConfig& rc) {
    if (!rc.index.empty()) return ArticleIndex::load(rc.index);
    if (!rc.corpus.empty()) return ArticleIndex::build(load_corpus(rc.corpus), {rc.k1, rc.b});
    throw InputError("missing required option --index or --corpus");
}

Loaded load_all(const RunConfig& rc, bool need_wiki, bool need_ltr) {
    Loaded l;
    l.dataset = load_dataset(require(rc.dataset, "dataset"));
    l.contexts = load_embeddings(require(rc.contexts, "contexts"));
    l.images = load_embeddings(require(rc.images, "images"));
    load_optional_store(l.expanded, rc.expanded_contexts);
    if (need_ltr) {
        l.words = load_embeddings(require(rc.words, "words"));
        l.model = gbrank::load_model(require(rc.model, "model"));
        if (!rc.model_no_wiki.empty()) l.model_no_wiki = gbrank::load_model(rc.model_no_wiki);
    }
    if (need_wiki) {
        l.index = load_or_build_index(rc);
        l.article_images = load_embeddings(require(rc.article_images, "article-images"));
    }
    return l;
}

std::string sanitize_field(std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

std::string single_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual word sense disambiguation ranking engine"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Run configuration file (TOML or INI); command-line flags win");

    RunConfig rc;
    app.add_option("--language", rc.language, "Language tag: en, it, fa or other")
        ->check(CLI::IsMember({"en", "it", "fa", "other"}));
    app.add_option("--dataset", rc.dataset, "Dataset JSONL")->check(CLI::ExistingFile);
    app.add_option("--contexts", rc.contexts, "Raw context embeddings keyed by sample id")->check(CLI::ExistingFile);
    app.add_option("--expanded-contexts", rc.expanded_contexts, "Expanded context embeddings keyed by sample id")
        ->check(CLI::ExistingFile);
    app.add_option("--images", rc.images, "Candidate image embeddings")->check(CLI::ExistingFile);
    app.add_option("--words", rc.words, "Single-word text embeddings (features L, M)")->check(CLI::ExistingFile);
    app.add_option("--article-images", rc.article_images, "Article image embeddings")->check(CLI::ExistingFile);
    app.add_option("--word-vectors", rc.word_vectors, "Word vectors for similarity sense matching")
        ->check(CLI::ExistingFile);
    app.add_option("--lexicon", rc.lexicons, "Lexicon JSONL files, in priority order")->check(CLI::ExistingFile);
    app.add_option("--corpus", rc.corpus, "Article corpus JSONL")->check(CLI::ExistingFile);
    app.add_option("--index", rc.index, "Article index file")->check(CLI::ExistingFile);
    app.add_option("--model", rc.model, "Trained rank model")->check(CLI::ExistingFile);
    app.add_option("--model-no-wiki", rc.model_no_wiki, "Rank model trained without retrieval features")
        ->check(CLI::ExistingFile);
    app.add_option("--policy", rc.policy, "Sense matching policy (default by language)")
        ->check(CLI::IsMember({"exact_only", "exact_then_similarity"}));
    app.add_option("--k1", rc.k1, "BM25 k1")->check(CLI::NonNegativeNumber);
    app.add_option("--b", rc.b, "BM25 b")->check(CLI::Range(0.0, 1.0));
    app.add_option("--top-k", rc.top_k, "Articles retrieved per sample")->check(CLI::PositiveNumber);
    app.add_option("--hi", rc.hi, "Heuristic: retrieval score the chosen image must exceed");
    app.add_option("--lo", rc.lo, "Heuristic: retrieval score all other images must stay below");
    app.add_option("--seed", rc.seed, "Seed for all stochastic steps");
    app.add_option("--threads", rc.threads, "Worker thread cap")->check(CLI::PositiveNumber);

    // build-index
    auto* build_cmd = app.add_subcommand("build-index", "Build the BM25 article index");
    std::string index_out;
    build_cmd->add_option("--out", index_out, "Index file to write")->required();

    // expand
    auto* expand_cmd = app.add_subcommand("expand", "Expand contexts with lexicon sense names");
    std::string expand_out, senses_out;
    expand_cmd->add_option("--out", expand_out, "TSV of sample id and expanded context ('-' for stdout)");
    expand_cmd->add_option("--senses-out", senses_out, "JSONL of the selected sense per sample");

    // score
    auto* score_cmd = app.add_subcommand("score", "Penalty-adjusted classifier scores");
    std::string score_out;
    bool score_no_penalties = false, score_no_expansion = false;
    score_cmd->add_option("--out", score_out, "Score JSONL")->required();
    score_cmd->add_flag("--no-penalties", score_no_penalties, "Set all penalties to zero");
    score_cmd->add_flag("--no-expansion", score_no_expansion, "Ignore expanded context embeddings");

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Article retrieval and image scoring");
    std::string retrieve_out;
    retrieve_cmd->add_option("--out", retrieve_out, "Retrieval JSONL")->required();

    // extract-features
    auto* features_cmd = app.add_subcommand("extract-features", "Build the ranking feature matrix");
    std::string features_scores, features_wiki, features_out;
    bool features_no_wiki = false;
    features_cmd->add_option("--scores", features_scores, "Score JSONL from `score`")
        ->required()
        ->check(CLI::ExistingFile);
    features_cmd->add_option("--wiki", features_wiki, "Retrieval JSONL from `retrieve`")->check(CLI::ExistingFile);
    features_cmd->add_flag("--no-wikipedia", features_no_wiki, "Zero the retrieval features");
    features_cmd->add_option("--out", features_out, "Feature TSV")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the LambdaMART ranker");
    std::string train_features, train_out;
    gbrank::TrainConfig tc;
    bool train_drop_wiki = false;
    train_cmd->add_option("--features", train_features, "Labeled feature TSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_out, "Model JSON")->required();
    train_cmd->add_option("--trees", tc.n_trees, "Number of trees");
    train_cmd->add_option("--max-depth", tc.max_depth, "Maximum tree depth");
    train_cmd->add_option("--learning-rate", tc.learning_rate, "Shrinkage per tree");
    train_cmd->add_option("--colsample", tc.colsample, "Fraction of features per tree");
    train_cmd->add_option("--subsample", tc.subsample, "Fraction of groups per tree");
    train_cmd->add_option("--sigmoid-scale", tc.sigmoid_scale, "Pairwise sigmoid scale");
    train_cmd->add_option("--lambda", tc.lambda, "L2 regularization of leaf values");
    train_cmd->add_option("--min-samples-leaf", tc.min_samples_leaf, "Minimum rows per leaf");
    train_cmd->add_flag("--drop-wiki", train_drop_wiki, "Zero features G..K before training");

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Full pipeline: score, retrieve, features, model, ranking");
    std::string rank_out, rank_scores, rank_wiki, rank_preset = "original";
    rank_cmd->add_option("--out", rank_out, "Rankings JSONL")->required();
    rank_cmd->add_option("--scores", rank_scores, "Reuse score JSONL instead of scoring")->check(CLI::ExistingFile);
    rank_cmd->add_option("--wiki", rank_wiki, "Reuse retrieval JSONL instead of retrieving")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--preset", rank_preset, "Ablation preset to run");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy and MRR of a rankings file");
    std::string eval_rankings, eval_out, eval_name;
    eval_cmd->add_option("--rankings", eval_rankings, "Rankings JSONL")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_out, "Report TSV ('-' for stdout)");
    eval_cmd->add_option("--name", eval_name, "Config name for the report row (default: from the file)");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Run the ablation grid and report accuracy/MRR");
    std::string ablate_out, ablate_rankings_dir;
    std::vector<std::string> ablate_configs;
    ablate_cmd->add_option("--out", ablate_out, "Report TSV")->required();
    ablate_cmd->add_option("--configs", ablate_configs, "Subset of presets (default: all six)");
    ablate_cmd->add_option("--rankings-dir", ablate_rankings_dir, "Also write <config>.rankings.jsonl here")
        ->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "vwsd: error[input]: %s\n", single_line(e.what()).c_str());
        return kExitInput;
    }

    try {
        const PipelineOptions options = options_from(rc);

        if (*build_cmd) {
            const auto corpus = load_corpus(require(rc.corpus, "corpus"));
            ArticleIndex::build(corpus, {rc.k1, rc.b}).save(index_out);
        } else if (*expand_cmd) {
            const auto ds = load_dataset(require(rc.dataset, "dataset"));
            if (rc.lexicons.empty()) throw InputError("missing required option --lexicon");
            const auto lexicon = Lexicon::load({rc.lexicons.begin(), rc.lexicons.end()});
            if (lexicon.dropped_relations() > 0)
                std::fprintf(stderr, "vwsd: warning: dropped %zu relations with unknown targets\n",
                             lexicon.dropped_relations());
            std::optional<EmbeddingStore> vectors;
            load_optional_store(vectors, rc.word_vectors);
            const MatchPolicy policy = rc.policy.empty() ? default_policy(rc.language) : parse_match_policy(rc.policy);
            std::string text, senses;
            for (const auto& s : ds.samples) {
                const auto e = expand_sample(lexicon, s, policy, vectors ? &*vectors : nullptr);
                text += sanitize_field(e.sample_id) + '\t' + sanitize_field(e.text) + '\n';
                nlohmann::ordered_json j;
                j["sample"] = s.id;
                j["sense"] = e.match ? nlohmann::ordered_json(e.match->sense->id) : nlohmann::ordered_json();
                j["method"] = !e.match ? "none" : e.match->method == MatchMethod::exact ? "exact" : "similarity";
                j["score"] = e.match ? e.match->score : 0.0;
                senses += j.dump() + '\n';
            }
            write_output(expand_out, text);
            if (!senses_out.empty()) write_output(senses_out, senses);
        } else if (*score_cmd) {
            auto l = load_all(rc, false, false);
            const auto table = score_stage(l.inputs(), !score_no_penalties, !score_no_expansion, rc.threads);
            save_scores(score_out, table);
        } else if (*retrieve_cmd) {
            Loaded l;
            l.dataset = load_dataset(require(rc.dataset, "dataset"));
            l.images = load_embeddings(require(rc.images, "images"));
            l.index = load_or_build_index(rc);
            l.article_images = load_embeddings(require(rc.article_images, "article-images"));
            save_retrieval(retrieve_out, retrieval_stage(l.inputs(), options));
        } else if (*features_cmd) {
            const auto ds = load_dataset(require(rc.dataset, "dataset"));
            const auto images = load_embeddings(require(rc.images, "images"));
            const auto words = load_embeddings(require(rc.words, "words"));
            const auto scores = align_scores(ds, load_scores(features_scores));
            std::vector<RetrievalScores> wiki;
            if (!features_wiki.empty() && !features_no_wiki) wiki = align_retrieval(ds, load_retrieval(features_wiki));
            save_features(features_out,
                          feature_stage(ds, scores, wiki, images, words, !features_no_wiki, rc.threads));
        } else if (*train_cmd) {
            auto matrix = load_features(train_features);
            if (train_drop_wiki)
                for (auto& g : matrix.groups) clear_retrieval_features(g.vectors);
            tc.seed = rc.seed;
            gbrank::save_model(train_out, gbrank::fit(training_set(matrix), tc));
        } else if (*rank_cmd) {
            const auto config = ablation_preset(rank_preset);
            Loaded l;
            l.dataset = load_dataset(require(rc.dataset, "dataset"));
            const auto& ds = *l.dataset;
            l.images = load_embeddings(require(rc.images, "images"));
            ScoreTable scores;
            if (!rank_scores.empty()) {
                scores = align_scores(ds, load_scores(rank_scores));
            } else {
                l.contexts = load_embeddings(require(rc.contexts, "contexts"));
                load_optional_store(l.expanded, rc.expanded_contexts);
                scores = score_stage(l.inputs(), config.penalties, config.expansion, rc.threads);
            }
            std::vector<RetrievalScores> wiki;
            if (config.wikipedia) {
                if (!rank_wiki.empty()) {
                    wiki = align_retrieval(ds, load_retrieval(rank_wiki));
                } else {
                    l.index = load_or_build_index(rc);
                    l.article_images = load_embeddings(require(rc.article_images, "article-images"));
                    wiki = retrieval_stage(l.inputs(), options);
                }
            }
            std::vector<Ranking> rankings;
            if (config.ltr) {
                l.words = load_embeddings(require(rc.words, "words"));
                l.model = gbrank::load_model(require(rc.model, "model"));
                if (!rc.model_no_wiki.empty()) l.model_no_wiki = gbrank::load_model(rc.model_no_wiki);
                const auto features =
                    feature_stage(ds, scores, wiki, *l.images, *l.words, config.wikipedia, rc.threads);
                const auto* model = !config.wikipedia && l.model_no_wiki ? &*l.model_no_wiki : &*l.model;
                rankings = rank_stage(ds, scores, wiki, &features, config, model, options);
            } else {
                rankings = rank_stage(ds, scores, wiki, nullptr, config, nullptr, options);
            }
            save_rankings(rank_out, rankings);
        } else if (*eval_cmd) {
            const auto ds = load_dataset(require(rc.dataset, "dataset"));
            const auto rankings = load_rankings(eval_rankings);
            std::string name = eval_name;
            if (name.empty() && !rankings.empty()) name = rankings.front().config;
            std::string mode = "external";
            if (auto presets = ablation_presets();
                std::any_of(presets.begin(), presets.end(), [&](auto& c) { return c.name == name; })) {
                PipelineInputs probe;
                const gbrank::RankModel placeholder;
                if (!rc.model_no_wiki.empty()) probe.model_no_wiki = &placeholder;
                mode = report_mode(probe, ablation_preset(name));
            }
            const auto row = evaluate(ds, rankings, name, rc.language, mode);
            if (row.n_samples != ds.samples.size())
                throw InputError("rankings cover " + std::to_string(row.n_samples) + " of " +
                                 std::to_string(ds.samples.size()) + " samples");
            write_output(eval_out, format_report_tsv(std::span(&row, 1)));
        } else if (*ablate_cmd) {
            std::vector<AblationConfig> configs;
            if (ablate_configs.empty()) {
                configs = ablation_presets();
            } else {
                for (const auto& name : ablate_configs) configs.push_back(ablation_preset(name));
            }
            const bool need_wiki = std::any_of(configs.begin(), configs.end(), [](auto& c) { return c.wikipedia; });
            const bool need_ltr = std::any_of(configs.begin(), configs.end(), [](auto& c) { return c.ltr; });
            const auto l = load_all(rc, need_wiki, need_ltr);
            const auto report = run_ablation(l.inputs(), configs, options);
            write_output(ablate_out, format_report_tsv(report.rows));
            std::cout << format_report_text(report.rows);
            if (!ablate_rankings_dir.empty()) {
                for (std::size_t i = 0; i < configs.size(); ++i) {
                    const auto path = std::filesystem::path(ablate_rankings_dir) / (configs[i].name + ".rankings.jsonl");
                    save_rankings(path, report.rankings[i]);
                }
            }
        }
    } catch (const InputError& e) {
        std::fprintf(stderr, "vwsd: error[input]: %s\n", single_line(e.what()).c_str());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "vwsd: error[input]: %s\n", single_line(e.what()).c_str());
        return kExitInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vwsd: error[internal]: %s\n", single_line(e.what()).c_str());
        return kExitInternal;
    }
    return 0;
}
