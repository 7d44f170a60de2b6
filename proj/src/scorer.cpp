#include "vwsd/scorer.hpp"

#include "vwsd/error.hpp"
#include "vwsd/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace vwsd {

double PenaltyTable::at(const std::string& image_id) const {
    auto it = penalties.find(image_id);
    if (it == penalties.end()) throw InputError("no penalty for image '" + image_id + "'");
    return it->second;
}

PenaltyTable compute_penalties(const Dataset& dataset, const EmbeddingStore& contexts,
                               const EmbeddingStore& images, unsigned threads) {
    if (dataset.samples.empty()) throw InputError("cannot compute penalties over an empty dataset");
    require_embeddings(dataset, contexts, images);
    if (contexts.dim() != images.dim())
        throw InputError("context dim " + std::to_string(contexts.dim()) + " != image dim " +
                         std::to_string(images.dim()));

    // Vectors are unit length, so the mean cosine over all contexts is the
    // dot product with the mean context vector.
    std::vector<double> mean(contexts.dim(), 0.0);
    for (const auto& s : dataset.samples) {
        const auto c = contexts.at(s.id);
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += c[k];
    }
    const double n = static_cast<double>(dataset.samples.size());
    for (double& m : mean) m /= n;

    PenaltyTable table;
    for (const auto& [img, card] : dataset.image_card) table.max_card = std::max(table.max_card, card);

    std::vector<const std::string*> ids;
    ids.reserve(dataset.image_card.size());
    for (const auto& entry : dataset.image_card) ids.push_back(&entry.first);
    std::vector<double> values(ids.size());
    parallel_for(ids.size(), threads, [&](std::size_t i) {
        const double ratio = static_cast<double>(dataset.card_of_image(*ids[i])) / table.max_card;
        values[i] = dot(mean, images.at(*ids[i])) * ratio;
    });
    table.penalties.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) table.penalties.emplace(*ids[i], values[i]);
    return table;
}

PenaltyTable zero_penalties(const Dataset& dataset) {
    PenaltyTable table;
    for (const auto& [img, card] : dataset.image_card) {
        table.penalties.emplace(img, 0.0);
        table.max_card = std::max(table.max_card, card);
    }
    return table;
}

SampleScores score_sample(const Sample& sample, const EmbeddingStore& contexts,
                          const EmbeddingStore& images, const PenaltyTable& penalties) {
    SampleScores out{sample.id, {}};
    out.rows.reserve(sample.images.size());
    const auto c = contexts.at(sample.id);
    for (const auto& img : sample.images) {
        ScoreRow row;
        row.image = img;
        row.sim = dot(c, images.at(img));
        row.penalty = penalties.at(img);
        row.score = row.sim - row.penalty;
        out.rows.push_back(std::move(row));
    }
    return out;
}

ScoreTable score_dataset(const Dataset& dataset, const EmbeddingStore& contexts,
                         const EmbeddingStore& images, const PenaltyTable& penalties,
                         unsigned threads) {
    ScoreTable table(dataset.samples.size());
    parallel_for(dataset.samples.size(), threads, [&](std::size_t i) {
        table[i] = score_sample(dataset.samples[i], contexts, images, penalties);
    });
    return table;
}

std::size_t best_candidate(const SampleScores& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.rows.size(); ++i)
        if (scores.rows[i].score > scores.rows[best].score) best = i;
    return best;
}

void save_scores(const std::filesystem::path& path, const ScoreTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& s : table) {
        nlohmann::ordered_json j;
        j["sample"] = s.sample_id;
        auto& rows = j["scores"] = nlohmann::ordered_json::array();
        for (const auto& r : s.rows) {
            nlohmann::ordered_json row;
            row["image"] = r.image;
            row["sim"] = r.sim;
            row["penalty"] = r.penalty;
            row["score"] = r.score;
            rows.push_back(std::move(row));
        }
        out << j.dump() << '\n';
    }
}

ScoreTable load_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    ScoreTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            SampleScores s;
            s.sample_id = j.at("sample").get<std::string>();
            for (const auto& r : j.at("scores")) {
                s.rows.push_back({r.at("image").get<std::string>(), r.at("sim").get<double>(),
                                  r.at("penalty").get<double>(), r.at("score").get<double>()});
            }
            if (s.rows.size() != kCandidatesPerSample)
                throw InputError("sample '" + s.sample_id + "' has " + std::to_string(s.rows.size()) +
                                 " score rows");
            table.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

EmbeddingStore select_contexts(const Dataset& dataset, const EmbeddingStore& raw,
                               const EmbeddingStore* expanded) {
    EmbeddingStore out;
    for (const auto& s : dataset.samples) {
        std::optional<std::span<const double>> v;
        if (expanded) v = expanded->find(s.id);
        if (!v) v = raw.at(s.id);
        out.add(s.id, *v);
    }
    return out;
}

} // namespace vwsd
