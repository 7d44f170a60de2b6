#include "vwsd/evalrun.hpp"

#include "vwsd/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace vwsd {

namespace {

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

GoldMap gold_map(const Dataset& dataset) {
    GoldMap gold;
    for (const auto& s : dataset.samples) {
        if (!s.gold) throw InputError("sample '" + s.id + "' has no gold image");
        gold.emplace(s.id, *s.gold);
    }
    return gold;
}

std::size_t gold_rank(const Ranking& ranking, const GoldMap& gold) {
    auto it = gold.find(ranking.sample_id);
    if (it == gold.end()) throw InputError("no gold image for sample '" + ranking.sample_id + "'");
    auto pos = std::find(ranking.images.begin(), ranking.images.end(), it->second);
    if (pos == ranking.images.end())
        throw InputError("gold image '" + it->second + "' missing from ranking of '" + ranking.sample_id + "'");
    return static_cast<std::size_t>(pos - ranking.images.begin()) + 1;
}

double accuracy(std::span<const Ranking> rankings, const GoldMap& gold) {
    if (rankings.empty()) throw InputError("accuracy of an empty result set");
    std::size_t hits = 0;
    for (const auto& r : rankings) hits += gold_rank(r, gold) == 1 ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double mrr(std::span<const Ranking> rankings, const GoldMap& gold) {
    if (rankings.empty()) throw InputError("MRR of an empty result set");
    double sum = 0.0;
    for (const auto& r : rankings) sum += 1.0 / static_cast<double>(gold_rank(r, gold));
    return sum / static_cast<double>(rankings.size());
}

std::vector<std::string> order_by_score(const SampleScores& scores) {
    std::vector<std::size_t> idx(scores.rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores.rows[a].score > scores.rows[b].score; });
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(scores.rows[i].image);
    return out;
}

std::vector<std::string> heuristic_select(const SampleScores& clip, const RetrievalScores* wiki, double hi,
                                          double lo) {
    auto order = order_by_score(clip);
    if (!wiki) return order;
    if (wiki->scores.size() != clip.rows.size())
        throw InputError("sample '" + clip.sample_id + "': retrieval and classifier scores differ in length");
    std::size_t above = 0, pick = 0;
    for (std::size_t i = 0; i < wiki->scores.size(); ++i) {
        if (wiki->scores[i] > hi) {
            ++above;
            pick = i;
        }
    }
    if (above != 1) return order;
    for (std::size_t i = 0; i < wiki->scores.size(); ++i)
        if (i != pick && !(wiki->scores[i] < lo)) return order;
    const auto& chosen = clip.rows[pick].image;
    std::stable_partition(order.begin(), order.end(), [&](const std::string& id) { return id == chosen; });
    return order;
}

std::vector<AblationConfig> ablation_presets() {
    return {
        {"original", true, true, true, true},
        {"no_penalties", false, true, true, true},
        {"no_ltr", true, false, true, true},
        {"no_expansion", true, true, false, true},
        {"no_wikipedia", true, true, true, false},
        {"clip_only", false, false, false, false},
    };
}

AblationConfig ablation_preset(std::string_view name) {
    for (auto& c : ablation_presets())
        if (c.name == name) return c;
    throw InputError("unknown ablation config '" + std::string(name) + "'");
}

std::string format_report_tsv(std::span<const ReportRow> rows) {
    std::string out = "config\tlanguage\tn_samples\taccuracy\tmrr\tmode\n";
    for (const auto& r : rows) {
        out += r.config + '\t' + r.language + '\t' + std::to_string(r.n_samples) + '\t' + fixed(r.accuracy) +
               '\t' + fixed(r.mrr) + '\t' + r.mode + '\n';
    }
    return out;
}

std::string format_report_text(std::span<const ReportRow> rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %-5s %8s %8s %8s  %s\n", "config", "lang", "samples", "ACC", "MRR",
                  "mode");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-14s %-5s %8zu %8.2f %8.2f  %s\n", r.config.c_str(), r.language.c_str(),
                      r.n_samples, 100.0 * r.accuracy, 100.0 * r.mrr, r.mode.c_str());
        out += line;
    }
    return out;
}

void save_rankings(const std::filesystem::path& path, std::span<const Ranking> rankings) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& r : rankings) {
        nlohmann::ordered_json j;
        j["sample"] = r.sample_id;
        j["config"] = r.config;
        j["ranking"] = r.images;
        out << j.dump() << '\n';
    }
}

std::vector<Ranking> load_rankings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<Ranking> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.at("sample").get<std::string>(), j.at("ranking").get<std::vector<std::string>>(),
                           j.value("config", std::string{})});
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace vwsd
