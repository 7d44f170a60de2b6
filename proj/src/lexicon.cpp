#include "vwsd/lexicon.hpp"

#include "vwsd/error.hpp"
#include "vwsd/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace vwsd {

namespace {

bool expands_through(RelationType t) { return t != RelationType::other; }

bool describes_through(RelationType t) {
    return t == RelationType::hypernym || t == RelationType::instance_hypernym;
}

void append_tokens(std::vector<std::string>& out, std::string_view text) {
    auto toks = tokenize(text);
    out.insert(out.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
}

void append_sense_tokens(std::vector<std::string>& out, const Sense& sense, bool with_examples) {
    for (const auto& l : sense.lemmas) append_tokens(out, l);
    for (const auto& d : sense.definitions) append_tokens(out, d);
    if (with_examples)
        for (const auto& e : sense.examples) append_tokens(out, e);
}

std::vector<std::string> unique_tokens(std::string_view text) {
    auto toks = tokenize(text);
    std::vector<std::string> out;
    for (auto& t : toks)
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
    return out;
}

} // namespace

RelationType parse_relation_type(std::string_view name) {
    if (name == "hypernym") return RelationType::hypernym;
    if (name == "instance_hypernym") return RelationType::instance_hypernym;
    if (name == "member_meronym") return RelationType::member_meronym;
    if (name == "substance_meronym") return RelationType::substance_meronym;
    return RelationType::other;
}

std::string normalize_lemma(std::string_view lemma) {
    std::string s = normalize_text(lemma);
    std::replace(s.begin(), s.end(), '_', ' ');
    std::replace(s.begin(), s.end(), '-', ' ');
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

Lexicon::Lexicon(std::vector<Sense> senses) : senses_(std::move(senses)) {
    for (std::size_t i = 0; i < senses_.size(); ++i) {
        const auto& s = senses_[i];
        if (s.lemmas.empty()) throw InputError("sense '" + s.id + "' has no lemmas");
        if (!by_id_.emplace(s.id, i).second) throw InputError("duplicate sense id '" + s.id + "'");
    }
    for (std::size_t i = 0; i < senses_.size(); ++i) {
        auto& rels = senses_[i].relations;
        const auto before = rels.size();
        std::erase_if(rels, [&](const Relation& r) { return !by_id_.contains(r.target); });
        dropped_relations_ += before - rels.size();
        std::unordered_set<std::string> keys;
        for (const auto& l : senses_[i].lemmas) {
            auto key = normalize_lemma(l);
            if (keys.insert(key).second) by_lemma_[key].push_back(i);
        }
    }
}

Lexicon Lexicon::load(const std::vector<std::filesystem::path>& paths) {
    std::vector<Sense> senses;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                Sense s;
                s.id = j.at("id").get<std::string>();
                s.lemmas = j.at("lemmas").get<std::vector<std::string>>();
                s.definitions = j.value("defs", std::vector<std::string>{});
                s.examples = j.value("examples", std::vector<std::string>{});
                if (auto rels = j.find("rels"); rels != j.end()) {
                    for (const auto& r : *rels) {
                        if (!r.is_array() || r.size() != 2)
                            throw InputError("sense '" + s.id + "': relation must be [type, id]");
                        s.relations.push_back(
                            {parse_relation_type(r[0].get<std::string>()), r[1].get<std::string>()});
                    }
                }
                senses.push_back(std::move(s));
            } catch (const nlohmann::json::exception& e) {
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            } catch (const InputError& e) {
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    return Lexicon(std::move(senses));
}

std::vector<const Sense*> Lexicon::lookup(std::string_view target_word) const {
    std::vector<const Sense*> out;
    auto it = by_lemma_.find(normalize_lemma(target_word));
    if (it == by_lemma_.end()) return out;
    for (std::size_t i : it->second) out.push_back(&senses_[i]);
    return out;
}

const Sense* Lexicon::find(const std::string& sense_id) const {
    auto it = by_id_.find(sense_id);
    return it == by_id_.end() ? nullptr : &senses_[it->second];
}

SenseDescription describe(const Lexicon& lexicon, const Sense& sense) {
    SenseDescription d;
    append_sense_tokens(d.tokens, sense, true);
    for (const auto& r : sense.relations) {
        if (!describes_through(r.type)) continue;
        if (const Sense* linked = lexicon.find(r.target)) append_sense_tokens(d.tokens, *linked, false);
    }
    return d;
}

double exact_match_score(const SenseDescription& description, std::string_view context_word) {
    if (description.tokens.empty()) return 0.0;
    std::size_t matched = 0;
    for (const auto& w : unique_tokens(context_word))
        matched += static_cast<std::size_t>(
            std::count(description.tokens.begin(), description.tokens.end(), w));
    return static_cast<double>(matched) / static_cast<double>(description.tokens.size());
}

double similarity_match_score(const SenseDescription& description, std::string_view context_word,
                              const EmbeddingStore& vectors) {
    std::vector<std::span<const double>> ctx;
    for (const auto& w : unique_tokens(context_word))
        if (auto v = vectors.find(w)) ctx.push_back(*v);
    if (ctx.empty()) return 0.0;
    bool any = false;
    double best = -1.0;
    for (const auto& tok : description.tokens) {
        auto v = vectors.find(tok);
        if (!v) continue;
        for (const auto& c : ctx) {
            best = std::max(best, cosine(c, *v));
            any = true;
        }
    }
    return any ? best : 0.0;
}

MatchPolicy parse_match_policy(std::string_view name) {
    if (name == "exact_only" || name == "exact") return MatchPolicy::exact_only;
    if (name == "exact_then_similarity" || name == "similarity") return MatchPolicy::exact_then_similarity;
    throw InputError("unknown match policy '" + std::string(name) + "'");
}

std::string_view to_string(MatchPolicy policy) {
    return policy == MatchPolicy::exact_only ? "exact_only" : "exact_then_similarity";
}

MatchPolicy default_policy(std::string_view language) {
    return language == "en" ? MatchPolicy::exact_only : MatchPolicy::exact_then_similarity;
}

std::optional<SenseMatch> select_sense(const Lexicon& lexicon, std::string_view target_word,
                                       std::string_view context_word, MatchPolicy policy,
                                       const EmbeddingStore* vectors) {
    const auto senses = lexicon.lookup(target_word);
    if (senses.empty()) return std::nullopt;

    std::vector<SenseDescription> descriptions;
    descriptions.reserve(senses.size());
    for (const Sense* s : senses) descriptions.push_back(describe(lexicon, *s));

    auto argmax = [&](auto&& score, MatchMethod method) -> std::optional<SenseMatch> {
        std::optional<SenseMatch> best;
        for (std::size_t i = 0; i < senses.size(); ++i) {
            const double v = score(descriptions[i]);
            if (v > 0.0 && (!best || v > best->score)) best = SenseMatch{senses[i], v, method};
        }
        return best;
    };

    if (auto exact = argmax([&](const SenseDescription& d) { return exact_match_score(d, context_word); },
                            MatchMethod::exact))
        return exact;
    if (policy == MatchPolicy::exact_then_similarity && vectors)
        return argmax(
            [&](const SenseDescription& d) { return similarity_match_score(d, context_word, *vectors); },
            MatchMethod::similarity);
    return std::nullopt;
}

std::string expand_context(std::string_view context, const Sense& sense, const Lexicon& lexicon) {
    std::string out(context);
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while (pos <= context.size()) {
        auto comma = context.find(',', pos);
        if (comma == std::string_view::npos) comma = context.size();
        seen.insert(normalize_lemma(context.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    auto add = [&](const Sense& s) {
        for (const auto& l : s.lemmas) {
            auto name = normalize_lemma(l);
            if (name.empty() || !seen.insert(name).second) continue;
            out += ", ";
            out += name;
        }
    };
    add(sense);
    for (const auto& r : sense.relations) {
        if (!expands_through(r.type)) continue;
        if (const Sense* linked = lexicon.find(r.target)) add(*linked);
    }
    return out;
}

Expansion expand_sample(const Lexicon& lexicon, const Sample& sample, MatchPolicy policy,
                        const EmbeddingStore* vectors) {
    Expansion e{sample.id, sample.context, std::nullopt};
    e.match = select_sense(lexicon, sample.target, context_word(sample.target, sample.context), policy,
                           vectors);
    if (e.match) e.text = expand_context(sample.context, *e.match->sense, lexicon);
    return e;
}

} // namespace vwsd
