#pragma once

#include "vwsd/store.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vwsd {

enum class RelationType { hypernym, instance_hypernym, member_meronym, substance_meronym, other };

RelationType parse_relation_type(std::string_view name);

struct Relation {
    RelationType type = RelationType::other;
    std::string target;
};

struct Sense {
    std::string id;
    std::vector<std::string> lemmas;
    std::vector<std::string> definitions;
    std::vector<std::string> examples;
    std::vector<Relation> relations;
};

/// Display form of a lemma: normalized, lowercase, with underscores and
/// hyphens turned into single spaces ("Lily-of-the-valley_tree" ->
/// "lily of the valley tree").
std::string normalize_lemma(std::string_view lemma);

/// Sense inventory merged from one or more databases. Sense order is the
/// order of the input files, then line order.
class Lexicon {
public:
    Lexicon() = default;

    /// Takes ownership of the senses; relations whose target is unknown are
    /// dropped and counted. Duplicate sense ids are rejected.
    explicit Lexicon(std::vector<Sense> senses);

    /// JSONL: {"id", "lemmas": [...], "defs": [...], "examples": [...],
    ///         "rels": [["hypernym", "id"], ...]}
    static Lexicon load(const std::vector<std::filesystem::path>& paths);

    /// Senses carrying the normalized target word as a lemma, in sense order.
    std::vector<const Sense*> lookup(std::string_view target_word) const;
    const Sense* find(const std::string& sense_id) const;

    std::size_t size() const { return senses_.size(); }
    std::size_t dropped_relations() const { return dropped_relations_; }
    const std::vector<Sense>& senses() const { return senses_; }

private:
    std::vector<Sense> senses_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
    std::size_t dropped_relations_ = 0;
};

struct SenseDescription {
    std::vector<std::string> tokens;
};

/// Tokens of the sense's lemmas, definitions and examples, followed by the
/// lemmas and definitions of its direct hypernyms and instance hypernyms.
SenseDescription describe(const Lexicon& lexicon, const Sense& sense);

/// Occurrences of the context word's tokens in the description divided by
/// the description length. Repeated context tokens count once, so the
/// result stays in [0, 1].
double exact_match_score(const SenseDescription& description, std::string_view context_word);

/// Highest cosine between a context token and a description token, over
/// tokens that have vectors. 0 when either side has none.
double similarity_match_score(const SenseDescription& description, std::string_view context_word,
                              const EmbeddingStore& vectors);

enum class MatchPolicy { exact_only, exact_then_similarity };

MatchPolicy parse_match_policy(std::string_view name);
std::string_view to_string(MatchPolicy policy);

/// English uses exact matching only; other languages fall back to
/// similarity matching.
MatchPolicy default_policy(std::string_view language);

enum class MatchMethod { exact, similarity };

struct SenseMatch {
    const Sense* sense = nullptr;
    double score = 0.0;
    MatchMethod method = MatchMethod::exact;
};

/// Best-matching sense of the target word for the context word. Ties go to
/// the earlier sense. Returns nothing when no sense scores above zero under
/// the last method tried. `vectors` may be null, which disables the
/// similarity fallback.
std::optional<SenseMatch> select_sense(const Lexicon& lexicon, std::string_view target_word,
                                       std::string_view context_word, MatchPolicy policy,
                                       const EmbeddingStore* vectors);

/// Appends to the context the lemmas of the sense and of senses linked by
/// hypernym, instance hypernym, member meronym and substance meronym
/// relations, comma separated. Names equal (case-insensitively) to an item
/// already in the list are skipped.
std::string expand_context(std::string_view context, const Sense& sense, const Lexicon& lexicon);

struct Expansion {
    std::string sample_id;
    std::string text;
    std::optional<SenseMatch> match;
};

/// Sense selection plus expansion for one sample; returns the raw context
/// when no sense is selected.
Expansion expand_sample(const Lexicon& lexicon, const Sample& sample, MatchPolicy policy,
                        const EmbeddingStore* vectors);

} // namespace vwsd
