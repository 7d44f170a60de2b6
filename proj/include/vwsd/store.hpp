#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vwsd {

/// On-disk layout of an embedding file.
///
/// binary: "VWEM" magic, u32 dim, u32 count, then per record a u32 id length,
///         the UTF-8 id bytes and dim float32 components. All little-endian.
/// tsv:    one record per line, `id<TAB>v1 v2 ... vdim`.
enum class EmbeddingFormat { binary, tsv };

EmbeddingFormat parse_embedding_format(std::string_view name);

/// Scales v to unit L2 norm in place. Throws InputError for zero or
/// non-finite vectors.
void normalize(std::span<double> v);

/// Cosine similarity, clamped to [-1, 1]. Throws InputError on a dimension
/// mismatch or a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// Dot product of equally sized vectors. Equals cosine for unit vectors.
double dot(std::span<const double> a, std::span<const double> b);

/// Id -> unit vector map of fixed dimensionality. Insertion order is kept
/// so that serialization is deterministic.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

    /// Normalizes and stores v. The first insertion fixes dim when the
    /// store was default-constructed.
    void add(std::string id, std::span<const double> v);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    bool contains(const std::string& id) const { return index_.contains(id); }

    /// Throws InputError naming the id when absent.
    std::span<const double> at(const std::string& id) const;
    std::optional<std::span<const double>> find(const std::string& id) const;

    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store,
                     EmbeddingFormat format);

/// Guesses the format from the leading magic bytes.
EmbeddingFormat sniff_embedding_format(const std::filesystem::path& path);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

inline constexpr std::size_t kCandidatesPerSample = 10;

struct Sample {
    std::string id;
    std::string target;
    std::string context;
    std::vector<std::string> images;
    std::optional<std::string> gold;
};

/// Throws InputError unless the sample has exactly ten distinct candidates
/// and any gold id is one of them.
void validate_sample(const Sample& sample);

struct Dataset {
    std::vector<Sample> samples;
    /// Number of samples each image appears in.
    std::unordered_map<std::string, int> image_card;
    /// Token occurrences over all contexts.
    std::unordered_map<std::string, int> word_card;

    int card_of_image(const std::string& id) const;
    int card_of_word(const std::string& token) const;
    bool labeled() const;
};

/// Validates the samples and derives the card statistics.
Dataset make_dataset(std::vector<Sample> samples);

/// JSONL: {"id", "target", "context", "images": [10 ids], "gold": optional}.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

/// Ids referenced by the dataset that lack an embedding. Context vectors are
/// keyed by sample id.
std::set<std::string> missing_embeddings(const Dataset& dataset, const EmbeddingStore& contexts,
                                         const EmbeddingStore& images);

/// Throws InputError listing every missing id if the set is nonempty.
void require_embeddings(const Dataset& dataset, const EmbeddingStore& contexts,
                        const EmbeddingStore& images);

} // namespace vwsd
