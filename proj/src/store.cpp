#include "vwsd/store.hpp"

#include "vwsd/error.hpp"
#include "vwsd/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

namespace vwsd {

namespace {

constexpr char kMagic[4] = {'V', 'W', 'E', 'M'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

EmbeddingStore parse_binary(const std::string& bytes, const std::filesystem::path& path) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 12 || std::memcmp(p, kMagic, 4) != 0)
        throw InputError(path.string() + ": not a binary embedding file (bad magic)");
    const std::uint32_t dim = get_u32(p + 4);
    const std::uint32_t count = get_u32(p + 8);
    if (dim == 0) throw InputError(path.string() + ": header declares dim 0");
    EmbeddingStore store(dim);
    std::vector<double> v(dim);
    std::size_t pos = 12;
    for (std::uint32_t r = 0; r < count; ++r) {
        if (pos + 4 > n) throw InputError(path.string() + ": truncated at record " + std::to_string(r));
        const std::uint32_t len = get_u32(p + pos);
        pos += 4;
        if (pos + len + std::size_t{4} * dim > n)
            throw InputError(path.string() + ": truncated at record " + std::to_string(r));
        std::string id(bytes.data() + pos, len);
        pos += len;
        for (std::uint32_t k = 0; k < dim; ++k) {
            v[k] = std::bit_cast<float>(get_u32(p + pos));
            pos += 4;
        }
        store.add(std::move(id), v);
    }
    if (pos != n) throw InputError(path.string() + ": trailing bytes after last record");
    return store;
}

EmbeddingStore parse_tsv(const std::string& text, const std::filesystem::path& path) {
    EmbeddingStore store;
    std::istringstream in(text);
    std::string line;
    std::vector<double> v;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": missing TAB after id");
        std::string id = line.substr(0, tab);
        v.clear();
        const char* cur = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        while (cur < end) {
            while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
            if (cur == end) break;
            double x = 0.0;
            auto [next, ec] = std::from_chars(cur, end, x);
            if (ec != std::errc())
                throw InputError(path.string() + ":" + std::to_string(line_no) +
                                 ": unparsable component for id '" + id + "'");
            v.push_back(x);
            cur = next;
        }
        store.add(std::move(id), v);
    }
    return store;
}

} // namespace

EmbeddingFormat parse_embedding_format(std::string_view name) {
    if (name == "binary" || name == "bin") return EmbeddingFormat::binary;
    if (name == "tsv") return EmbeddingFormat::tsv;
    throw InputError("unknown embedding format '" + std::string(name) + "'");
}

void normalize(std::span<double> v) {
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw InputError("non-finite vector component");
        sq += x * x;
    }
    if (sq == 0.0) throw InputError("zero vector cannot be normalized");
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double ab = dot(a, b);
    const double aa = dot(a, a);
    const double bb = dot(b, b);
    if (aa == 0.0 || bb == 0.0) throw InputError("cosine of a zero vector is undefined");
    return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

void EmbeddingStore::add(std::string id, std::span<const double> v) {
    if (dim_ == 0) {
        if (v.empty()) throw InputError("empty vector for id '" + id + "'");
        dim_ = v.size();
    }
    if (v.size() != dim_)
        throw InputError("dimension mismatch for id '" + id + "': expected " + std::to_string(dim_) +
                         ", got " + std::to_string(v.size()));
    if (index_.contains(id)) throw InputError("duplicate id '" + id + "'");
    const std::size_t offset = data_.size();
    data_.insert(data_.end(), v.begin(), v.end());
    try {
        normalize(std::span<double>(data_.data() + offset, dim_));
    } catch (const InputError& e) {
        data_.resize(offset);
        throw InputError(std::string(e.what()) + " (id '" + id + "')");
    }
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
}

std::span<const double> EmbeddingStore::at(const std::string& id) const {
    auto v = find(id);
    if (!v) throw InputError("missing embedding for id '" + id + "'");
    return *v;
}

std::optional<std::span<const double>> EmbeddingStore::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(data_.data() + it->second * dim_, dim_);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    const std::string bytes = read_file(path);
    try {
        return format == EmbeddingFormat::binary ? parse_binary(bytes, path) : parse_tsv(bytes, path);
    } catch (const InputError& e) {
        const std::string what = e.what();
        if (what.starts_with(path.string())) throw;
        throw InputError(path.string() + ": " + what);
    }
}

EmbeddingFormat sniff_embedding_format(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char head[4] = {};
    in.read(head, 4);
    return in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0 ? EmbeddingFormat::binary
                                                                  : EmbeddingFormat::tsv;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    return load_embeddings(path, sniff_embedding_format(path));
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store,
                     EmbeddingFormat format) {
    std::string out;
    if (format == EmbeddingFormat::binary) {
        out.append(kMagic, 4);
        put_u32(out, static_cast<std::uint32_t>(store.dim()));
        put_u32(out, static_cast<std::uint32_t>(store.size()));
        for (const auto& id : store.ids()) {
            put_u32(out, static_cast<std::uint32_t>(id.size()));
            out += id;
            for (double x : store.at(id)) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
        }
    } else {
        char buf[32];
        for (const auto& id : store.ids()) {
            out += id;
            out += '\t';
            bool first = true;
            for (double x : store.at(id)) {
                if (!first) out += ' ';
                first = false;
                auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
                out.append(buf, end);
            }
            out += '\n';
        }
    }
    write_file(path, out);
}

void validate_sample(const Sample& sample) {
    if (sample.images.size() != kCandidatesPerSample)
        throw InputError("sample '" + sample.id + "' has " + std::to_string(sample.images.size()) +
                         " images, expected 10");
    std::unordered_set<std::string> seen;
    for (const auto& img : sample.images)
        if (!seen.insert(img).second)
            throw InputError("sample '" + sample.id + "' lists image '" + img + "' twice");
    if (sample.gold && !seen.contains(*sample.gold))
        throw InputError("sample '" + sample.id + "' gold '" + *sample.gold +
                         "' is not among its candidates");
}

int Dataset::card_of_image(const std::string& id) const {
    auto it = image_card.find(id);
    return it == image_card.end() ? 0 : it->second;
}

int Dataset::card_of_word(const std::string& token) const {
    auto it = word_card.find(token);
    return it == word_card.end() ? 0 : it->second;
}

bool Dataset::labeled() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.gold.has_value(); });
}

Dataset make_dataset(std::vector<Sample> samples) {
    Dataset ds;
    std::unordered_set<std::string> ids;
    for (const auto& s : samples) {
        validate_sample(s);
        if (!ids.insert(s.id).second) throw InputError("duplicate sample id '" + s.id + "'");
        for (const auto& img : s.images) ++ds.image_card[img];
        for (auto& tok : tokenize(s.context)) ++ds.word_card[tok];
    }
    ds.samples = std::move(samples);
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<Sample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            Sample s;
            s.id = j.at("id").get<std::string>();
            s.target = j.at("target").get<std::string>();
            s.context = j.at("context").get<std::string>();
            s.images = j.at("images").get<std::vector<std::string>>();
            if (auto g = j.find("gold"); g != j.end() && !g->is_null()) s.gold = g->get<std::string>();
            samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    try {
        return make_dataset(std::move(samples));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::string out;
    for (const auto& s : dataset.samples) {
        nlohmann::ordered_json j;
        j["id"] = s.id;
        j["target"] = s.target;
        j["context"] = s.context;
        j["images"] = s.images;
        if (s.gold) j["gold"] = *s.gold;
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

std::set<std::string> missing_embeddings(const Dataset& dataset, const EmbeddingStore& contexts,
                                         const EmbeddingStore& images) {
    std::set<std::string> missing;
    for (const auto& s : dataset.samples) {
        if (!contexts.contains(s.id)) missing.insert(s.id);
        for (const auto& img : s.images)
            if (!images.contains(img)) missing.insert(img);
    }
    return missing;
}

void require_embeddings(const Dataset& dataset, const EmbeddingStore& contexts,
                        const EmbeddingStore& images) {
    const auto missing = missing_embeddings(dataset, contexts, images);
    if (missing.empty()) return;
    std::string list;
    for (const auto& id : missing) {
        if (!list.empty()) list += ',';
        list += id;
    }
    throw InputError("missing embeddings for " + std::to_string(missing.size()) + " ids: " + list);
}

} // namespace vwsd
