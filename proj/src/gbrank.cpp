#include "vwsd/gbrank.hpp"

#include "vwsd/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <stdexcept>

namespace vwsd::gbrank {

namespace {

constexpr std::string_view kFormat = "vwsd-rank-model";
constexpr int kVersion = 1;
constexpr double kMinGain = 1e-12;

/// Sorted random subset of {0..n-1} of size k (partial Fisher-Yates).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (k < n) {
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = kMinGain;
    std::size_t left_count = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, const std::vector<GradHess>& gh, const std::vector<std::size_t>& features,
                const TrainConfig& config)
        : data_(data), gh_(gh), features_(features), config_(config) {}

    RegressionTree build(std::vector<std::size_t> rows) {
        nodes_.clear();
        grow(rows, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    int grow(std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double g = 0.0, h = 0.0;
        for (auto r : rows) {
            g += gh_[r].grad;
            h += gh_[r].hess;
        }
        const Split split = depth < config_.max_depth ? best_split(rows, g, h) : Split{};
        if (split.feature < 0) {
            nodes_[id].value = -g / (h + config_.lambda);
            return id;
        }
        std::vector<std::size_t> left, right;
        left.reserve(split.left_count);
        right.reserve(rows.size() - split.left_count);
        for (auto r : rows)
            (data_.value(r, static_cast<std::size_t>(split.feature)) < split.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int rt = grow(right, depth + 1);
        auto& node = nodes_[id];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = rt;
        return id;
    }

    Split best_split(std::vector<std::size_t>& rows, double g, double h) const {
        Split best;
        const std::size_t n = rows.size();
        const auto min_leaf = static_cast<std::size_t>(std::max(1, config_.min_samples_leaf));
        if (n < 2 * min_leaf) return best;
        const double lambda = config_.lambda;
        const double parent = g * g / (h + lambda);
        for (auto f : features_) {
            std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
                const double va = data_.value(a, f), vb = data_.value(b, f);
                return va != vb ? va < vb : a < b;
            });
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                gl += gh_[rows[i]].grad;
                hl += gh_[rows[i]].hess;
                const double v = data_.value(rows[i], f);
                const double next = data_.value(rows[i + 1], f);
                if (!(v < next)) continue;
                const std::size_t left_count = i + 1;
                if (left_count < min_leaf || n - left_count < min_leaf) continue;
                const double gr = g - gl, hr = h - hl;
                const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if (gain > best.gain) {
                    double threshold = v + (next - v) / 2.0;
                    if (!(v < threshold)) threshold = next;
                    best = {static_cast<int>(f), threshold, gain, left_count};
                }
            }
        }
        return best;
    }

    const TrainingSet& data_;
    const std::vector<GradHess>& gh_;
    const std::vector<std::size_t>& features_;
    const TrainConfig& config_;
    std::vector<TreeNode> nodes_;
};

nlohmann::ordered_json config_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["n_trees"] = c.n_trees;
    j["max_depth"] = c.max_depth;
    j["learning_rate"] = c.learning_rate;
    j["colsample"] = c.colsample;
    j["subsample"] = c.subsample;
    j["sigmoid_scale"] = c.sigmoid_scale;
    j["lambda"] = c.lambda;
    j["min_samples_leaf"] = c.min_samples_leaf;
    j["seed"] = c.seed;
    return j;
}

} // namespace

void TrainConfig::validate() const {
    if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(colsample > 0.0 && colsample <= 1.0)) throw std::invalid_argument("colsample must be in (0, 1]");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw std::invalid_argument("subsample must be in (0, 1]");
    if (!(sigmoid_scale > 0.0)) throw std::invalid_argument("sigmoid_scale must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
}

void TrainingSet::add_group(std::span<const std::vector<double>> rows, std::span<const int> labels) {
    if (rows.size() != labels.size())
        throw InputError("group has " + std::to_string(rows.size()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
    for (const auto& r : rows) {
        if (r.size() != feature_count_)
            throw InputError("feature count mismatch: expected " + std::to_string(feature_count_) + ", got " +
                             std::to_string(r.size()));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        values_.insert(values_.end(), rows[i].begin(), rows[i].end());
        labels_.push_back(labels[i]);
    }
    offsets_.push_back(labels_.size());
}

std::vector<GradHess> lambda_gradients(std::span<const double> scores, std::span<const int> labels,
                                       double sigmoid_scale) {
    const std::size_t n = scores.size();
    std::vector<GradHess> out(n);
    const double sigma = sigmoid_scale;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (labels[i] <= labels[j]) continue;
            const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[i] - scores[j])));
            const double lambda = sigma * rho;
            const double hess = sigma * sigma * rho * (1.0 - rho);
            out[i].grad -= lambda;
            out[j].grad += lambda;
            out[i].hess += hess;
            out[j].hess += hess;
        }
    }
    return out;
}

double pairwise_loss(std::span<const double> scores, std::span<const int> labels, double sigmoid_scale) {
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[i] <= labels[j]) continue;
            const double z = -sigmoid_scale * (scores[i] - scores[j]);
            // log(1 + e^z) without overflow
            loss += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        }
    }
    return loss;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InputError("tree has no nodes");
    const int n = static_cast<int>(nodes_.size());
    for (int i = 0; i < n; ++i) {
        const auto& node = nodes_[static_cast<std::size_t>(i)];
        if (node.leaf()) continue;
        // children come after their parent, which also rules out cycles
        if (node.left <= i || node.left >= n || node.right <= i || node.right >= n)
            throw InputError("tree node references an invalid child");
        if (!std::isfinite(node.threshold)) throw InputError("tree threshold is not finite");
    }
}

double RegressionTree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf()) {
        const auto& node = nodes_[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                                                   : node.right);
    }
    return nodes_[i].value;
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int max_depth = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& node = nodes_[i];
        if (node.leaf()) {
            max_depth = std::max(max_depth, d[i]);
            continue;
        }
        d[static_cast<std::size_t>(node.left)] = d[i] + 1;
        d[static_cast<std::size_t>(node.right)] = d[i] + 1;
    }
    return max_depth;
}

double RankModel::predict(std::span<const double> row) const {
    if (row.size() != feature_count)
        throw InputError("feature count mismatch: model expects " + std::to_string(feature_count) + ", got " +
                         std::to_string(row.size()));
    double s = 0.0;
    for (const auto& t : trees) s += learning_rate * t.predict(row);
    return s;
}

std::vector<double> RankModel::predict_group(std::span<const std::vector<double>> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
}

RankModel fit(const TrainingSet& data, const TrainConfig& config, const TreeCallback& on_tree) {
    config.validate();
    if (data.group_count() == 0) throw InputError("training set has no labeled groups");

    RankModel model;
    model.learning_rate = config.learning_rate;
    model.feature_count = data.feature_count();
    model.config = config;

    const std::size_t n_groups = data.group_count();
    const std::size_t n_features = data.feature_count();
    const auto groups_per_tree = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(n_groups))));
    const auto features_per_tree = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(config.colsample * static_cast<double>(n_features) + 1e-9)));

    std::mt19937_64 rng(config.seed);
    std::vector<double> scores(data.row_count(), 0.0);
    std::vector<GradHess> gh(data.row_count());
    std::vector<int> labels(data.row_count());
    for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = data.label(r);

    for (int t = 0; t < config.n_trees; ++t) {
        const auto groups = sample_indices(n_groups, std::min(groups_per_tree, n_groups), rng);
        const auto features = sample_indices(n_features, std::min(features_per_tree, n_features), rng);

        std::vector<std::size_t> rows;
        for (auto g : groups) {
            const auto b = data.group_begin(g), e = data.group_end(g);
            const auto grads = lambda_gradients(std::span(scores).subspan(b, e - b),
                                                std::span(labels).subspan(b, e - b), config.sigmoid_scale);
            for (std::size_t r = b; r < e; ++r) {
                gh[r] = grads[r - b];
                rows.push_back(r);
            }
        }
        TreeBuilder builder(data, gh, features, config);
        model.trees.push_back(builder.build(std::move(rows)));
        const auto& tree = model.trees.back();
        for (std::size_t r = 0; r < scores.size(); ++r) scores[r] += config.learning_rate * tree.predict(data.row(r));
        if (on_tree) on_tree(model);
    }
    return model;
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

std::string to_json(const RankModel& model) {
    nlohmann::ordered_json head;
    head["format"] = kFormat;
    head["version"] = kVersion;
    head["feature_count"] = model.feature_count;
    head["learning_rate"] = model.learning_rate;
    head["config"] = config_json(model.config);

    // One tree per line keeps diffs readable.
    std::string out = "{\n";
    for (auto it = head.begin(); it != head.end(); ++it) {
        out += "  " + nlohmann::json(it.key()).dump() + ": " + it.value().dump() + ",\n";
    }
    out += "  \"trees\": [";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : model.trees[t].nodes())
            nodes.push_back(nlohmann::json::array({n.feature, n.threshold, n.left, n.right, n.value}));
        out += t == 0 ? "\n    " : ",\n    ";
        out += nodes.dump();
    }
    out += model.trees.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

RankModel from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format").get<std::string>() != kFormat) throw InputError("not a rank model file");
        if (j.at("version").get<int>() != kVersion)
            throw InputError("unsupported model version " + std::to_string(j.at("version").get<int>()));
        RankModel m;
        m.feature_count = j.at("feature_count").get<std::size_t>();
        m.learning_rate = j.at("learning_rate").get<double>();
        const auto& c = j.at("config");
        m.config.n_trees = c.at("n_trees").get<int>();
        m.config.max_depth = c.at("max_depth").get<int>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.colsample = c.at("colsample").get<double>();
        m.config.subsample = c.at("subsample").get<double>();
        m.config.sigmoid_scale = c.at("sigmoid_scale").get<double>();
        m.config.lambda = c.at("lambda").get<double>();
        m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& tree : j.at("trees")) {
            std::vector<TreeNode> nodes;
            for (const auto& n : tree) {
                if (!n.is_array() || n.size() != 5) throw InputError("tree node must have 5 fields");
                TreeNode node{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                              n[4].get<double>()};
                if (!node.leaf() && static_cast<std::size_t>(node.feature) >= m.feature_count)
                    throw InputError("tree node uses feature " + std::to_string(node.feature) +
                                     " beyond feature_count");
                nodes.push_back(node);
            }
            m.trees.emplace_back(std::move(nodes));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const RankModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << to_json(model);
}

RankModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return from_json(text);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

} // namespace vwsd::gbrank
