#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vwsd::gbrank {

struct TrainConfig {
    int n_trees = 110;
    int max_depth = 6;
    double learning_rate = 0.1;
    double colsample = 0.9;
    double subsample = 0.75;
    double sigmoid_scale = 1.0;
    double lambda = 1.0;  // L2 penalty on leaf values
    int min_samples_leaf = 1;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument for out-of-range values.
    void validate() const;
};

/// Query groups with row-major feature storage.
class TrainingSet {
public:
    explicit TrainingSet(std::size_t feature_count) : feature_count_(feature_count) {}

    /// Appends one group. Throws InputError if a row's width differs from
    /// feature_count or labels do not match the rows.
    void add_group(std::span<const std::vector<double>> rows, std::span<const int> labels);

    std::size_t feature_count() const { return feature_count_; }
    std::size_t group_count() const { return offsets_.size() - 1; }
    std::size_t row_count() const { return labels_.size(); }
    std::size_t group_begin(std::size_t g) const { return offsets_[g]; }
    std::size_t group_end(std::size_t g) const { return offsets_[g + 1]; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * feature_count_, feature_count_};
    }
    double value(std::size_t r, std::size_t f) const { return values_[r * feature_count_ + f]; }
    int label(std::size_t r) const { return labels_[r]; }

private:
    std::size_t feature_count_;
    std::vector<double> values_;
    std::vector<int> labels_;
    std::vector<std::size_t> offsets_{0};
};

struct GradHess {
    double grad = 0.0;
    double hess = 0.0;
};

/// RankNet pairwise gradients of
///   loss = sum over pairs (i, j) with label_i > label_j of
///          log(1 + exp(-sigma * (s_i - s_j)))
/// with respect to each score, plus the diagonal of its Hessian.
std::vector<GradHess> lambda_gradients(std::span<const double> scores, std::span<const int> labels,
                                       double sigmoid_scale = 1.0);

/// The pairwise loss above for one group.
double pairwise_loss(std::span<const double> scores, std::span<const int> labels,
                     double sigmoid_scale = 1.0);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool leaf() const { return feature < 0; }
};

/// Rows with x[feature] < threshold go left. Node 0 is the root.
class RegressionTree {
public:
    RegressionTree() : nodes_{TreeNode{}} {}
    explicit RegressionTree(std::vector<TreeNode> nodes);

    double predict(std::span<const double> row) const;
    int depth() const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    std::vector<TreeNode> nodes_;
};

struct RankModel {
    std::vector<RegressionTree> trees;
    double learning_rate = 0.1;
    std::size_t feature_count = 0;
    TrainConfig config;

    /// sum of learning_rate * tree(row).
    double predict(std::span<const double> row) const;
    std::vector<double> predict_group(std::span<const std::vector<double>> rows) const;
};

/// Called after each tree with the model built so far.
using TreeCallback = std::function<void(const RankModel&)>;

/// LambdaMART: each tree fits Newton steps on the pairwise gradients of the
/// current ensemble. Each tree sees a random subset of groups and of
/// features; training is deterministic for a given seed.
RankModel fit(const TrainingSet& data, const TrainConfig& config, const TreeCallback& on_tree = {});

/// Candidate indices by descending score; ties keep input order.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// Versioned JSON; trees are arrays of [feature, threshold, left, right,
/// value] nodes.
std::string to_json(const RankModel& model);
RankModel from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const RankModel& model);
RankModel load_model(const std::filesystem::path& path);

} // namespace vwsd::gbrank
