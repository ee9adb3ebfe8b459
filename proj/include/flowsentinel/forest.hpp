#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowsentinel/dataset.hpp"
#include "flowsentinel/rng.hpp"

namespace flowsentinel {

/// Row-major float matrix view.
struct MatrixView {
    std::span<const float> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// One CART node. Leaves have left == right == -1. For splits, rows with
/// x[feature] <= threshold go left; impurity_decrease is the weighted
/// variance reduction (SSE_parent - SSE_left - SSE_right) / N_tree.
struct TreeNode {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t feature = 0;
    double threshold = 0.0;
    double value = 0.0;  // mean target of the node's rows
    double impurity_decrease = 0.0;
    std::size_t n_samples = 0;

    bool is_leaf() const noexcept { return left < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const float> row) const;
    std::size_t depth() const;
    std::size_t split_count() const;
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 5;
    std::size_t features_per_split = 0;  // 0 -> ceil(sqrt(d))
    bool bootstrap = true;
    std::size_t max_samples = 0;  // bootstrap draw size; 0 -> all rows
    std::uint64_t seed = 0;

    /// Throws InvalidConfig. Returns the resolved features_per_split.
    std::size_t resolve_features(std::size_t d) const;
};

/// Greedy variance-reduction CART on the listed rows (duplicates allowed;
/// empty means all rows). Each node draws a fresh random feature subset.
/// Throws EmptyInput.
RegressionTree fit_tree(const MatrixView& X, std::span<const double> y, const ForestConfig& config, Rng& rng,
                        std::span<const std::size_t> rows = {});

struct Forest {
    std::vector<RegressionTree> trees;
    std::size_t n_features = 0;

    double predict(std::span<const float> row) const;
};

/// Tree t is fitted with Rng(config.seed).substream(t): bootstrap draws
/// first, then split sampling. Trees are fitted in parallel; the result
/// matches sequential fitting.
Forest fit_forest(const MatrixView& X, std::span<const double> y, const ForestConfig& config);

struct ImportanceReport {
    /// (feature, importance), descending; ties broken by name.
    std::vector<std::pair<std::string, double>> entries;
    /// No tree made a split; all importances are 0.
    bool degenerate = false;

    double importance(std::string_view feature) const;
};

/// Per-feature sum of impurity_decrease over all split nodes, averaged over
/// trees and normalized to sum to 1.
ImportanceReport compute_importances(const Forest& forest, const std::vector<std::string>& feature_names);

/// First k names of the report. Throws KTooLarge; k = 0 is InvalidConfig.
std::vector<std::string> select_top_k(const ImportanceReport& report, std::size_t k);

/// "feature,importance" CSV.
void write_importance_csv(const ImportanceReport& report, const std::filesystem::path& path);

/// Fits a forest on all columns of `data` with the class index as the
/// regression target.
ImportanceReport rank_features(const FlowDataset& data, const ForestConfig& config);

}  // namespace flowsentinel
