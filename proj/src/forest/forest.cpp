#include "flowsentinel/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "flowsentinel/error.hpp"
#include "flowsentinel/parallel.hpp"

namespace flowsentinel {

namespace {

struct Candidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;  // SSE reduction
    std::size_t n_left = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const MatrixView& X, std::span<const double> y, const ForestConfig& config, std::size_t mtry, Rng& rng)
        : X_(X), y_(y), config_(config), mtry_(mtry), rng_(rng), features_(X.cols) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    RegressionTree build(std::vector<std::size_t> rows) {
        total_ = static_cast<double>(rows.size());
        rows_ = std::move(rows);
        grow(0, rows_.size(), 0);
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t n = end - begin;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += y_[rows_[i]];
        const double mean = sum / static_cast<double>(n);
        double sse = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double d = y_[rows_[i]] - mean;
            sse += d * d;
        }

        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[id].value = mean;
        tree_.nodes[id].n_samples = n;

        if (depth >= config_.max_depth || n < 2 * config_.min_samples_leaf || sse <= 0.0) return id;
        const Candidate best = best_split(begin, end, sse);
        if (!best.found) return id;

        const auto mid_it = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
                                               return static_cast<double>(X_(r, best.feature)) <= best.threshold;
                                           });
        const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        tree_.nodes[id].impurity_decrease = best.gain / total_;
        const auto left = grow(begin, mid, depth + 1);
        const auto right = grow(mid, end, depth + 1);
        tree_.nodes[id].left = left;
        tree_.nodes[id].right = right;
        return id;
    }

    Candidate best_split(std::size_t begin, std::size_t end, double parent_sse) {
        // Partial Fisher-Yates: the first mtry_ entries become this node's subset.
        for (std::size_t i = 0; i < mtry_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.below(features_.size() - i));
            std::swap(features_[i], features_[j]);
        }
        std::vector<std::size_t> subset(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        std::sort(subset.begin(), subset.end());

        const std::size_t n = end - begin;
        const std::size_t leaf = std::max<std::size_t>(1, config_.min_samples_leaf);
        Candidate best;
        scratch_.resize(n);
        for (auto f : subset) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = rows_[begin + i];
                scratch_[i] = {X_(r, f), y_[r]};
            }
            std::sort(scratch_.begin(), scratch_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double total_sum = 0.0;
            for (const auto& [x, t] : scratch_) total_sum += t;

            // SSE_left + SSE_right = const - (S_l^2 / n_l + S_r^2 / n_r), so
            // maximizing the bracket maximizes the reduction.
            double left_sum = 0.0;
            double best_score = -1.0;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += scratch_[i].second;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < leaf) continue;
                if (nr < leaf) break;
                if (!(scratch_[i].first < scratch_[i + 1].first)) continue;
                const double right_sum = total_sum - left_sum;
                const double score =
                    left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(nr);
                if (score > best_score) {
                    best_score = score;
                    best_i = i;
                }
            }
            if (best_score < 0.0) continue;

            const double gain = children_gain(best_i, n, parent_sse);
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.gain = gain;
                best.n_left = best_i + 1;
                const double a = scratch_[best_i].first, b = scratch_[best_i + 1].first;
                best.threshold = a + (b - a) / 2.0;
                if (!(best.threshold < b)) best.threshold = a;
            }
        }
        // Reject splits whose gain is indistinguishable from rounding noise.
        if (best.found && best.gain <= 1e-12 * parent_sse) best.found = false;
        return best;
    }

    /// Two-pass SSE of the children of the sorted scratch buffer at cut i.
    double children_gain(std::size_t i, std::size_t n, double parent_sse) const {
        auto sse = [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) s += scratch_[k].second;
            const double m = s / static_cast<double>(hi - lo);
            double acc = 0.0;
            for (std::size_t k = lo; k < hi; ++k) acc += (scratch_[k].second - m) * (scratch_[k].second - m);
            return acc;
        };
        return std::max(0.0, parent_sse - sse(0, i + 1) - sse(i + 1, n));
    }

    const MatrixView& X_;
    std::span<const double> y_;
    const ForestConfig& config_;
    std::size_t mtry_;
    Rng& rng_;
    std::vector<std::size_t> features_;
    std::vector<std::size_t> rows_;
    std::vector<std::pair<double, double>> scratch_;
    RegressionTree tree_;
    double total_ = 1.0;
};

void check_inputs(const MatrixView& X, std::span<const double> y) {
    if (X.rows == 0 || X.cols == 0) fail(ErrorKind::EmptyInput, "forest: empty feature matrix");
    if (X.values.size() != X.rows * X.cols || y.size() != X.rows)
        fail(ErrorKind::ShapeMismatch, "forest: matrix has " + std::to_string(X.values.size()) + " values for " +
                                           std::to_string(X.rows) + "x" + std::to_string(X.cols) + " and " +
                                           std::to_string(y.size()) + " targets");
}

}  // namespace

double RegressionTree::predict(std::span<const float> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf())
        i = static_cast<std::size_t>(static_cast<double>(row[nodes[i].feature]) <= nodes[i].threshold ? nodes[i].left
                                                                                                       : nodes[i].right);
    return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

std::size_t RegressionTree::split_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

std::size_t ForestConfig::resolve_features(std::size_t d) const {
    if (n_trees == 0 || max_depth == 0 || min_samples_leaf == 0)
        fail(ErrorKind::InvalidConfig, "forest: n_trees, max_depth and min_samples_leaf must be positive");
    const std::size_t mtry =
        features_per_split ? features_per_split : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    if (mtry > d)
        fail(ErrorKind::InvalidConfig, "forest: features_per_split " + std::to_string(mtry) + " exceeds " +
                                           std::to_string(d) + " features");
    return mtry;
}

RegressionTree fit_tree(const MatrixView& X, std::span<const double> y, const ForestConfig& config, Rng& rng,
                        std::span<const std::size_t> rows) {
    check_inputs(X, y);
    const std::size_t mtry = config.resolve_features(X.cols);
    std::vector<std::size_t> idx;
    if (rows.empty()) {
        idx.resize(X.rows);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    } else {
        idx.assign(rows.begin(), rows.end());
        for (auto r : idx)
            if (r >= X.rows) fail(ErrorKind::IndexOutOfRange, "fit_tree: row index out of range");
    }
    TreeBuilder builder(X, y, config, mtry, rng);
    return builder.build(std::move(idx));
}

double Forest::predict(std::span<const float> row) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return s / static_cast<double>(trees.size());
}

Forest fit_forest(const MatrixView& X, std::span<const double> y, const ForestConfig& config) {
    check_inputs(X, y);
    (void)config.resolve_features(X.cols);
    Forest forest;
    forest.n_features = X.cols;
    forest.trees.resize(config.n_trees);
    const Rng root(config.seed);
    const std::size_t draws = config.max_samples ? std::min(config.max_samples, X.rows) : X.rows;
    parallel_for(config.n_trees, [&](std::size_t t) {
        Rng rng = root.substream(t);
        std::vector<std::size_t> rows;
        if (config.bootstrap) {
            rows.resize(draws);
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(X.rows));
        }
        forest.trees[t] = fit_tree(X, y, config, rng, rows);
    });
    return forest;
}

double ImportanceReport::importance(std::string_view feature) const {
    for (const auto& [name, value] : entries)
        if (name == feature) return value;
    fail(ErrorKind::MissingColumn, "no importance for feature '" + std::string(feature) + "'");
}

ImportanceReport compute_importances(const Forest& forest, const std::vector<std::string>& feature_names) {
    if (forest.trees.empty()) fail(ErrorKind::EmptyInput, "compute_importances: empty forest");
    if (feature_names.size() != forest.n_features)
        fail(ErrorKind::ShapeMismatch, "compute_importances: " + std::to_string(feature_names.size()) + " names for " +
                                           std::to_string(forest.n_features) + " features");
    std::vector<double> sums(forest.n_features, 0.0);
    for (const auto& tree : forest.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf()) sums[node.feature] += node.impurity_decrease;
    for (auto& s : sums) s /= static_cast<double>(forest.trees.size());
    const double total = std::accumulate(sums.begin(), sums.end(), 0.0);

    ImportanceReport report;
    report.degenerate = !(total > 0.0);
    for (std::size_t f = 0; f < sums.size(); ++f)
        report.entries.emplace_back(feature_names[f], report.degenerate ? 0.0 : sums[f] / total);
    std::sort(report.entries.begin(), report.entries.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return report;
}

std::vector<std::string> select_top_k(const ImportanceReport& report, std::size_t k) {
    if (k == 0) fail(ErrorKind::InvalidConfig, "top-k must be at least 1");
    if (k > report.entries.size())
        fail(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(report.entries.size()) +
                                       " ranked features");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back(report.entries[i].first);
    return names;
}

void write_importance_csv(const ImportanceReport& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    out << "feature,importance\n";
    char buf[64];
    for (const auto& [name, value] : report.entries) {
        std::snprintf(buf, sizeof buf, "%.10f", value);
        const bool quote = name.find_first_of(",\"") != std::string::npos;
        out << (quote ? "\"" + name + "\"" : name) << ',' << buf << '\n';
    }
    if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

ImportanceReport rank_features(const FlowDataset& data, const ForestConfig& config) {
    std::vector<double> target(data.y.begin(), data.y.end());
    const MatrixView X{data.X, data.rows(), data.cols()};
    return compute_importances(fit_forest(X, target, config), data.feature_names);
}

}  // namespace flowsentinel
