#pragma once

// Isolation Forest (random isolation trees over a subsample), used as the
// tree-based scorer of the incremental iForest++ baseline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "straem/common.hpp"
#include "straem/threshold.hpp"

namespace straem {

struct IForestConfig {
    std::size_t n_estimators = 100;
    std::size_t max_samples = 256;
    std::size_t max_features = 2;
    double contamination = 0.1;
    std::uint64_t seed = 0;

    void validate(std::size_t dim) const {
        if (n_estimators == 0) throw ConfigError("n_estimators must be positive");
        if (max_samples < 2) throw ConfigError("max_samples must be at least 2");
        if (max_features == 0 || max_features > dim)
            throw ConfigError("max_features must lie in [1, " + std::to_string(dim) + "]");
        if (!(contamination > 0.0 && contamination <= 0.5)) throw ConfigError("contamination must lie in (0, 0.5]");
    }
};

inline constexpr double kEulerGamma = 0.5772156649015329;

/// Average unsuccessful-search path length of a binary search tree over n points.
[[nodiscard]] inline double average_path_length(std::size_t n) noexcept {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const auto m = static_cast<double>(n);
    return 2.0 * (std::log(m - 1.0) + kEulerGamma) - 2.0 * (m - 1.0) / m;
}

class IsolationTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double split = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        std::size_t size = 0;  // training points that reached this node
        std::size_t depth = 0;
    };

    IsolationTree(std::span<const FeatureVector> data, std::vector<std::size_t> sample, std::vector<std::size_t> features,
                  std::size_t height_limit, std::mt19937_64& rng)
        : features_(std::move(features)), height_limit_(height_limit) {
        nodes_.reserve(2 * sample.size());
        build(data, sample, 0, rng);
    }

    /// Edges from the root to x's leaf plus c(leaf size) for leaves holding several points.
    [[nodiscard]] double path_length(std::span<const double> x) const {
        std::size_t idx = 0;
        while (nodes_[idx].feature >= 0) {
            const Node& n = nodes_[idx];
            idx = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
        }
        const Node& leaf = nodes_[idx];
        return static_cast<double>(leaf.depth) + average_path_length(leaf.size);
    }

    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t height_limit() const noexcept { return height_limit_; }

private:
    std::size_t build(std::span<const FeatureVector> data, std::span<std::size_t> rows, std::size_t depth,
                      std::mt19937_64& rng) {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{.size = rows.size(), .depth = depth});
        if (depth >= height_limit_ || rows.size() <= 1) return id;

        std::vector<int> candidates;
        std::vector<std::pair<double, double>> ranges;
        for (std::size_t f : features_) {
            double lo = data[rows[0]][f], hi = lo;
            for (std::size_t r : rows) {
                lo = std::min(lo, data[r][f]);
                hi = std::max(hi, data[r][f]);
            }
            if (hi > lo) {
                candidates.push_back(static_cast<int>(f));
                ranges.emplace_back(lo, hi);
            }
        }
        if (candidates.empty()) return id;

        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const std::size_t c = pick(rng);
        const auto [lo, hi] = ranges[c];
        std::uniform_real_distribution<double> uni(lo, hi);
        double split = uni(rng);
        while (!(split > lo && split < hi)) split = uni(rng);

        const auto f = static_cast<std::size_t>(candidates[c]);
        auto mid = std::partition(rows.begin(), rows.end(), [&](std::size_t r) { return data[r][f] < split; });
        const auto n_left = static_cast<std::size_t>(mid - rows.begin());

        nodes_[id].feature = candidates[c];
        nodes_[id].split = split;
        const std::size_t left = build(data, rows.subspan(0, n_left), depth + 1, rng);
        const std::size_t right = build(data, rows.subspan(n_left), depth + 1, rng);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    std::vector<std::size_t> features_;
    std::size_t height_limit_;
    std::vector<Node> nodes_;
};

class IsolationForest {
public:
    /// n_estimators trees, each on a uniform subsample (without replacement) of
    /// min(max_samples, |window|) points and a random subset of max_features features.
    static IsolationForest fit(const IForestConfig& config, std::span<const FeatureVector> window) {
        if (window.size() < 2) throw PreconditionError("fit_iforest needs at least two instances");
        const std::size_t dim = window.front().size();
        for (const auto& x : window)
            if (x.size() != dim) throw InputError("fit_iforest: inconsistent feature dimensions");
        config.validate(dim);

        IsolationForest forest;
        forest.dim_ = dim;
        forest.psi_ = std::min(config.max_samples, window.size());
        const auto height = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.psi_))));
        std::mt19937_64 rng(mix_seed(config.seed, 0x1f0));

        std::vector<std::size_t> all_rows(window.size());
        std::vector<std::size_t> all_features(dim);
        forest.trees_.reserve(config.n_estimators);
        for (std::size_t t = 0; t < config.n_estimators; ++t) {
            std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
            partial_shuffle(all_rows, forest.psi_, rng);
            std::vector<std::size_t> sample(all_rows.begin(), all_rows.begin() + static_cast<std::ptrdiff_t>(forest.psi_));

            std::iota(all_features.begin(), all_features.end(), std::size_t{0});
            partial_shuffle(all_features, config.max_features, rng);
            std::vector<std::size_t> features(all_features.begin(),
                                              all_features.begin() + static_cast<std::ptrdiff_t>(config.max_features));
            std::sort(features.begin(), features.end());

            forest.trees_.emplace_back(window, std::move(sample), std::move(features), height, rng);
        }
        return forest;
    }

    [[nodiscard]] double mean_path_length(std::span<const double> x) const {
        if (x.size() != dim_) throw InputError("anomaly_score: dimension mismatch");
        double sum = 0.0;
        for (const auto& tree : trees_) sum += tree.path_length(x);
        return sum / static_cast<double>(trees_.size());
    }

    /// s(x) = 2^(-E[h(x)] / c(psi)), psi being the per-tree subsample size.
    [[nodiscard]] double anomaly_score(std::span<const double> x) const {
        return std::exp2(-mean_path_length(x) / average_path_length(psi_));
    }

    [[nodiscard]] std::vector<double> scores(std::span<const FeatureVector> xs) const {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(anomaly_score(x));
        return out;
    }

    [[nodiscard]] const std::vector<IsolationTree>& trees() const noexcept { return trees_; }
    [[nodiscard]] std::size_t subsample_size() const noexcept { return psi_; }

private:
    static void partial_shuffle(std::vector<std::size_t>& v, std::size_t k, std::mt19937_64& rng) {
        for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
            std::swap(v[i], v[pick(rng)]);
        }
    }

    std::size_t dim_ = 0;
    std::size_t psi_ = 0;
    std::vector<IsolationTree> trees_;
};

/// (1 - contamination) nearest-rank quantile of the window scores; scores strictly above it are anomalies.
[[nodiscard]] inline double iforest_threshold(const IsolationForest& forest, std::span<const FeatureVector> window,
                                              double contamination) {
    if (window.empty()) throw PreconditionError("iforest_threshold on an empty window");
    const auto s = forest.scores(window);
    return nearest_rank_quantile(s, 1.0 - contamination);
}

}  // namespace straem
