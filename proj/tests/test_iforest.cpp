#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "straem/iforest.hpp"

using namespace straem;

namespace {

std::vector<FeatureVector> cluster_with_outlier(std::uint64_t seed, std::size_t n = 100) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.5, 0.02);
    std::vector<FeatureVector> pts;
    for (std::size_t i = 0; i + 1 < n; ++i) pts.push_back({g(rng), g(rng)});
    pts.push_back({0.95, 0.05});
    return pts;
}

}  // namespace

TEST(IForestTest, AveragePathLength) {
    EXPECT_DOUBLE_EQ(average_path_length(1), 0.0);
    EXPECT_DOUBLE_EQ(average_path_length(2), 1.0);
    // 2 (ln 255 + gamma) - 2 * 255 / 256
    EXPECT_NEAR(average_path_length(256), 10.244770920116851, 1e-9);
    EXPECT_NEAR(average_path_length(256), 10.244, 1e-2);
}

TEST(IForestTest, BuildsRequestedTreeCount) {
    IForestConfig c;
    const auto forest = IsolationForest::fit(c, cluster_with_outlier(1, 300));
    EXPECT_EQ(forest.trees().size(), 100u);
    EXPECT_EQ(forest.subsample_size(), 256u);
    for (const auto& t : forest.trees()) EXPECT_EQ(t.height_limit(), 8u);
}

TEST(IForestTest, SplitsLieStrictlyInsideNodeRange) {
    IForestConfig c;
    c.n_estimators = 20;
    const auto data = cluster_with_outlier(2, 200);
    const auto forest = IsolationForest::fit(c, data);
    for (const auto& tree : forest.trees()) {
        const auto& nodes = tree.nodes();
        for (const auto& n : nodes) {
            if (n.feature < 0) continue;
            EXPECT_GT(nodes[n.left].size, 0u);
            EXPECT_GT(nodes[n.right].size, 0u);
            EXPECT_EQ(nodes[n.left].size + nodes[n.right].size, n.size);
        }
    }
}

TEST(IForestTest, TwoPointsIsolatedAtDepthOne) {
    IForestConfig c;
    c.n_estimators = 10;
    const std::vector<FeatureVector> two{{0.1, 0.5}, {0.9, 0.5}};
    const auto forest = IsolationForest::fit(c, two);
    for (const auto& t : forest.trees()) {
        ASSERT_EQ(t.nodes().size(), 3u);
        EXPECT_DOUBLE_EQ(t.path_length(two[0]), 1.0);
        EXPECT_DOUBLE_EQ(t.path_length(two[1]), 1.0);
    }
    EXPECT_NEAR(forest.anomaly_score(two[0]), 0.5, 1e-12);  // E[h] = c(2)
}

TEST(IForestTest, IdenticalPointsGiveSingleLeafTrees) {
    IForestConfig c;
    c.n_estimators = 5;
    const std::vector<FeatureVector> same(10, FeatureVector{0.3, 0.3});
    const auto forest = IsolationForest::fit(c, same);
    for (const auto& t : forest.trees()) EXPECT_EQ(t.nodes().size(), 1u);
    const double s = forest.anomaly_score(same[0]);
    EXPECT_NEAR(s, 0.5, 1e-12);
}

TEST(IForestTest, SameSeedSameForest) {
    IForestConfig c;
    c.seed = 5;
    const auto data = cluster_with_outlier(3);
    const auto a = IsolationForest::fit(c, data), b = IsolationForest::fit(c, data);
    for (const auto& x : data) EXPECT_EQ(a.anomaly_score(x), b.anomaly_score(x));
}

TEST(IForestTest, FarOutlierScoresHighest) {
    IForestConfig c;
    const auto data = cluster_with_outlier(4);
    const auto forest = IsolationForest::fit(c, data);
    const auto s = forest.scores(data);
    EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 99);
    for (double v : s) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(IForestTest, RejectsBadInput) {
    IForestConfig c;
    EXPECT_THROW((void)IsolationForest::fit(c, std::vector<FeatureVector>{{0.1, 0.2}}), PreconditionError);
    c.max_features = 3;
    EXPECT_THROW((void)IsolationForest::fit(c, cluster_with_outlier(1)), ConfigError);
}

TEST(IForestThresholdTest, ContaminationQuantile) {
    // synthetic forest-free check of the quantile rule on 100 distinct scores
    std::vector<double> scores;
    for (int i = 1; i <= 100; ++i) scores.push_back(i / 200.0);
    const double thr = nearest_rank_quantile(scores, 1.0 - 0.1);
    EXPECT_EQ(std::count_if(scores.begin(), scores.end(), [&](double v) { return v > thr; }), 10);
    EXPECT_DOUBLE_EQ(nearest_rank_quantile(scores, 0.5), 0.25);
    const std::vector<double> flat(50, 0.4);
    const double t2 = nearest_rank_quantile(flat, 0.9);
    EXPECT_EQ(std::count_if(flat.begin(), flat.end(), [&](double v) { return v > t2; }), 0);
}

TEST(IForestThresholdTest, FlagsAboutContaminationOnFittingWindow) {
    IForestConfig c;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureVector> window(1000);
    for (auto& x : window) x = {u(rng), u(rng)};
    const auto forest = IsolationForest::fit(c, window);
    const double thr = iforest_threshold(forest, window, 0.1);
    const auto s = forest.scores(window);
    const auto flagged = std::count_if(s.begin(), s.end(), [&](double v) { return v > thr; });
    EXPECT_LE(flagged, 100);
    EXPECT_GE(flagged, 90);
}
