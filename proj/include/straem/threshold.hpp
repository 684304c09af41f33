#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "straem/common.hpp"
#include "straem/neural.hpp"

namespace straem {

/// Current anomaly threshold and when it was last recalculated.
struct ThresholdState {
    double theta = 0.0;
    int b = 80;
    std::size_t set_at = 0;
};

/// Nearest-rank quantile: sorted value at 1-based rank ceil(q * n), q in [0,1].
/// q = 0 returns the minimum.
inline double nearest_rank_quantile(std::span<const double> values, double q) {
    if (values.empty()) throw PreconditionError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0,1]");
    std::vector<double> sorted(values.begin(), values.end());
    const auto n = static_cast<double>(sorted.size());
    // 1e-9 guards q values like 1 - 0.1 that land a hair above an integer rank
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

/// θ = b-th percentile of the window losses by nearest rank; b = 100 gives the maximum.
inline double calc_anomaly_threshold(std::span<const double> losses, int b) {
    if (losses.empty()) throw PreconditionError("calc_anomaly_threshold on an empty loss vector");
    if (b < 0 || b > 100) throw ConfigError("percentile b must lie in [0,100], got " + std::to_string(b));
    std::vector<double> sorted(losses.begin(), losses.end());
    const std::size_t n = sorted.size();
    std::size_t rank = (static_cast<std::size_t>(b) * n + 99) / 100;  // ceil(b n / 100)
    rank = std::max<std::size_t>(rank, 1);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

/// 1 when the loss strictly exceeds theta.
[[nodiscard]] inline int classify_loss(double loss, double theta) noexcept { return loss > theta ? 1 : 0; }

[[nodiscard]] inline int predict(const Autoencoder& model, double theta, std::span<const double> x) {
    return classify_loss(model.loss(x), theta);
}

}  // namespace straem
