#pragma once

// Mann-Whitney U test over two reconstruction-loss samples and the two-level
// warning/alarm state machine driven by its p-value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "straem/common.hpp"

namespace straem {

struct MwuResult {
    double r_ref = 0.0;  // rank sums
    double r_mov = 0.0;
    double u_ref = 0.0;
    double u_mov = 0.0;
    double u = 0.0;  // min(u_ref, u_mov)
    double mu = 0.0;
    double sigma = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

/// Two-tailed standard-normal probability 2 * Phi(-|z|).
[[nodiscard]] inline double two_tailed_p(double z) noexcept {
    return std::clamp(std::erfc(std::fabs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

/// Ranks of the pooled sample in ascending order, ties sharing the midpoint rank.
/// With tie_term non-null, accumulates sum(t^3 - t) over tie groups.
[[nodiscard]] inline std::vector<double> midpoint_ranks(std::span<const double> pooled, double* tie_term = nullptr) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
        // positions i..j-1 hold 1-based ranks i+1..j
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
        if (tie_term) {
            const double t = static_cast<double>(j - i);
            *tie_term += t * t * t - t;
        }
        i = j;
    }
    return ranks;
}

/// Normal-approximation Mann-Whitney U test. Without tie correction sigma is
/// sqrt(n_ref n_mov (n_ref + n_mov + 1) / 12); a zero sigma reports p = 1.
[[nodiscard]] inline MwuResult mwu_test(std::span<const double> ref, std::span<const double> mov,
                                        bool tie_correction = false) {
    if (ref.empty() || mov.empty()) throw PreconditionError("mwu_test needs two non-empty samples");
    const auto n_ref = static_cast<double>(ref.size());
    const auto n_mov = static_cast<double>(mov.size());

    std::vector<double> pooled;
    pooled.reserve(ref.size() + mov.size());
    pooled.insert(pooled.end(), ref.begin(), ref.end());
    pooled.insert(pooled.end(), mov.begin(), mov.end());
    double tie_term = 0.0;
    const auto ranks = midpoint_ranks(pooled, &tie_term);

    MwuResult r;
    r.r_ref = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(ref.size()), 0.0);
    r.r_mov = std::accumulate(ranks.begin() + static_cast<std::ptrdiff_t>(ref.size()), ranks.end(), 0.0);
    r.u_ref = n_ref * n_mov + n_ref * (n_ref + 1.0) / 2.0 - r.r_ref;
    r.u_mov = n_ref * n_mov + n_mov * (n_mov + 1.0) / 2.0 - r.r_mov;
    r.u = std::min(r.u_ref, r.u_mov);
    r.mu = n_ref * n_mov / 2.0;

    const double n = n_ref + n_mov;
    double var = n_ref * n_mov * (n + 1.0) / 12.0;
    if (tie_correction && n > 1.0) var = n_ref * n_mov / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    r.sigma = var > 0.0 ? std::sqrt(var) : 0.0;

    if (r.sigma == 0.0) {
        r.z = 0.0;
        r.p_value = 1.0;
    } else {
        r.z = (r.u - r.mu) / r.sigma;
        r.p_value = two_tailed_p(r.z);
    }
    return r;
}

/// Warning/alarm flags. Comparisons against the thresholds are inclusive.
struct DriftState {
    double p_warn = 0.01;
    double p_alarm = 0.001;
    std::size_t expiry_time = 100;
    bool flag_warn = false;
    bool flag_alarm = false;
    std::size_t warn_age = 0;
    double last_p = 1.0;

    void validate() const {
        if (!(p_alarm >= 0.0 && p_alarm <= p_warn && p_warn <= 1.0))
            throw ConfigError("drift thresholds must satisfy 0 <= p_alarm <= p_warn <= 1");
        if (expiry_time == 0) throw ConfigError("expiry_time must be positive");
    }

    /// Raises the warning (if not already raised) and, independently, the alarm.
    void update_flags(double p_value) noexcept {
        last_p = p_value;
        if (!flag_warn && p_value <= p_warn) {
            flag_warn = true;
            warn_age = 0;
        }
        if (p_value <= p_alarm) flag_alarm = true;
    }

    /// Ages an open warning by one step. Returns true when it expired; the
    /// caller then empties its warning window.
    bool tick_warning() noexcept {
        if (!flag_warn || flag_alarm) return false;
        ++warn_age;
        if (warn_age > expiry_time) {
            flag_warn = false;
            warn_age = 0;
            return true;
        }
        return false;
    }

    void reset() noexcept {
        flag_warn = false;
        flag_alarm = false;
        warn_age = 0;
    }
};

}  // namespace straem
