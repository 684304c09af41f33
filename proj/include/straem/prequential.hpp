#pragma once

// Prequential G-mean with fading factors, per-run traces and cross-run aggregation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "straem/common.hpp"
#include "straem/engine.hpp"
#include "straem/streams.hpp"

namespace straem {

/// Four faded confusion cells; each is multiplied by xi before the current
/// outcome is added, so the metric forgets old steps geometrically.
class PrequentialTracker {
public:
    explicit PrequentialTracker(double xi = 0.99) : xi_(xi) {
        if (!(xi > 0.0 && xi <= 1.0)) throw ConfigError("fading factor must lie in (0,1]");
    }

    /// Records one (truth, prediction) pair; returns the current faded G-mean.
    double update(int y, int y_hat) {
        tp_ *= xi_;
        fn_ *= xi_;
        tn_ *= xi_;
        fp_ *= xi_;
        if (y == 1)
            (y_hat == 1 ? tp_ : fn_) += 1.0;
        else
            (y_hat == 0 ? tn_ : fp_) += 1.0;
        return gmean();
    }

    /// Recall of a class with zero (faded) support is taken as 0.
    [[nodiscard]] double recall_pos() const noexcept { return tp_ + fn_ > 0.0 ? tp_ / (tp_ + fn_) : 0.0; }
    [[nodiscard]] double recall_neg() const noexcept { return tn_ + fp_ > 0.0 ? tn_ / (tn_ + fp_) : 0.0; }
    [[nodiscard]] double gmean() const noexcept { return std::sqrt(recall_pos() * recall_neg()); }

    [[nodiscard]] double xi() const noexcept { return xi_; }
    [[nodiscard]] double tp() const noexcept { return tp_; }
    [[nodiscard]] double fn() const noexcept { return fn_; }
    [[nodiscard]] double tn() const noexcept { return tn_; }
    [[nodiscard]] double fp() const noexcept { return fp_; }

private:
    double xi_;
    double tp_ = 0.0, fn_ = 0.0, tn_ = 0.0, fp_ = 0.0;
};

[[nodiscard]] inline double gmean_from_recalls(double r_pos, double r_neg) { return std::sqrt(r_pos * r_neg); }

struct TraceRow {
    std::size_t t = 0;
    double gmean = 0.0;
    int y = 0;
    int y_hat = 0;
    double loss = 0.0;
    bool flag_warn = false;
    bool flag_alarm = false;
    std::size_t generation = 0;
};

struct RunTrace {
    std::uint64_t seed = 0;
    std::vector<TraceRow> rows;

    [[nodiscard]] std::vector<std::size_t> alarm_steps() const {
        std::vector<std::size_t> out;
        for (const auto& r : rows)
            if (r.flag_alarm) out.push_back(r.t);
        return out;
    }

    [[nodiscard]] std::size_t alarms_in(std::size_t lo_exclusive, std::size_t hi_inclusive) const {
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.flag_alarm && r.t > lo_exclusive && r.t <= hi_inclusive) ++n;
        return n;
    }

    /// Mean G-mean over steps t in [from, to] (inclusive, 1-based).
    [[nodiscard]] double mean_gmean(std::size_t from, std::size_t to) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.t >= from && r.t <= to) {
                sum += r.gmean;
                ++n;
            }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
};

/// Pretrains the detector, then feeds the stream step by step (test-then-train).
template <StreamDetector D>
RunTrace run_stream(D& detector, std::span<const FeatureVector> pool, std::span<const LabeledInstance> stream,
                    double xi = 0.99, std::uint64_t seed = 0) {
    detector.pretrain(pool);
    PrequentialTracker tracker(xi);
    RunTrace trace;
    trace.seed = seed;
    trace.rows.reserve(stream.size());
    for (const auto& inst : stream) {
        const StepOutput s = detector.step(inst.x);
        TraceRow row;
        row.t = s.t;
        row.gmean = tracker.update(inst.y, s.y_hat);
        row.y = inst.y;
        row.y_hat = s.y_hat;
        row.loss = s.loss;
        row.flag_warn = s.flag_warn;
        row.flag_alarm = s.flag_alarm;
        row.generation = s.generation;
        trace.rows.push_back(row);
    }
    return trace;
}

struct Aggregate {
    std::vector<double> mean;
    std::vector<double> stderr_;
};

/// Per-step mean and standard error (sample stddev / sqrt(R)); a single run has stderr 0.
[[nodiscard]] inline Aggregate aggregate(const std::vector<RunTrace>& traces) {
    if (traces.empty()) throw InputError("aggregate needs at least one trace");
    const std::size_t len = traces.front().rows.size();
    for (const auto& tr : traces)
        if (tr.rows.size() != len) throw InputError("aggregate: traces have different lengths");
    const auto r = static_cast<double>(traces.size());
    Aggregate agg;
    agg.mean.assign(len, 0.0);
    agg.stderr_.assign(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double sum = 0.0;
        for (const auto& tr : traces) sum += tr.rows[t].gmean;
        const double m = sum / r;
        agg.mean[t] = m;
        if (traces.size() > 1) {
            double ss = 0.0;
            for (const auto& tr : traces) ss += (tr.rows[t].gmean - m) * (tr.rows[t].gmean - m);
            agg.stderr_[t] = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
        }
    }
    return agg;
}

[[nodiscard]] inline std::string trace_to_csv(const RunTrace& trace) {
    std::string out = "t,gmean,y,y_hat,loss,flag_warn,flag_alarm,generation\n";
    for (const auto& r : trace.rows) {
        out += std::to_string(r.t);
        out += ',';
        append_number(out, r.gmean);
        out += ',' + std::to_string(r.y) + ',' + std::to_string(r.y_hat) + ',';
        append_number(out, r.loss);
        out += ',';
        out += r.flag_warn ? '1' : '0';
        out += ',';
        out += r.flag_alarm ? '1' : '0';
        out += ',' + std::to_string(r.generation) + '\n';
    }
    return out;
}

[[nodiscard]] inline std::string aggregate_to_csv(const Aggregate& agg) {
    std::string out = "t,mean_gmean,stderr\n";
    for (std::size_t i = 0; i < agg.mean.size(); ++i) {
        out += std::to_string(i + 1) + ',';
        append_number(out, agg.mean[i]);
        out += ',';
        append_number(out, agg.stderr_[i]);
        out += '\n';
    }
    return out;
}

/// One mean and one stderr column per labelled aggregate, aligned by step.
[[nodiscard]] inline std::string merge_aggregates_csv(const std::vector<std::pair<std::string, Aggregate>>& groups) {
    if (groups.empty()) throw InputError("nothing to merge");
    const std::size_t len = groups.front().second.mean.size();
    for (const auto& [name, agg] : groups)
        if (agg.mean.size() != len) throw InputError("cannot merge '" + name + "': length differs from '" + groups.front().first + "'");
    std::string out = "t";
    for (const auto& [name, agg] : groups) out += "," + name + "_mean," + name + "_stderr";
    out += '\n';
    for (std::size_t i = 0; i < len; ++i) {
        out += std::to_string(i + 1);
        for (const auto& [name, agg] : groups) {
            out += ',';
            append_number(out, agg.mean[i]);
            out += ',';
            append_number(out, agg.stderr_[i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace straem
