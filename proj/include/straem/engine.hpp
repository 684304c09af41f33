#pragma once

// Streaming detection loop. One Engine drives one stream, one instance per step:
// predict, remember, retrain when enough of the training window was replaced,
// and (for straem_dd) watch reconstruction losses for drift and rebuild the
// model on alarm.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "straem/common.hpp"
#include "straem/drift.hpp"
#include "straem/iforest.hpp"
#include "straem/neural.hpp"
#include "straem/sliding_window.hpp"
#include "straem/threshold.hpp"

namespace straem {

enum class Method { baseline, straem, straem_dd, iforest };

[[nodiscard]] inline std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::straem: return "straem";
        case Method::straem_dd: return "straem_dd";
        case Method::iforest: return "iforest";
    }
    return "unknown";
}

[[nodiscard]] inline Method parse_method(std::string_view s) {
    if (s == "baseline") return Method::baseline;
    if (s == "straem") return Method::straem;
    if (s == "straem_dd") return Method::straem_dd;
    if (s == "iforest") return Method::iforest;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected baseline|straem|straem_dd|iforest)");
}

struct EngineConfig {
    Method method = Method::straem_dd;
    std::size_t w_train = 1000;
    std::size_t w_drift = 200;
    int b = 80;
    double p_replace = 50.0;  // percent of mov_train replaced before retraining
    double p_warn = 0.01;
    double p_alarm = 0.001;
    std::size_t expiry_time = 100;
    AeConfig ae;
    IForestConfig iforest;
    std::size_t pretrain_size = 2000;
    std::size_t pretrain_epochs = 100;
    bool tie_correction = false;

    void validate() const {
        if (w_train == 0 || w_drift == 0) throw ConfigError("window sizes must be positive");
        if (b < 0 || b > 100) throw ConfigError("percentile b must lie in [0,100]");
        if (!(p_replace > 0.0 && p_replace <= 100.0)) throw ConfigError("p_replace must lie in (0,100]");
        DriftState{.p_warn = p_warn, .p_alarm = p_alarm, .expiry_time = expiry_time}.validate();
        if (pretrain_size == 0) throw ConfigError("pretrain_size must be positive");
        if (method == Method::straem_dd && pretrain_size < w_drift)
            throw ConfigError("pretrain_size must be at least w_drift");
        if (pretrain_epochs == 0) throw ConfigError("pretrain_epochs must be positive");
        if (method == Method::iforest)
            iforest.validate(ae.input_dim);
        else
            ae.validate();
    }
};

/// Per-step trace record. Flags are reported as they stood after this step's
/// drift test, before an alarm resets them.
struct StepOutput {
    std::size_t t = 0;
    int y_hat = 0;
    double loss = 0.0;  // reconstruction loss (iforest: anomaly score)
    bool flag_warn = false;
    bool flag_alarm = false;
    std::size_t generation = 0;
};

template <typename D>
concept StreamDetector = requires(D d, std::span<const FeatureVector> pool, std::span<const double> x) {
    d.pretrain(pool);
    { d.step(x) } -> std::same_as<StepOutput>;
};

/// Retraining gate shared by the incremental methods: the window is full and
/// at least p% of it arrived since the last training (a first fill counts as 100%).
[[nodiscard]] inline bool training_due(const SlidingWindow<FeatureVector>& window, double p_replace) noexcept {
    return window.is_full() && window.replaced_fraction() * 100.0 >= p_replace - 1e-12;
}

class Engine {
public:
    explicit Engine(EngineConfig config)
        : config_(std::move(config)),
          model_(checked(config_).ae),
          mov_train_(config_.w_train),
          ref_driftx_(config_.w_drift),
          mov_driftx_(config_.w_drift),
          mov_warn_(config_.w_drift),
          mov_losses_(config_.w_drift) {
        if (config_.method == Method::iforest) throw ConfigError("Engine runs autoencoder methods; use IForestEngine");
        drift_.p_warn = config_.p_warn;
        drift_.p_alarm = config_.p_alarm;
        drift_.expiry_time = config_.expiry_time;
    }

    /// Trains on the normal-class pool and sets the initial threshold from its losses.
    void pretrain(std::span<const FeatureVector> pool) {
        if (pool.empty()) throw ConfigError("pretrain pool is empty");
        model_.train_window(pool, config_.pretrain_epochs);
        const auto losses = model_.losses(pool);
        threshold_ = {calc_anomaly_threshold(losses, config_.b), config_.b, 0};
        ++model_version_;
        pretrained_ = true;
    }

    StepOutput step(std::span<const double> x) {
        if (!pretrained_) throw PreconditionError("engine stepped before pretrain");
        ++t_;
        StepOutput out;
        out.t = t_;
        out.loss = model_.loss(x);
        out.y_hat = classify_loss(out.loss, threshold_.theta);
        out.generation = generation_;
        if (config_.method == Method::baseline) return out;

        FeatureVector xv(x.begin(), x.end());
        mov_train_.append(xv);
        const bool paused = config_.method == Method::straem_dd && drift_.flag_warn;
        if (training_due(mov_train_, config_.p_replace) && !paused) incremental_train();
        if (config_.method == Method::straem) return out;

        if (ref_driftx_.is_full()) {
            mov_driftx_.append(xv);
            mov_losses_.append(cache_valid() ? model_.loss(x) : 0.0);
        } else {
            ref_driftx_.append(xv);
        }

        if (mov_driftx_.is_full()) {
            refresh_loss_cache();
            const std::vector<double> mov = mov_losses_.snapshot();
            last_test_ = mwu_test(ref_losses_, mov, config_.tie_correction);
            drift_.update_flags(last_test_->p_value);
            ++tests_run_;
        }
        out.flag_warn = drift_.flag_warn;
        out.flag_alarm = drift_.flag_alarm;

        if (drift_.flag_warn && !drift_.flag_alarm) {
            mov_warn_.append(std::move(xv));
            if (drift_.tick_warning()) mov_warn_.clear();
        }
        if (drift_.flag_alarm) handle_alarm();
        return out;
    }

    /// Rebuilds the model from the warning window and starts every window afresh.
    /// A warning window that is not full holds only the latest steps, all of which
    /// are also in mov_driftx, so its union with mov_driftx is mov_driftx itself.
    void handle_alarm() {
        std::vector<FeatureVector> data = mov_warn_.is_full() ? mov_warn_.snapshot() : mov_driftx_.snapshot();
        ++generation_;
        AeConfig ae = config_.ae;
        ae.seed = config_.ae.seed + generation_;
        model_ = Autoencoder(ae);
        if (!data.empty()) {
            model_.train_window(data);
            threshold_ = {calc_anomaly_threshold(model_.losses(data), config_.b), config_.b, t_};
        }
        ++model_version_;
        ++trainings_;
        ref_driftx_.clear();
        mov_train_.clear();
        mov_driftx_.clear();
        mov_warn_.clear();
        mov_losses_.clear();
        drift_.reset();
    }

    [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }
    [[nodiscard]] const Autoencoder& model() const noexcept { return model_; }
    [[nodiscard]] double theta() const noexcept { return threshold_.theta; }
    [[nodiscard]] const ThresholdState& threshold() const noexcept { return threshold_; }
    [[nodiscard]] const DriftState& drift_state() const noexcept { return drift_; }
    [[nodiscard]] std::size_t generation() const noexcept { return generation_; }
    [[nodiscard]] std::size_t time() const noexcept { return t_; }
    [[nodiscard]] std::size_t trainings() const noexcept { return trainings_; }
    [[nodiscard]] std::size_t tests_run() const noexcept { return tests_run_; }
    [[nodiscard]] const std::optional<MwuResult>& last_test() const noexcept { return last_test_; }
    [[nodiscard]] const SlidingWindow<FeatureVector>& train_window() const noexcept { return mov_train_; }
    [[nodiscard]] const SlidingWindow<FeatureVector>& ref_window() const noexcept { return ref_driftx_; }
    [[nodiscard]] const SlidingWindow<FeatureVector>& mov_window() const noexcept { return mov_driftx_; }
    [[nodiscard]] const SlidingWindow<FeatureVector>& warn_window() const noexcept { return mov_warn_; }

private:
    static const EngineConfig& checked(const EngineConfig& c) {
        c.validate();
        return c;
    }

    void incremental_train() {
        const auto window = mov_train_.snapshot();
        model_.train_window(window);
        threshold_ = {calc_anomaly_threshold(model_.losses(window), config_.b), config_.b, t_};
        mov_train_.mark_reset();
        ++model_version_;
        ++trainings_;
    }

    [[nodiscard]] bool cache_valid() const noexcept { return cache_version_ == model_version_; }

    // Drift-window losses are recomputed only when the model changed since they were last scored.
    void refresh_loss_cache() {
        if (!cache_valid() || ref_losses_.size() != ref_driftx_.size()) {
            ref_losses_.clear();
            for (const auto& r : ref_driftx_) ref_losses_.push_back(model_.loss(r));
            mov_losses_.clear();
            for (const auto& m : mov_driftx_) mov_losses_.append(model_.loss(m));
            cache_version_ = model_version_;
        }
    }

    EngineConfig config_;
    Autoencoder model_;
    ThresholdState threshold_;
    SlidingWindow<FeatureVector> mov_train_;
    SlidingWindow<FeatureVector> ref_driftx_;
    SlidingWindow<FeatureVector> mov_driftx_;
    SlidingWindow<FeatureVector> mov_warn_;
    SlidingWindow<double> mov_losses_;
    std::vector<double> ref_losses_;
    DriftState drift_;
    std::optional<MwuResult> last_test_;
    std::uint64_t model_version_ = 0;
    std::uint64_t cache_version_ = ~std::uint64_t{0};
    std::size_t t_ = 0;
    std::size_t generation_ = 0;
    std::size_t trainings_ = 0;
    std::size_t tests_run_ = 0;
    bool pretrained_ = false;
};

/// iForest++: the strAEm++ loop with an isolation forest in place of the autoencoder.
class IForestEngine {
public:
    explicit IForestEngine(EngineConfig config) : config_(std::move(config)), mov_train_(config_.w_train) {
        config_.method = Method::iforest;
        config_.validate();
    }

    void pretrain(std::span<const FeatureVector> pool) {
        if (pool.size() < 2) throw ConfigError("pretrain pool needs at least two instances");
        refit(pool);
    }

    StepOutput step(std::span<const double> x) {
        if (!forest_) throw PreconditionError("engine stepped before pretrain");
        ++t_;
        StepOutput out;
        out.t = t_;
        out.loss = forest_->anomaly_score(x);
        out.y_hat = classify_loss(out.loss, threshold_);
        mov_train_.append(FeatureVector(x.begin(), x.end()));
        if (training_due(mov_train_, config_.p_replace)) {
            refit(mov_train_.snapshot());
            mov_train_.mark_reset();
        }
        return out;
    }

    [[nodiscard]] double threshold() const noexcept { return threshold_; }
    [[nodiscard]] std::size_t refits() const noexcept { return refits_; }
    [[nodiscard]] const IsolationForest& forest() const { return *forest_; }

private:
    void refit(std::span<const FeatureVector> data) {
        IForestConfig fc = config_.iforest;
        fc.seed = config_.iforest.seed + refits_;
        forest_ = IsolationForest::fit(fc, data);
        threshold_ = iforest_threshold(*forest_, data, fc.contamination);
        ++refits_;
    }

    EngineConfig config_;
    SlidingWindow<FeatureVector> mov_train_;
    std::optional<IsolationForest> forest_;
    double threshold_ = 0.0;
    std::size_t t_ = 0;
    std::size_t refits_ = 0;
};

}  // namespace straem
