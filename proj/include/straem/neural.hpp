#pragma once

// Fully-connected autoencoder trained with binary cross-entropy and Adam.
//
// Layer dims run input_dim -> hidden_dims... -> mirrored hidden dims -> input_dim.
// Hidden layers use leaky ReLU, the output layer uses a sigmoid so every
// reconstruction lies in (0,1)^d. All arithmetic is double precision.

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

namespace straem {

/// Clip bound applied to reconstructions before taking logarithms.
inline constexpr double kBceEpsilon = 1e-7;

struct AeConfig {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden_dims{8};  // encoder half, decoder mirrors it
    double learning_rate = 1e-3;
    std::size_t minibatch_size = 128;
    std::size_t epochs = 10;
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (input_dim == 0) throw ConfigError("autoencoder input_dim must be positive");
        if (hidden_dims.empty()) throw ConfigError("autoencoder needs at least one hidden layer");
        for (auto h : hidden_dims)
            if (h == 0) throw ConfigError("hidden layer sizes must be positive");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw ConfigError("learning_rate must be positive");
        if (minibatch_size == 0) throw ConfigError("minibatch_size must be positive");
        if (!(leaky_slope >= 0.0) || !std::isfinite(leaky_slope))
            throw ConfigError("leaky_slope must be a finite non-negative number");
    }

    /// Full chain of layer widths, e.g. {784, 512, 256, 512, 784}.
    [[nodiscard]] std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims{input_dim};
        dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
        for (auto it = hidden_dims.rbegin() + 1; it != hidden_dims.rend(); ++it) dims.push_back(*it);
        dims.push_back(input_dim);
        return dims;
    }
};

enum class Activation { leaky_relu, sigmoid };

/// Weights are row-major, out x in.
struct LayerParams {
    std::vector<double> weights;
    std::vector<double> bias;
};

using ParamSet = std::vector<LayerParams>;

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::leaky_relu;
    LayerParams params;
};

struct TrainReport {
    std::vector<double> epoch_costs;  // mean batch loss seen during each epoch
    double final_cost = 0.0;          // J over the window after the last update
};

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Reconstruction loss: -sum_d [x_d log x̂_d + (1-x_d) log(1-x̂_d)], x̂ clipped to [eps, 1-eps].
inline double bce_loss(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size())
        throw InputError("bce_loss: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(x_hat.size()) + ")");
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = std::clamp(x_hat[i], kBceEpsilon, 1.0 - kBceEpsilon);
        loss -= x[i] * std::log(p) + (1.0 - x[i]) * std::log(1.0 - p);
    }
    // x in (0,1) makes the sum positive, but clipping can leave a -0-ish residue
    return std::max(loss, 0.0);
}

class Autoencoder {
public:
    /// He-normal weights, zero biases, zeroed Adam moments.
    explicit Autoencoder(AeConfig config) : config_(std::move(config)), shuffle_rng_(mix_seed(config_.seed, 1)) {
        config_.validate();
        const auto dims = config_.layer_dims();
        std::mt19937_64 init_rng(mix_seed(config_.seed, 0));
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            DenseLayer layer;
            layer.in = dims[l];
            layer.out = dims[l + 1];
            layer.activation = (l + 2 == dims.size()) ? Activation::sigmoid : Activation::leaky_relu;
            std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(layer.in)));
            layer.params.weights.resize(layer.in * layer.out);
            for (auto& w : layer.params.weights) w = he(init_rng);
            layer.params.bias.assign(layer.out, 0.0);
            layers_.push_back(std::move(layer));
        }
        adam_m_ = zeros_like();
        adam_v_ = zeros_like();
    }

    [[nodiscard]] const AeConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return config_.input_dim; }
    [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    /// Direct parameter access, used by snapshots and tests.
    [[nodiscard]] std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }
    [[nodiscard]] std::uint64_t adam_steps() const noexcept { return adam_step_; }

    [[nodiscard]] FeatureVector reconstruct(std::span<const double> x) const {
        check_dim(x.size());
        FeatureVector cur(x.begin(), x.end());
        FeatureVector next;
        for (const auto& layer : layers_) {
            affine(layer, cur, next);
            activate(layer.activation, next);
            cur.swap(next);
        }
        return cur;
    }

    [[nodiscard]] double loss(std::span<const double> x) const { return bce_loss(x, reconstruct(x)); }

    [[nodiscard]] std::vector<double> losses(std::span<const FeatureVector> xs) const {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(loss(x));
        return out;
    }

    /// Mean reconstruction loss over a window (J).
    [[nodiscard]] double cost(std::span<const FeatureVector> xs) const {
        if (xs.empty()) throw PreconditionError("cost of an empty window");
        double sum = 0.0;
        for (const auto& x : xs) sum += loss(x);
        return sum / static_cast<double>(xs.size());
    }

    /// Analytic gradient of the mean batch loss with respect to every weight and bias.
    [[nodiscard]] ParamSet gradient(std::span<const FeatureVector> batch) const {
        if (batch.empty()) throw PreconditionError("gradient of an empty batch");
        std::vector<const FeatureVector*> ptrs;
        ptrs.reserve(batch.size());
        for (const auto& x : batch) ptrs.push_back(&x);
        ParamSet grad = zeros_like();
        accumulate_gradient(ptrs, grad);
        return grad;
    }

    /// One Adam update (bias-corrected) from a parameter-shaped gradient.
    void apply_adam(const ParamSet& grad) {
        ++adam_step_;
        const double t = static_cast<double>(adam_step_);
        const double corr1 = 1.0 - std::pow(kBeta1, t);
        const double corr2 = 1.0 - std::pow(kBeta2, t);
        const double lr = config_.learning_rate;
        auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                          std::vector<double>& v) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                const double m_hat = m[i] / corr1;
                const double v_hat = v[i] / corr2;
                p[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
            }
        };
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            update(layers_[l].params.weights, grad[l].weights, adam_m_[l].weights, adam_v_[l].weights);
            update(layers_[l].params.bias, grad[l].bias, adam_m_[l].bias, adam_v_[l].bias);
        }
    }

    /// Runs config().epochs shuffled mini-batch passes over the window.
    TrainReport train_window(std::span<const FeatureVector> window) { return train_window(window, config_.epochs); }

    TrainReport train_window(std::span<const FeatureVector> window, std::size_t epochs) {
        if (window.empty()) throw PreconditionError("train_window on an empty window");
        for (const auto& x : window) check_dim(x.size());
        TrainReport report;
        const std::size_t n = window.size();
        const std::size_t batch = std::min(config_.minibatch_size, n);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<const FeatureVector*> ptrs;
        for (std::size_t e = 0; e < epochs; ++e) {
            std::shuffle(order.begin(), order.end(), shuffle_rng_);
            double epoch_sum = 0.0;
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t stop = std::min(start + batch, n);
                ptrs.clear();
                for (std::size_t i = start; i < stop; ++i) ptrs.push_back(&window[order[i]]);
                ParamSet grad = zeros_like();
                epoch_sum += accumulate_gradient(ptrs, grad) * static_cast<double>(ptrs.size());
                apply_adam(grad);
            }
            report.epoch_costs.push_back(epoch_sum / static_cast<double>(n));
        }
        report.final_cost = cost(window);
        return report;
    }

    [[nodiscard]] bool all_finite() const noexcept {
        for (const auto& layer : layers_) {
            for (double w : layer.params.weights)
                if (!std::isfinite(w)) return false;
            for (double b : layer.params.bias)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }

    [[nodiscard]] ParamSet zeros_like() const {
        ParamSet out(layers_.size());
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            out[l].weights.assign(layers_[l].params.weights.size(), 0.0);
            out[l].bias.assign(layers_[l].params.bias.size(), 0.0);
        }
        return out;
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kAdamEpsilon = 1e-8;

    void check_dim(std::size_t d) const {
        if (d != config_.input_dim)
            throw InputError("expected a " + std::to_string(config_.input_dim) + "-dimensional input, got " +
                             std::to_string(d));
    }

    static void affine(const DenseLayer& layer, const FeatureVector& in, FeatureVector& out) {
        out.assign(layer.params.bias.begin(), layer.params.bias.end());
        const double* w = layer.params.weights.data();
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* row = w + o * layer.in;
            double acc = 0.0;
            for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in[i];
            out[o] += acc;
        }
    }

    void activate(Activation act, FeatureVector& z) const {
        if (act == Activation::sigmoid) {
            for (auto& v : z) v = sigmoid(v);
        } else {
            for (auto& v : z)
                if (v <= 0.0) v *= config_.leaky_slope;
        }
    }

    /// Adds the mean-loss gradient of the batch into grad; returns the mean batch loss.
    double accumulate_gradient(const std::vector<const FeatureVector*>& batch, ParamSet& grad) const {
        const std::size_t depth = layers_.size();
        std::vector<FeatureVector> acts(depth + 1);  // acts[0] = input, acts[l+1] = output of layer l
        std::vector<FeatureVector> pre(depth);
        FeatureVector delta, prev_delta;
        const double scale = 1.0 / static_cast<double>(batch.size());
        double loss_sum = 0.0;

        for (const FeatureVector* xp : batch) {
            const FeatureVector& x = *xp;
            check_dim(x.size());
            acts[0] = x;
            for (std::size_t l = 0; l < depth; ++l) {
                affine(layers_[l], acts[l], pre[l]);
                acts[l + 1] = pre[l];
                activate(layers_[l].activation, acts[l + 1]);
            }
            const FeatureVector& x_hat = acts[depth];
            loss_sum += bce_loss(x, x_hat);

            // sigmoid + BCE: dL/dz = x̂ - x, zero where the clip is active
            delta.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const bool clipped = x_hat[i] < kBceEpsilon || x_hat[i] > 1.0 - kBceEpsilon;
                delta[i] = clipped ? 0.0 : (x_hat[i] - x[i]);
            }

            for (std::size_t l = depth; l-- > 0;) {
                const DenseLayer& layer = layers_[l];
                auto& gw = grad[l].weights;
                auto& gb = grad[l].bias;
                const FeatureVector& input = acts[l];
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double d = delta[o] * scale;
                    if (d == 0.0) continue;
                    gb[o] += d;
                    double* row = gw.data() + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) row[i] += d * input[i];
                }
                if (l == 0) break;
                prev_delta.assign(layer.in, 0.0);
                const double* w = layer.params.weights.data();
                for (std::size_t o = 0; o < layer.out; ++o) {
                    const double d = delta[o];
                    if (d == 0.0) continue;
                    const double* row = w + o * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) prev_delta[i] += row[i] * d;
                }
                const FeatureVector& z = pre[l - 1];
                for (std::size_t i = 0; i < layer.in; ++i)
                    if (z[i] <= 0.0) prev_delta[i] *= config_.leaky_slope;
                delta.swap(prev_delta);
            }
        }
        return loss_sum * scale;
    }

    AeConfig config_;
    std::vector<DenseLayer> layers_;
    ParamSet adam_m_;
    ParamSet adam_v_;
    std::uint64_t adam_step_ = 0;
    std::mt19937_64 shuffle_rng_;
};

}  // namespace straem
