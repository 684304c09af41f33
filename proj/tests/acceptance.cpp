// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "straem/straem.hpp"

using namespace straem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

void criterion_mwu() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::size_t> size(3, 50);
        std::uniform_int_distribution<int> coarse(0, 12);
        std::vector<double> ref(size(rng)), mov(size(rng));
        for (auto& v : ref) v = coarse(rng) * 0.25;
        for (auto& v : mov) v = coarse(rng) * 0.25 + (trial % 4) * 0.25;
        const auto r = mwu_test(ref, mov);
        const auto o = oracle::mwu(ref, mov);
        worst = std::max({worst, std::fabs(r.u - std::min(o.u_ref, o.u_mov)), std::fabs(r.z - o.z), std::fabs(r.p_value - o.p)});
    }
    const double secs = seconds_since(start);
    report(1, worst <= 1e-9 && secs < 5.0, fmt("max |diff| = %.3g", worst) + fmt(", %.2f s", secs));
}

void criterion_gradient() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        AeConfig c;
        c.input_dim = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
        c.hidden_dims.clear();
        for (std::size_t k = std::uniform_int_distribution<std::size_t>(1, 2)(rng); k > 0; --k)
            c.hidden_dims.push_back(std::uniform_int_distribution<std::size_t>(1, 8)(rng));
        c.seed = 500 + trial;
        Autoencoder m(c);
        std::vector<FeatureVector> batch(std::uniform_int_distribution<std::size_t>(1, 8)(rng), FeatureVector(c.input_dim));
        for (auto& x : batch)
            for (auto& v : x) v = u(rng);
        worst = std::max(worst, oracle::max_gradient_rel_error(m, batch, 1e-5));
    }
    const double secs = seconds_since(start);
    report(2, worst < 1e-4 && secs < 30.0, fmt("max rel error = %.3g", worst) + fmt(", %.2f s", secs));
}

ExperimentConfig stream_config(const std::string& dataset, Method method, double rate, std::size_t reps) {
    auto c = parse_experiment_config("stream.dataset = " + dataset + "\n");
    c.stream.anomaly_rate = rate;
    c.engine.method = method;
    c.repetitions = reps;
    c.base_seed = 0;
    return c;
}

struct Comparative {
    std::vector<RunTrace> dd, inc, base;
};

Comparative run_comparative(const std::string& dataset, double rate) {
    Comparative out;
    out.dd = run_repetitions(stream_config(dataset, Method::straem_dd, rate, 5));
    out.inc = run_repetitions(stream_config(dataset, Method::straem, rate, 5));
    out.base = run_repetitions(stream_config(dataset, Method::baseline, rate, 5));
    return out;
}

double window_mean(const std::vector<RunTrace>& traces, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (const auto& t : traces) s += t.mean_gmean(from, to);
    return s / static_cast<double>(traces.size());
}

void criteria_sea_circle() {
    const auto start = Clock::now();
    const Comparative sea = run_comparative("sea", 0.01);

    const double pre_dd = window_mean(sea.dd, 2000, 4999), pre_inc = window_mean(sea.inc, 2000, 4999);
    report(3, pre_dd >= 0.75 && pre_inc >= 0.75,
           fmt("sea pre-drift mean G-mean: straem_dd %.3f", pre_dd) + fmt(", straem %.3f (need >= 0.75)", pre_inc));

    std::size_t with_post_alarm = 0, clean_before = 0;
    std::string alarms;
    for (const auto& tr : sea.dd) {
        with_post_alarm += tr.alarms_in(5000, 7000) >= 1;
        clean_before += tr.alarms_in(0, 4999) == 0;
        const auto steps = tr.alarm_steps();
        alarms += (alarms.empty() ? "" : "; ") + std::to_string(steps.size()) + " alarms" +
                  (steps.empty() ? "" : " first at " + std::to_string(steps.front()));
    }
    report(4, with_post_alarm == sea.dd.size() && clean_before >= 4,
           std::to_string(with_post_alarm) + "/5 alarm in (5000,7000], " + std::to_string(clean_before) +
               "/5 clean before 5000 [" + alarms + "]");

    const Comparative circle = run_comparative("circle", 0.001);
    bool pass5 = true;
    std::string detail;
    for (const auto& [name, cmp] : {std::pair{"sea", &sea}, std::pair{"circle", &circle}}) {
        const double dd = window_mean(cmp->dd, 7000, 10000), inc = window_mean(cmp->inc, 7000, 10000),
                     base = window_mean(cmp->base, 7000, 10000);
        pass5 = pass5 && dd > inc && inc > base && base < 0.1;
        detail += std::string(detail.empty() ? "" : "; ") + name + fmt(": straem_dd %.3f", dd) + fmt(", straem %.3f", inc) +
                  fmt(", baseline %.3f", base);
    }
    report(5, pass5, detail + fmt(" (%.0f s for criteria 3-5)", seconds_since(start)));
}

void criterion_threshold() {
    const auto start = Clock::now();
    std::mt19937_64 rng(1006);
    bool ok = true;
    double worst_excess = -1.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
        std::vector<double> losses(n);
        std::uniform_int_distribution<int> coarse(0, 40);
        std::exponential_distribution<double> expo(2.0);
        for (auto& l : losses) l = trial % 2 ? coarse(rng) * 0.05 : expo(rng);
        for (int b : {80, 90, 95}) {
            const double theta = calc_anomaly_threshold(losses, b);
            const auto above = std::count_if(losses.begin(), losses.end(), [&](double l) { return l > theta; });
            const double excess = static_cast<double>(above) / static_cast<double>(n) - ((100.0 - b) / 100.0 + 1.0 / static_cast<double>(n));
            worst_excess = std::max(worst_excess, excess);
            ok = ok && excess <= 0.0;
        }
    }
    const double secs = seconds_since(start);
    report(6, ok && secs < 1.0, fmt("max (fraction - bound) = %.4f", worst_excess) + fmt(", %.3f s", secs));
}

void criterion_stationary() {
    auto c = stream_config("sea", Method::straem_dd, 0.01, 10);
    c.stream.drift_at = std::nullopt;
    c.base_seed = 100;
    const auto traces = run_repetitions(c);
    std::size_t quiet = 0;
    std::string counts;
    for (const auto& tr : traces) {
        const auto n = tr.alarm_steps().size();
        quiet += n <= 1;
        counts += (counts.empty() ? "" : ",") + std::to_string(n);
    }
    report(7, quiet >= 9, std::to_string(quiet) + "/10 seeds with <= 1 alarm (alarms per seed: " + counts + ")");
}

void criterion_prequential() {
    std::mt19937_64 rng(1008);
    std::bernoulli_distribution coin(0.2);
    bool exact = true;
    for (int trace = 0; trace < 100; ++trace) {
        PrequentialTracker p(1.0);
        long tp = 0, fn = 0, tn = 0, fp = 0;
        for (int t = 0; t < 500; ++t) {
            const int y = coin(rng), yh = coin(rng);
            const double g = p.update(y, yh);
            (y ? (yh ? tp : fn) : (yh ? fp : tn))++;
            exact = exact && p.tp() == static_cast<double>(tp) && p.fn() == static_cast<double>(fn) &&
                    p.tn() == static_cast<double>(tn) && p.fp() == static_cast<double>(fp);
            const double rp = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
            const double rn = tn + fp ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
            exact = exact && g == std::sqrt(rp * rn);
        }
    }
    PrequentialTracker faded(0.99);
    double g = 0.0;
    for (int t = 0; t < 1000; ++t) g = faded.update(t % 2, t % 2);
    report(8, exact && g >= 0.999, std::string(exact ? "exact" : "mismatch") + fmt(" on 100 traces; alternating G-mean %.6f", g));
}

void criterion_iforest() {
    std::size_t top = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        std::mt19937_64 rng(mix_seed(1009, s));
        std::normal_distribution<double> g(0.5, 0.05);
        std::vector<FeatureVector> window;
        for (int i = 0; i < 99; ++i) window.push_back({g(rng), g(rng)});
        window.push_back({0.98, 0.02});
        IForestConfig c;
        c.seed = s;
        const auto forest = IsolationForest::fit(c, window);
        const auto scores = forest.scores(window);
        top += std::max_element(scores.begin(), scores.end()) - scores.begin() == 99;
    }
    const double c256 = average_path_length(256);
    report(9, top >= 95 && std::fabs(c256 - 10.244) < 1e-2,
           std::to_string(top) + "/100 forests rank the outlier first; c(256) = " + fmt("%.6f", c256));
}

}  // namespace

int main() {
    criterion_mwu();
    criterion_gradient();
    criteria_sea_circle();
    criterion_threshold();
    criterion_stationary();
    criterion_prequential();
    criterion_iforest();
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
