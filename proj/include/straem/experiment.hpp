#pragma once

// Config-driven experiments: resolve a flat key/value config, run R seeded
// repetitions, and write traces, the aggregate and a metadata record.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "straem/common.hpp"
#include "straem/engine.hpp"
#include "straem/mnist.hpp"
#include "straem/prequential.hpp"
#include "straem/streams.hpp"

namespace straem {

struct ExperimentConfig {
    StreamSpec stream;
    EngineConfig engine;
    std::size_t repetitions = 20;
    std::uint64_t base_seed = 0;
    std::string output_dir = "out";
    double fading_factor = 0.99;
    std::string mnist_images;
    std::string mnist_labels;
};

/// Per-dataset network and stream settings, plus the shared defaults.
inline void apply_dataset_defaults(ExperimentConfig& c) {
    auto& ae = c.engine.ae;
    ae.input_dim = dataset_dim(c.stream.dataset);
    switch (c.stream.dataset) {
        case Dataset::sea:
            ae.hidden_dims = {64, 8};
            ae.learning_rate = 1e-3;
            ae.epochs = 10;
            break;
        case Dataset::circle:
            ae.hidden_dims = {8};
            ae.learning_rate = 1e-3;
            ae.epochs = 5;
            break;
        case Dataset::mnist01:
        case Dataset::mnist23:
            ae.hidden_dims = {512, 256};
            ae.learning_rate = 1e-4;
            ae.epochs = 10;
            break;
    }
    ae.minibatch_size = 128;
    c.engine.iforest.max_features = ae.input_dim;
    if (c.stream.dataset == Dataset::mnist01 || c.stream.dataset == Dataset::mnist23) {
        c.stream.length = 5000;
        c.stream.drift_at = 2500;
    } else {
        c.stream.length = 10000;
        c.stream.drift_at = 5000;
    }
}

namespace detail {

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    const auto last = s.find_last_not_of(ws);
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out{};
    ss >> out;
    if (ss.fail() || !ss.eof()) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

inline std::size_t parse_size(const std::string& key, const std::string& value) {
    if (!value.empty() && value.front() == '-') throw ConfigError("config key '" + key + "' must be non-negative");
    return parse_number<std::size_t>(key, value);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
    if (out.empty()) throw ConfigError("config key '" + key + "' needs at least one value");
    return out;
}

}  // namespace detail

/// Reads `key = value` lines (dotted keys, optional [section] prefixes, # comments)
/// into an ordered map.
[[nodiscard]] inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Builds a config from key/value pairs. stream.dataset picks the per-dataset
/// defaults first; every other key then overrides them. Unknown keys are errors.
[[nodiscard]] inline ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
    using namespace detail;
    ExperimentConfig c;
    if (auto it = kv.find("stream.dataset"); it != kv.end()) c.stream.dataset = parse_dataset(it->second);
    apply_dataset_defaults(c);

    for (const auto& [key, value] : kv) {
        auto& e = c.engine;
        if (key == "stream.dataset") continue;
        else if (key == "stream.length") c.stream.length = parse_size(key, value);
        else if (key == "stream.drift_at") c.stream.drift_at = value == "none" ? std::nullopt : std::optional(parse_size(key, value));
        else if (key == "stream.anomaly_rate") c.stream.anomaly_rate = parse_number<double>(key, value);
        else if (key == "stream.mnist_images") c.mnist_images = value;
        else if (key == "stream.mnist_labels") c.mnist_labels = value;
        else if (key == "engine.method") e.method = parse_method(value);
        else if (key == "engine.w_train") e.w_train = parse_size(key, value);
        else if (key == "engine.w_drift") e.w_drift = parse_size(key, value);
        else if (key == "engine.b") e.b = parse_number<int>(key, value);
        else if (key == "engine.p_replace") e.p_replace = parse_number<double>(key, value);
        else if (key == "engine.p_warn") e.p_warn = parse_number<double>(key, value);
        else if (key == "engine.p_alarm") e.p_alarm = parse_number<double>(key, value);
        else if (key == "engine.expiry_time") e.expiry_time = parse_size(key, value);
        else if (key == "engine.pretrain_size") e.pretrain_size = parse_size(key, value);
        else if (key == "engine.pretrain_epochs") e.pretrain_epochs = parse_size(key, value);
        else if (key == "engine.tie_correction") e.tie_correction = parse_bool(key, value);
        else if (key == "ae.hidden_dims") e.ae.hidden_dims = parse_size_list(key, value);
        else if (key == "ae.learning_rate") e.ae.learning_rate = parse_number<double>(key, value);
        else if (key == "ae.minibatch_size") e.ae.minibatch_size = parse_size(key, value);
        else if (key == "ae.epochs") e.ae.epochs = parse_size(key, value);
        else if (key == "ae.leaky_slope") e.ae.leaky_slope = parse_number<double>(key, value);
        else if (key == "iforest.n_estimators") e.iforest.n_estimators = parse_size(key, value);
        else if (key == "iforest.max_samples") e.iforest.max_samples = parse_size(key, value);
        else if (key == "iforest.max_features") e.iforest.max_features = parse_size(key, value);
        else if (key == "iforest.contamination") e.iforest.contamination = parse_number<double>(key, value);
        else if (key == "experiment.repetitions") c.repetitions = parse_size(key, value);
        else if (key == "experiment.base_seed") c.base_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "experiment.output_dir") c.output_dir = value;
        else if (key == "experiment.fading_factor") c.fading_factor = parse_number<double>(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

[[nodiscard]] inline ExperimentConfig parse_experiment_config(const std::string& text) {
    return config_from_key_values(parse_key_values(text));
}

[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_text_file(path));
}

inline void validate(const ExperimentConfig& c) {
    c.stream.validate();
    c.engine.validate();
    if (c.repetitions == 0) throw ConfigError("experiment.repetitions must be positive");
    if (!(c.fading_factor > 0.0 && c.fading_factor <= 1.0)) throw ConfigError("experiment.fading_factor must lie in (0,1]");
    const bool mnist = c.stream.dataset == Dataset::mnist01 || c.stream.dataset == Dataset::mnist23;
    if (mnist && (c.mnist_images.empty() || c.mnist_labels.empty()))
        throw ConfigError("MNIST datasets need stream.mnist_images and stream.mnist_labels");
}

/// Seeds for repetition r: the stream uses base_seed + r, the models derive theirs from it.
[[nodiscard]] inline ExperimentConfig resolve_repetition(const ExperimentConfig& c, std::size_t r) {
    ExperimentConfig out = c;
    const std::uint64_t seed = c.base_seed + r;
    out.stream.seed = seed;
    out.engine.ae.seed = mix_seed(seed, 101);
    out.engine.iforest.seed = mix_seed(seed, 102);
    return out;
}

struct StreamData {
    std::vector<LabeledInstance> stream;
    std::vector<FeatureVector> pool;
};

/// Cache for IDX files so parallel repetitions parse them once.
struct MnistSource {
    IdxImages images;
    std::vector<std::uint8_t> labels;
};

[[nodiscard]] inline StreamData make_stream_data(const ExperimentConfig& rc, const MnistSource* mnist = nullptr) {
    if (rc.stream.dataset == Dataset::sea || rc.stream.dataset == Dataset::circle)
        return {gen_synthetic(rc.stream), synthetic_pretrain_pool(rc.stream, rc.engine.pretrain_size)};
    MnistSource loaded;
    if (!mnist) {
        loaded = {load_idx_images(rc.mnist_images), load_idx_labels(rc.mnist_labels)};
        mnist = &loaded;
    }
    auto ms = build_mnist_streams(rc.stream, mnist->images, mnist->labels, rc.engine.pretrain_size);
    return {std::move(ms.stream), std::move(ms.pool)};
}

[[nodiscard]] inline RunTrace run_repetition(const ExperimentConfig& c, std::size_t r, const MnistSource* mnist = nullptr) {
    const ExperimentConfig rc = resolve_repetition(c, r);
    const StreamData data = make_stream_data(rc, mnist);
    if (rc.engine.method == Method::iforest) {
        IForestEngine engine(rc.engine);
        return run_stream(engine, data.pool, data.stream, rc.fading_factor, rc.stream.seed);
    }
    Engine engine(rc.engine);
    return run_stream(engine, data.pool, data.stream, rc.fading_factor, rc.stream.seed);
}

/// Runs every repetition; in parallel unless serial. A failing repetition is
/// rethrown with its seed attached.
[[nodiscard]] inline std::vector<RunTrace> run_repetitions(const ExperimentConfig& c, bool serial = false) {
    validate(c);
    std::optional<MnistSource> mnist;
    if (c.stream.dataset == Dataset::mnist01 || c.stream.dataset == Dataset::mnist23)
        mnist = MnistSource{load_idx_images(c.mnist_images), load_idx_labels(c.mnist_labels)};
    const MnistSource* src = mnist ? &*mnist : nullptr;

    auto one = [&](std::size_t r) {
        try {
            return run_repetition(c, r, src);
        } catch (const std::exception& ex) {
            throw std::runtime_error("repetition " + std::to_string(r) + " (seed " + std::to_string(c.base_seed + r) +
                                     ") failed: " + ex.what());
        }
    };

    std::vector<RunTrace> traces(c.repetitions);
    const std::size_t workers = serial ? 1 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (workers == 1) {
        for (std::size_t r = 0; r < c.repetitions; ++r) traces[r] = one(r);
        return traces;
    }
    for (std::size_t start = 0; start < c.repetitions; start += workers) {
        std::vector<std::future<RunTrace>> batch;
        const std::size_t stop = std::min(c.repetitions, start + workers);
        for (std::size_t r = start; r < stop; ++r) batch.push_back(std::async(std::launch::async, one, r));
        for (std::size_t r = start; r < stop; ++r) traces[r] = batch[r - start].get();
    }
    return traces;
}

/// Every resolved parameter, including defaults applied implicitly.
[[nodiscard]] inline nlohmann::ordered_json metadata_json(const ExperimentConfig& c, const std::vector<RunTrace>& traces) {
    const auto& e = c.engine;
    nlohmann::ordered_json j;
    j["stream"] = {{"dataset", to_string(c.stream.dataset)},
                   {"length", c.stream.length},
                   {"drift_at", c.stream.drift_at ? nlohmann::ordered_json(*c.stream.drift_at) : nlohmann::ordered_json("none")},
                   {"anomaly_rate", c.stream.anomaly_rate},
                   {"mnist_images", c.mnist_images},
                   {"mnist_labels", c.mnist_labels}};
    j["engine"] = {{"method", to_string(e.method)},
                   {"w_train", e.w_train},
                   {"w_drift", e.w_drift},
                   {"b", e.b},
                   {"p_replace", e.p_replace},
                   {"p_warn", e.p_warn},
                   {"p_alarm", e.p_alarm},
                   {"expiry_time", e.expiry_time},
                   {"pretrain_size", e.pretrain_size},
                   {"pretrain_epochs", e.pretrain_epochs},
                   {"tie_correction", e.tie_correction},
                   {"percentile_method", "nearest_rank"},
                   {"p_value", "two_tailed_normal"},
                   {"rebuild_data", "mov_warn if full, else mov_warn union mov_driftx"}};
    j["ae"] = {{"input_dim", e.ae.input_dim},
               {"hidden_dims", e.ae.hidden_dims},
               {"layer_dims", e.ae.layer_dims()},
               {"learning_rate", e.ae.learning_rate},
               {"minibatch_size", e.ae.minibatch_size},
               {"epochs", e.ae.epochs},
               {"leaky_slope", e.ae.leaky_slope},
               {"init", "he_normal"},
               {"optimizer", "adam(0.9, 0.999, 1e-8)"},
               {"loss", "binary_cross_entropy(eps=1e-7)"}};
    j["iforest"] = {{"n_estimators", e.iforest.n_estimators},
                    {"max_samples", e.iforest.max_samples},
                    {"max_features", e.iforest.max_features},
                    {"contamination", e.iforest.contamination}};
    j["experiment"] = {{"repetitions", c.repetitions},
                       {"base_seed", c.base_seed},
                       {"fading_factor", c.fading_factor},
                       {"output_dir", c.output_dir}};
    nlohmann::ordered_json reps = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < traces.size(); ++r) {
        const auto& tr = traces[r];
        std::size_t warn_onsets = 0;
        for (std::size_t i = 0; i < tr.rows.size(); ++i)
            if (tr.rows[i].flag_warn && (i == 0 || !tr.rows[i - 1].flag_warn)) ++warn_onsets;
        reps.push_back({{"repetition", r},
                        {"seed", tr.seed},
                        {"trace", "trace_rep" + std::to_string(r) + ".csv"},
                        {"alarms", tr.alarm_steps()},
                        {"warnings", warn_onsets}});
    }
    j["runs"] = reps;
    return j;
}

struct ExperimentResult {
    std::vector<RunTrace> traces;
    Aggregate aggregate;
};

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

/// Writes trace_rep<r>.csv, aggregate.csv and metadata.json into c.output_dir.
inline ExperimentResult cmd_run(const ExperimentConfig& c, bool serial = false) {
    ExperimentResult res;
    res.traces = run_repetitions(c, serial);
    res.aggregate = aggregate(res.traces);
    ensure_dir(c.output_dir);
    const std::filesystem::path out(c.output_dir);
    for (std::size_t r = 0; r < res.traces.size(); ++r)
        write_text_file((out / ("trace_rep" + std::to_string(r) + ".csv")).string(), trace_to_csv(res.traces[r]));
    write_text_file((out / "aggregate.csv").string(), aggregate_to_csv(res.aggregate));
    write_text_file((out / "metadata.json").string(), metadata_json(c, res.traces).dump(2) + "\n");
    return res;
}

/// Writes stream.csv and pool.csv for repetition 0 of the config (seed = base_seed).
inline void cmd_generate(const ExperimentConfig& c) {
    c.stream.validate();
    const ExperimentConfig rc = resolve_repetition(c, 0);
    const StreamData data = make_stream_data(rc);
    const std::size_t dim = dataset_dim(rc.stream.dataset);
    ensure_dir(c.output_dir);
    const std::filesystem::path out(c.output_dir);
    write_text_file((out / "stream.csv").string(), stream_to_csv(data.stream, dim));
    std::vector<LabeledInstance> pool_rows;
    pool_rows.reserve(data.pool.size());
    for (const auto& x : data.pool) pool_rows.push_back({x, 0});
    write_text_file((out / "pool.csv").string(), stream_to_csv(pool_rows, dim));
}

[[nodiscard]] inline bool same_stream(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.stream.dataset == b.stream.dataset && a.stream.length == b.stream.length && a.stream.drift_at == b.stream.drift_at &&
           a.stream.anomaly_rate == b.stream.anomaly_rate && a.base_seed == b.base_seed && a.repetitions == b.repetitions &&
           a.mnist_images == b.mnist_images && a.mnist_labels == b.mnist_labels;
}

/// Runs each config on the shared stream and writes compare.csv (one mean and
/// stderr column per method) into out_dir.
inline std::string cmd_compare(const std::vector<ExperimentConfig>& configs, const std::string& out_dir, bool serial = false) {
    if (configs.empty()) throw InputError("compare needs at least one config");
    for (const auto& c : configs)
        if (!same_stream(configs.front(), c)) throw InputError("compare: configs do not share the same stream specification");
    std::vector<std::pair<std::string, Aggregate>> groups;
    std::map<std::string, int> seen;
    for (const auto& c : configs) {
        std::string label(to_string(c.engine.method));
        if (const int n = seen[label]++; n > 0) label += "_" + std::to_string(n + 1);
        groups.emplace_back(label, aggregate(run_repetitions(c, serial)));
    }
    const std::string csv = merge_aggregates_csv(groups);
    ensure_dir(out_dir);
    write_text_file((std::filesystem::path(out_dir) / "compare.csv").string(), csv);
    return csv;
}

}  // namespace straem
