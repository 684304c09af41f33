#pragma once

// Seeded data streams with abrupt drift and controlled imbalance.
//
// Each step draws the class first (anomalous with probability anomaly_rate),
// then rejection-samples a point from that class's region. Sea and Circle
// swap the normal and anomalous regions after drift_at.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "straem/common.hpp"

namespace straem {

struct LabeledInstance {
    FeatureVector x;
    int y = 0;  // 1 = anomalous; hidden from detectors
};

enum class Dataset { sea, circle, mnist01, mnist23 };

[[nodiscard]] inline std::string_view to_string(Dataset d) noexcept {
    switch (d) {
        case Dataset::sea: return "sea";
        case Dataset::circle: return "circle";
        case Dataset::mnist01: return "mnist01";
        case Dataset::mnist23: return "mnist23";
    }
    return "unknown";
}

[[nodiscard]] inline Dataset parse_dataset(std::string_view s) {
    if (s == "sea") return Dataset::sea;
    if (s == "circle") return Dataset::circle;
    if (s == "mnist01") return Dataset::mnist01;
    if (s == "mnist23") return Dataset::mnist23;
    throw ConfigError("unknown dataset '" + std::string(s) + "' (expected sea|circle|mnist01|mnist23)");
}

[[nodiscard]] inline std::size_t dataset_dim(Dataset d) noexcept {
    return (d == Dataset::sea || d == Dataset::circle) ? 2 : 784;
}

struct StreamSpec {
    Dataset dataset = Dataset::sea;
    std::size_t length = 10000;
    std::optional<std::size_t> drift_at = 5000;  // nullopt: stationary stream
    double anomaly_rate = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (length == 0) throw ConfigError("stream length must be positive");
        if (drift_at && (*drift_at == 0 || *drift_at >= length))
            throw ConfigError("drift_at must satisfy 0 < drift_at < length");
        if (!(anomaly_rate >= 0.0 && anomaly_rate < 1.0)) throw ConfigError("anomaly_rate must lie in [0,1)");
    }

    /// Steps are 1-based; step t is post-drift when t > drift_at.
    [[nodiscard]] bool post_drift(std::size_t t) const noexcept { return drift_at && t > *drift_at; }
};

inline constexpr std::uint64_t kStreamTag = 11;
inline constexpr std::uint64_t kPoolTag = 12;
inline constexpr std::size_t kPretrainPoolSize = 2000;

/// Sea: x1 + x2 <= 7 on the raw [0,10]^2 scale.
[[nodiscard]] inline bool sea_positive(double x1_raw, double x2_raw) noexcept { return x1_raw + x2_raw <= 7.0; }

/// Circle: strictly inside the circle centred at (0.4, 0.5) with radius 0.2.
[[nodiscard]] inline bool circle_positive(double x1, double x2) noexcept {
    const double dx = x1 - 0.4, dy = x2 - 0.5;
    return dx * dx + dy * dy < 0.2 * 0.2;
}

/// Ground-truth label of a synthetic point (features already rescaled to [0,1]).
/// Before drift the positive region is anomalous; after drift the roles swap.
[[nodiscard]] inline int synthetic_label(Dataset d, const FeatureVector& x, bool post_drift) {
    bool positive = false;
    if (d == Dataset::sea)
        positive = sea_positive(x[0] * 10.0, x[1] * 10.0);
    else if (d == Dataset::circle)
        positive = circle_positive(x[0], x[1]);
    else
        throw ConfigError("synthetic_label called for an image dataset");
    return (positive != post_drift) ? 1 : 0;
}

/// Sequential generator for Sea and Circle.
class SyntheticStream {
public:
    SyntheticStream(const StreamSpec& spec, std::uint64_t tag = kStreamTag) : spec_(spec), rng_(mix_seed(spec.seed, tag)) {
        spec_.validate();
        if (spec_.dataset != Dataset::sea && spec_.dataset != Dataset::circle)
            throw ConfigError("SyntheticStream supports sea and circle only");
    }

    LabeledInstance next() {
        ++t_;
        std::bernoulli_distribution anomalous(spec_.anomaly_rate);
        const int y = anomalous(rng_) ? 1 : 0;
        return {sample(y, spec_.post_drift(t_)), y};
    }

    /// Rejection-samples a point whose label under the given drift phase is y.
    FeatureVector sample(int y, bool post_drift) {
        const double scale = spec_.dataset == Dataset::sea ? 10.0 : 1.0;
        std::uniform_real_distribution<double> uni(0.0, scale);
        for (;;) {
            FeatureVector x{uni(rng_) / scale, uni(rng_) / scale};
            if (synthetic_label(spec_.dataset, x, post_drift) == y) return x;
        }
    }

    [[nodiscard]] std::size_t time() const noexcept { return t_; }

private:
    StreamSpec spec_;
    std::mt19937_64 rng_;
    std::size_t t_ = 0;
};

[[nodiscard]] inline std::vector<LabeledInstance> gen_synthetic(const StreamSpec& spec) {
    SyntheticStream gen(spec);
    std::vector<LabeledInstance> out;
    out.reserve(spec.length);
    for (std::size_t i = 0; i < spec.length; ++i) out.push_back(gen.next());
    return out;
}

[[nodiscard]] inline std::vector<LabeledInstance> gen_sea(StreamSpec spec) {
    if (spec.dataset != Dataset::sea) throw ConfigError("gen_sea needs dataset = sea");
    return gen_synthetic(spec);
}

[[nodiscard]] inline std::vector<LabeledInstance> gen_circle(StreamSpec spec) {
    if (spec.dataset != Dataset::circle) throw ConfigError("gen_circle needs dataset = circle");
    return gen_synthetic(spec);
}

/// 2000 pre-drift normal instances drawn from an RNG stream separate from the evaluation stream.
[[nodiscard]] inline std::vector<FeatureVector> synthetic_pretrain_pool(const StreamSpec& spec,
                                                                        std::size_t size = kPretrainPoolSize) {
    SyntheticStream gen(spec, kPoolTag);
    std::vector<FeatureVector> pool;
    pool.reserve(size);
    for (std::size_t i = 0; i < size; ++i) pool.push_back(gen.sample(0, false));
    return pool;
}

// --- CSV --------------------------------------------------------------------

inline void append_number(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

/// Header x_0,...,x_{d-1},y followed by one row per instance. With labels=false the y column is omitted.
[[nodiscard]] inline std::string stream_to_csv(const std::vector<LabeledInstance>& rows, std::size_t dim,
                                               bool labels = true) {
    std::string out;
    for (std::size_t j = 0; j < dim; ++j) {
        if (j) out += ',';
        out += "x_" + std::to_string(j);
    }
    if (labels) out += ",y";
    out += '\n';
    for (const auto& r : rows) {
        if (r.x.size() != dim) throw InputError("stream_to_csv: row dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) {
            if (j) out += ',';
            append_number(out, r.x[j]);
        }
        if (labels) {
            out += ',';
            out += std::to_string(r.y);
        }
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw IoError("failed writing '" + path + "'");
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

[[nodiscard]] inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

[[nodiscard]] inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

/// Parses the stream CSV format; a trailing y column is optional (absent -> y = 0).
[[nodiscard]] inline std::vector<LabeledInstance> stream_from_csv(std::string_view text, const std::string& name = "csv") {
    std::vector<LabeledInstance> rows;
    std::size_t pos = 0, line_no = 0;
    bool has_y = false;
    std::size_t dim = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (line_no == 1) {
            has_y = cells.back() == "y";
            dim = cells.size() - (has_y ? 1 : 0);
            for (std::size_t j = 0; j < dim; ++j)
                if (cells[j] != "x_" + std::to_string(j)) throw InputError(name + ": unexpected header column '" + std::string(cells[j]) + "'");
            continue;
        }
        if (cells.size() != dim + (has_y ? 1 : 0))
            throw InputError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim + has_y) + " columns");
        LabeledInstance r;
        r.x.reserve(dim);
        const std::string where = name + ":" + std::to_string(line_no);
        for (std::size_t j = 0; j < dim; ++j) r.x.push_back(parse_double(cells[j], where));
        if (has_y) r.y = static_cast<int>(parse_double(cells[dim], where));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace straem
