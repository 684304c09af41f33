#pragma once

// IDX ingestion and the two MNIST drift streams.
//
// mnist01: digit 0 normal, digit 1 anomalous; after drift every image is
//          translated by 3 pixels per axis (random sign, zero fill).
// mnist23: 0 normal / 1 anomalous before drift, 2 normal / 3 anomalous after.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "straem/common.hpp"
#include "straem/streams.hpp"

namespace straem {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
/// round(0.10 * 28)
inline constexpr int kMnistShiftPixels = 3;

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image

    [[nodiscard]] FeatureVector image(std::size_t i) const {
        const std::size_t n = rows * cols;
        FeatureVector x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = pixels[i * n + k] / 255.0;
        return x;
    }
};

namespace detail {

inline std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open IDX file '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset) {
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace detail

[[nodiscard]] inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& buf, const std::string& path) {
    if (buf.size() < 16) throw IoError("IDX image file '" + path + "' is truncated (header)");
    if (detail::read_be32(buf, 0) != kIdxImageMagic) throw IoError("IDX image file '" + path + "' has a bad magic number");
    IdxImages img;
    img.count = detail::read_be32(buf, 4);
    img.rows = detail::read_be32(buf, 8);
    img.cols = detail::read_be32(buf, 12);
    if (img.rows == 0 || img.cols == 0) throw IoError("IDX image file '" + path + "' has zero image dimensions");
    const std::size_t need = img.count * img.rows * img.cols;
    if (buf.size() - 16 != need)
        throw IoError("IDX image file '" + path + "' holds " + std::to_string(buf.size() - 16) + " pixel bytes, header implies " +
                      std::to_string(need));
    img.pixels.assign(buf.begin() + 16, buf.end());
    return img;
}

[[nodiscard]] inline std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& buf, const std::string& path) {
    if (buf.size() < 8) throw IoError("IDX label file '" + path + "' is truncated (header)");
    if (detail::read_be32(buf, 0) != kIdxLabelMagic) throw IoError("IDX label file '" + path + "' has a bad magic number");
    const std::size_t count = detail::read_be32(buf, 4);
    if (buf.size() - 8 != count)
        throw IoError("IDX label file '" + path + "' holds " + std::to_string(buf.size() - 8) + " labels, header says " +
                      std::to_string(count));
    return {buf.begin() + 8, buf.end()};
}

[[nodiscard]] inline IdxImages load_idx_images(const std::string& path) { return parse_idx_images(detail::read_binary(path), path); }

[[nodiscard]] inline std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
    return parse_idx_labels(detail::read_binary(path), path);
}

/// Translates a rows x cols image by (dx, dy) pixels, zero-filling uncovered pixels.
[[nodiscard]] inline FeatureVector translate_image(const FeatureVector& img, std::size_t rows, std::size_t cols, int dx, int dy) {
    FeatureVector out(img.size(), 0.0);
    const auto r_n = static_cast<int>(rows), c_n = static_cast<int>(cols);
    for (int r = 0; r < r_n; ++r) {
        const int src_r = r - dy;
        if (src_r < 0 || src_r >= r_n) continue;
        for (int c = 0; c < c_n; ++c) {
            const int src_c = c - dx;
            if (src_c < 0 || src_c >= c_n) continue;
            out[static_cast<std::size_t>(r * c_n + c)] = img[static_cast<std::size_t>(src_r * c_n + src_c)];
        }
    }
    return out;
}

struct MnistStreams {
    std::vector<LabeledInstance> stream;
    std::vector<FeatureVector> pool;  // pre-drift normal images, disjoint from those used in the stream
};

/// Builds the evaluation stream and pretrain pool. Pool images are held out of
/// the pre-drift normal digit so the two never share an image.
[[nodiscard]] inline MnistStreams build_mnist_streams(const StreamSpec& spec, const IdxImages& images,
                                                      const std::vector<std::uint8_t>& labels,
                                                      std::size_t pool_size = kPretrainPoolSize) {
    spec.validate();
    if (spec.dataset != Dataset::mnist01 && spec.dataset != Dataset::mnist23)
        throw ConfigError("build_mnist_streams needs dataset mnist01 or mnist23");
    if (images.count != labels.size()) throw InputError("IDX image and label counts differ");

    std::array<std::vector<std::size_t>, 10> by_digit;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 10) by_digit[labels[i]].push_back(i);

    std::mt19937_64 pool_rng(mix_seed(spec.seed, kPoolTag));
    auto& zeros = by_digit[0];
    std::shuffle(zeros.begin(), zeros.end(), pool_rng);
    const std::size_t held = std::min(pool_size, zeros.size() / 2);
    MnistStreams out;
    for (std::size_t i = 0; i < held; ++i) out.pool.push_back(images.image(zeros[i]));
    zeros.erase(zeros.begin(), zeros.begin() + static_cast<std::ptrdiff_t>(held));

    const bool is23 = spec.dataset == Dataset::mnist23;
    for (int d : {0, 1, 2, 3}) {
        if ((d >= 2 && !is23)) continue;
        if (by_digit[static_cast<std::size_t>(d)].empty())
            throw InputError("MNIST data contains no images of digit " + std::to_string(d));
    }

    std::mt19937_64 rng(mix_seed(spec.seed, kStreamTag));
    std::bernoulli_distribution anomalous(spec.anomaly_rate);
    std::bernoulli_distribution coin(0.5);
    out.stream.reserve(spec.length);
    for (std::size_t t = 1; t <= spec.length; ++t) {
        const bool post = spec.post_drift(t);
        const int y = anomalous(rng) ? 1 : 0;
        int digit = y;
        if (is23 && post) digit += 2;
        const auto& idx = by_digit[static_cast<std::size_t>(digit)];
        std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
        FeatureVector x = images.image(idx[pick(rng)]);
        if (!is23 && post) {
            const int dx = coin(rng) ? kMnistShiftPixels : -kMnistShiftPixels;
            const int dy = coin(rng) ? kMnistShiftPixels : -kMnistShiftPixels;
            x = translate_image(x, images.rows, images.cols, dx, dy);
        }
        out.stream.push_back({std::move(x), y});
    }
    return out;
}

[[nodiscard]] inline MnistStreams load_mnist_streams(const StreamSpec& spec, const std::string& images_path,
                                                     const std::string& labels_path) {
    return build_mnist_streams(spec, load_idx_images(images_path), load_idx_labels(labels_path));
}

}  // namespace straem
