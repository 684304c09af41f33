#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace straem {

using FeatureVector = std::vector<double>;

/// Invalid configuration values (dimensions, thresholds, sizes).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Caller passed data that does not fit the receiver (dimension or length mismatch).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An operation was called in a state where its precondition does not hold.
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Reading or writing an external file failed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; used to derive independent RNG seeds from a run seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace straem
