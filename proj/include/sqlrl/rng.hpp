#pragma once

#include <cstdint>

namespace sqlrl {

// splitmix64-based generator. Chosen over <random> engines+distributions so
// that sampled streams are identical across compilers and platforms, which
// the run-manifest reproducibility contract depends on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Splittable seeding: one root seed fans out into independent streams so
/// module-level tests and CLI runs draw from the same deterministic tree.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t x = detail::mix64(root ^ 0xA0761D6478BD642FULL);
    x = detail::mix64(x ^ (stream + 1) * 0xE7037ED1A0B428DBULL);
    x = detail::mix64(x ^ (index + 1) * 0x8EBC6AF09C88C6E3ULL);
    return x;
}

}  // namespace sqlrl
