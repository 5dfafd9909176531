#pragma once

#include <cstdint>
#include <random>

namespace diffcd {

/// What a random stream is used for. Streams for different purposes never overlap.
enum class StreamPurpose : std::uint64_t {
    Init = 1,
    CloudBatch = 2,
    Eikonal = 3,
    SurfaceDraw = 4,
    Ssa = 5,
    BankRefresh = 6,
    MeshSampling = 7,
    Experiment = 8,
    Generator = 9,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Random engine keyed by (seed, counter, purpose). Two streams with the same key
/// produce the same sequence; the key is all that has to be stored to resume.
class Rng {
public:
    using engine_type = std::mt19937_64;
    using result_type = engine_type::result_type;

    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Rng stream(std::uint64_t seed, std::uint64_t counter, StreamPurpose purpose) {
        std::uint64_t key = mix64(seed);
        key = mix64(key ^ counter);
        key = mix64(key ^ static_cast<std::uint64_t>(purpose));
        return Rng(key);
    }

    static constexpr result_type min() { return engine_type::min(); }
    static constexpr result_type max() { return engine_type::max(); }
    result_type operator()() { return engine_(); }

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

private:
    engine_type engine_;
};

}  // namespace diffcd
