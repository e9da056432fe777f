#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

#include "rsvhmc/error.hpp"

namespace rsvhmc {

/// SplitMix64 finalizer; maps (master seed, stream index) to a child seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::uint64_t stream) noexcept {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seeded random source owned by a single chain. Satisfies
/// UniformRandomBitGenerator so it can drive any <random> distribution.
class Rng {
public:
    using result_type = std::mt19937_64::result_type;

    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Independent generator for sub-stream `stream`.
    [[nodiscard]] Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    /// Uniform on [0, 1).
    double uniform() { return std::generate_canonical<double, 64>(engine_); }

    double gamma(double shape) {
        std::gamma_distribution<double> g(shape, 1.0);
        return g(engine_);
    }

    /// Draw from InverseGamma(shape, scale): density proportional to
    /// x^{-shape-1} exp(-scale / x).
    double inverse_gamma(double shape, double scale) { return scale / gamma(shape); }

    void save(std::ostream& os) const { os << seed_ << ' ' << engine_ << ' ' << normal_; }

    void load(std::istream& is) {
        is >> seed_ >> engine_ >> normal_;
        if (!is) throw IoError("corrupt random generator state");
    }

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.seed_ == b.seed_ && a.engine_ == b.engine_ && a.normal_ == b.normal_;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace rsvhmc
