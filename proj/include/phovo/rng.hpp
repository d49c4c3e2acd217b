#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace phovo {

/// Deterministic random source. All conversions from raw engine output are
/// done here so that streams are reproducible across platforms and compilers
/// (std::mt19937_64 output is standardized, the standard distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t integer(std::uint64_t n) {
        if (n == 0)
            return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Independent child stream; stable under reordering of sibling streams.
    Rng derive(std::uint64_t stream) const {
        return Rng(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL)));
    }

    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace phovo
