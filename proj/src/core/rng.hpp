#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace bml {

inline constexpr const char* kRngAlgorithm =
    "mt19937_64 per stream; stream seed = splitmix64 chain over (seed, round, index, phase, step); "
    "uniform = top 53 bits * 2^-53; normal = Box-Muller";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    h = splitmix64(h ^ d);
    return h;
}

// Thin wrapper over the standard engine with an explicit variate conversion,
// so the number of engine calls per uniform is always exactly one.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform index in [0, n); one engine call.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// What a stream is used for. Values are part of the reproducibility contract.
enum class Phase : std::uint64_t {
    estep = 1,
    cd_chain = 2,
    pcd_chain = 3,
    pcd_init = 4,
    evaluation = 5,
    ais = 6,
    shuffle = 7,
    init = 8,
    data = 9,
    bootstrap = 10,
};

// Keyed family of independent streams. A stream is fully determined by
// (seed, round, index, phase, step); two code paths asking for the same key
// read the same variates.
struct Streams {
    std::uint64_t seed = 0;
    std::uint64_t round = 0;

    Rng rng(std::uint64_t index, Phase phase, std::uint64_t step = 0) const {
        return Rng(mix_seed(seed, round, index, static_cast<std::uint64_t>(phase), step));
    }

    Streams at_round(std::uint64_t r) const { return Streams{seed, r}; }
};

}  // namespace bml
