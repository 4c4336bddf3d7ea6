#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fledge::rng {

// All randomness in the project flows through this generator so that every
// stream can be derived statelessly from (master_seed, purpose path). That is
// what makes socket mode and in-process mode draw identical values: neither
// depends on call ordering, only on the derivation path.

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash-combine a seed with a derivation path, e.g. derive(seed, {kTrain, client, round}).
inline uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> path) {
    uint64_t s = seed;
    for (uint64_t p : path) {
        s ^= splitmix64(p) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    }
    return s;
}

// Stream purpose tags. Arbitrary distinct constants.
enum Purpose : uint64_t {
    kModelInit = 1,
    kDataGen = 2,
    kTrainShuffle = 3,
    kContextWalk = 4,
    kCostNoise = 5,
    kRandomSelect = 6,
    kEstimatorInit = 7,
    kGlobalTest = 8,
    kFuzz = 9,
};

/// Small deterministic engine (xorshift-star flavour via splitmix64).
/// Self-contained so results do not depend on the standard library's
/// distribution implementations.
class Engine {
public:
    explicit Engine(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// exp(sigma * N(0,1)), mean ~ exp(sigma^2/2).
    double lognormal(double sigma) { return std::exp(sigma * normal()); }

private:
    uint64_t state_;
};

inline Engine make_engine(uint64_t seed, std::initializer_list<uint64_t> path) {
    return Engine(derive(seed, path));
}

} // namespace fledge::rng
