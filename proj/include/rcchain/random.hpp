// Seeded random source shared by every simulated component.
//
// Draws are derived directly from mt19937_64 bits so a given seed yields the
// same sequence on every standard library, which the determinism contract of
// the simulator relies on.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rcchain {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform();

    // Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    // Exponential variate with the given rate (mean 1/rate).
    double exponential(double rate);

    // Independent child stream; the parent advances by one draw.
    Rng fork();

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive stream seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace rcchain
