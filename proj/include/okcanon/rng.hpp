#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace okcanon {

// Deterministic random source. All stochastic operations in the library draw
// through this wrapper so that a (seed, code path) pair fully determines the
// sampled values. std::mt19937_64 has a standard-specified output sequence;
// the Gaussian transform is hand-rolled Box-Muller because the distribution
// adapters in <random> are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in (0, 1].
    double uniform01() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cosine branch).
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) { return engine_() % n; }

    Eigen::VectorXd gaussian_vector(Eigen::Index dim) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal();
        return v;
    }

    // Derives an independent stream seed from (base, salt...). splitmix64
    // finalizer; used to give every epoch/purpose its own substream.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
        return mix(mix(a, b), c);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace okcanon
