#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace edgesel {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a master seed with up to two stream coordinates.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Random source whose variates are identical on every platform.
///
/// std::mt19937_64 is fully specified by the standard, but the std
/// distributions are not, so all transforms here are written out.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1); safe for logarithms.
    double uniform_open();
    /// Uniform integer on [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n);
    double normal();
    /// Unit-mean exponential.
    double exponential();
    /// log of a Gamma(shape, 1) variate; stays finite for very small shapes.
    double log_gamma_variate(double shape);

private:
    std::mt19937_64 engine_;
};

}  // namespace edgesel
