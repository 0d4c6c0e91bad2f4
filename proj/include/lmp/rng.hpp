// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "lmp/tensor.hpp"

namespace lmp {

/// Seeded pseudorandom stream. Wraps std::mt19937_64, whose output sequence is
/// fixed by the standard; the uniform and Gaussian transforms are done here
/// because the std distributions are implementation-defined and would break
/// byte-for-byte reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Standard normal via Box-Muller; caches the second variate.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stream ids used to derive independent substreams from one run seed.
enum class Stream : std::uint64_t {
    weights = 1,
    target_noise = 2,
    reference_noise = 3,
    prompts = 4,
    cli_noise = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t sub = 0) {
    return Rng(seed, (static_cast<std::uint64_t>(stream) << 32) ^ sub);
}

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0);

}  // namespace lmp
