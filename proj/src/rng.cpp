// SPDX-License-Identifier: Apache-2.0
#include "smi/rng.hpp"

#include <cmath>
#include <numbers>

namespace smi {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, Stream stream, std::uint64_t trial)
    : RngStream(seed, static_cast<std::uint64_t>(stream), trial) {}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
    const std::uint64_t key = mix64(mix64(mix64(seed) ^ stream) ^ trial);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(trial)};
    engine_.seed(seq);
}

double RngStream::uniform() {
    // 53 random bits mapped to (0, 1].
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - uniform()); }

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Complex RngStream::complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

CMatrix RngStream::complex_gaussian(Index rows, Index cols, double variance) {
    CMatrix m(rows, cols);
    // Column-major fill keeps the draw order fixed for a given shape.
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = complex_normal(variance);
    }
    return m;
}

}  // namespace smi
