// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "smi/linalg.hpp"

namespace smi {

/// Stream identifiers; each random quantity in a scenario draws from its own
/// stream so adding draws to one never perturbs another.
enum class Stream : std::uint64_t {
    signal = 1,
    target_channel = 2,
    comm_channel = 3,
    angles = 4,
    test_scene = 5,
    fd_directions = 6,
};

/// Generator keyed by (seed, stream, trial). Two handles with the same key
/// produce identical sequences regardless of which thread creates them, so
/// Monte-Carlo trials can run in any order.
class RngStream {
  public:
    RngStream(std::uint64_t seed, Stream stream, std::uint64_t trial = 0);
    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial = 0);

    /// Uniform on (0, 1].
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Standard real normal (Box-Muller; platform independent).
    double normal();
    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    Complex complex_normal(double variance = 1.0);

    /// rows x cols matrix of i.i.d. CN(0, variance) entries.
    CMatrix complex_gaussian(Index rows, Index cols, double variance = 1.0);

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer, exposed for key derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace smi
