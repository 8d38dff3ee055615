// SPDX-License-Identifier: Apache-2.0
// Random scenes and matrices shared by the unit tests.
#pragma once

#include <cmath>
#include <cstdint>

#include "smi/linalg.hpp"
#include "smi/rng.hpp"
#include "smi/scene.hpp"

namespace smi::test {

inline CMatrix random_hermitian(RngStream& rng, Index n) {
    const CMatrix g = rng.complex_gaussian(n, n);
    return 0.5 * (g + g.adjoint());
}

/// B B^H / n plus a ridge, rescaled to trace `power`.
inline PsdMatrix random_psd(RngStream& rng, Index n, double power = 1.0, double ridge = 0.05) {
    const CMatrix b = rng.complex_gaussian(n, n);
    CMatrix m = b * b.adjoint() / static_cast<double>(n) + ridge * CMatrix::Identity(n, n);
    m *= power / m.trace().real();
    return PsdMatrix::trusted(m);
}

/// Rank-r PSD matrix with trace `power`.
inline PsdMatrix random_low_rank_psd(RngStream& rng, Index n, Index r, double power = 1.0) {
    const CMatrix b = rng.complex_gaussian(n, r);
    CMatrix m = b * b.adjoint();
    m *= power / m.trace().real();
    return PsdMatrix::trusted(m);
}

inline CMatrix random_unitary(RngStream& rng, Index n) {
    const CMatrix g = rng.complex_gaussian(n, n);
    return Eigen::HouseholderQR<CMatrix>(g).householderQ() * CMatrix::Identity(n, n);
}

/// Scene with distinct angles in [-60°, 60°] and gains in [0.5, 1.5].
inline SceneConfig random_scene(std::uint64_t seed, Index n_tx, Index n_rx, Index k, Index n_frames,
                                double sigma2_s) {
    RngStream rng(seed, Stream::test_scene, 1000);
    SceneConfig cfg;
    cfg.n_tx = n_tx;
    cfg.n_rx = n_rx;
    cfg.n_targets = k;
    cfg.n_frames = n_frames;
    cfg.sigma2_s = sigma2_s;
    cfg.seed = seed;
    const double span = 2.0 * M_PI / 3.0;
    for (Index i = 0; i < k; ++i) {
        // Stratified draws keep the angles distinct.
        const double lo = -span / 2.0 + span * static_cast<double>(i) / static_cast<double>(k);
        const double hi = lo + span / static_cast<double>(k);
        cfg.target_angles_tx.push_back(rng.uniform(lo, hi));
        cfg.target_angles_rx.push_back(rng.uniform(lo, hi));
        cfg.target_gains.push_back(rng.uniform(0.5, 1.5));
    }
    return cfg;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace smi::test
