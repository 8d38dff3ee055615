// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "smi/linalg.hpp"
#include "smi/rng.hpp"

namespace smi {

/// Scenario parameters. Powers are linear (watts), angles in radians.
struct SceneConfig {
    Index n_tx = 16;
    Index n_rx = 16;
    Index n_comm = 4;
    Index n_frames = 16;
    Index n_targets = 0;
    double sigma2_s = 1.0;
    double sigma2_c = 1.0;
    double power_budget = 1.0;
    std::vector<double> target_angles_tx;
    std::vector<double> target_angles_rx;
    /// Per-target power; empty means unit gains.
    std::vector<double> target_gains;
    double antenna_spacing = 0.5;
    /// Average receive SNR of the communication link at Phi = (P/N_T) I.
    double comm_snr = 100.0;
    std::uint64_t seed = 1;

    /// Throws DomainError naming the violated constraint.
    void validate() const;

    double gain(Index k) const;
};

struct CorrelationPair {
    PsdMatrix r_tx;  // N_T x N_T
    PsdMatrix r_rx;  // N_R x N_R
};

struct CommChannel {
    CMatrix h;  // N_C x N_T
};

/// ULA response exp(j 2π d i sin θ), i = 0..n-1.
CVector steering_vector(double theta, Index n, double spacing);

/// R_T = Σ_k g_k a_T a_T^H and R_R = Σ_k a_R a_R^H.
CorrelationPair build_correlations(const SceneConfig& cfg);

/// Transmit signal S (N_T x N_S) with i.i.d. CN(0, 1/N_S) entries.
CMatrix sample_signal(const SceneConfig& cfg, RngStream& stream);
CMatrix sample_signal(Index n_tx, Index n_frames, RngStream& stream);

/// h_s = R^{1/2} w with R = R_R ⊗ R_T, w ~ CN(0, I).
CVector sample_target_channel(const CorrelationPair& pair, RngStream& stream);

/// I.i.d. CN(0,1) channel scaled so that tr(H Φ H^H) / (N_C σ_c²) equals
/// cfg.comm_snr at Φ = (P/N_T) I. Drawn from the comm_channel stream.
CommChannel make_comm_channel(const SceneConfig& cfg);

/// log det(I + σ_c^{-2} H Φ H^H) in nats.
double comm_mi(const CommChannel& ch, const PsdMatrix& phi, double sigma2_c);
double comm_mi(const CommChannel& ch, const CMatrix& phi, double sigma2_c);

/// Gradient of comm_mi: σ_c^{-2} H^H (I + σ_c^{-2} H Φ H^H)^{-1} H.
HermitianMatrix comm_mi_gradient(const CommChannel& ch, const CMatrix& phi, double sigma2_c);

/// Largest comm_mi over {Φ ⪰ 0, tr Φ ≤ P} (water-filling), with the maximizer.
struct WaterFilling {
    double capacity;
    PsdMatrix phi;
};
WaterFilling water_filling(const CommChannel& ch, double power, double sigma2_c);

/// Uniform precoder covariance (P/N) I.
PsdMatrix isotropic_covariance(Index n, double power);

}  // namespace smi
