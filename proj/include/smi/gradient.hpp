// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "smi/asymptotic.hpp"
#include "smi/linalg.hpp"

namespace smi {

// Gradients G are returned so that the real directional derivative of a
// metric along a Hermitian direction E is kappa * tr(G E).

/// ∂δ(ρ)/∂Φ*: R_T^{1/2} M² R_T^{1/2} / (N_S − α² tr((TM)²)).
HermitianMatrix grad_delta(const PsdMatrix& phi, const PsdMatrix& r_tx, double rho, double n_frames);

/// Σ_j α_j R_T^{1/2} M_j R_T^{1/2}.
HermitianMatrix grad_smi(const AsymptoticPoint& point);
HermitianMatrix grad_smi(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames);

HermitianMatrix grad_elmmse(const AsymptoticPoint& point);
HermitianMatrix grad_elmmse(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                            double n_frames);

/// Gradient of the N_S-free upper bound Σ_j log det(I + λ_j T).
HermitianMatrix grad_smi_upper(const AsymptoticPoint& point);
HermitianMatrix grad_smi_upper(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s);

/// Scale factor relating central differences to tr(G E), determined once per
/// process from f(Φ) = tr(AΦ) and reused by every later check.
double calibrated_kappa();

struct GradientReport {
    HermitianMatrix grad;
    double kappa = 1.0;
    double fd_relative_error = 0.0;
};

using MatrixMetric = std::function<double(const CMatrix& phi)>;

inline constexpr double kFdRelativeStep = 1e-5;
inline constexpr double kFdTolerance = 1e-6;

/// Compares central differences of `metric` at `phi` along `directions` random
/// unit-Frobenius Hermitian directions with kappa * tr(grad E), kappa being the
/// calibrated value. Per-direction error is |FD − kappa tr(GE)| / (|FD| + ε)
/// with ε = max(1e-8 ‖G‖_F, rounding floor of the quotient / tol). Throws
/// ConventionError when the worst direction exceeds tol.
GradientReport fd_check(const MatrixMetric& metric, const HermitianMatrix& grad, const CMatrix& phi,
                        int directions, std::uint64_t seed = 1, double tol = kFdTolerance);

/// Random Hermitian matrix with unit Frobenius norm.
CMatrix random_hermitian_direction(Index n, std::uint64_t seed, std::uint64_t index);

}  // namespace smi
