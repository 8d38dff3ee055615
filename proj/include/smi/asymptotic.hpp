// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "smi/linalg.hpp"
#include "smi/scene.hpp"

namespace smi {

inline constexpr double kFixedPointTol = 1e-12;
inline constexpr int kFixedPointMaxIters = 10000;

/// Solution δ(ρ) of δ = (1/N_S) tr(T (I + α T)^{-1}), α = ρ/(1+ρδ).
struct FixedPointSolution {
    double rho = 0.0;
    double delta = 0.0;
    double alpha = 0.0;
    HermitianMatrix m_t;  // (I + α T)^{-1}
    double residual = 0.0;
    int iterations = 0;
};

/// Same fixed point expressed in the eigenbasis of T. Every metric below is
/// evaluated from this form; the matrix form above is for callers that need M.
struct SpectralFixedPoint {
    double rho = 0.0;
    double delta = 0.0;
    double alpha = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Scalar fixed point on the eigenvalues of T. n_frames may be non-integer.
SpectralFixedPoint solve_fixed_point_spectrum(const RVector& t_eigs, double rho, double n_frames,
                                              double tol = kFixedPointTol);

/// R_T^{1/2} Φ R_T^{1/2}.
PsdMatrix t_of_phi(const PsdMatrix& phi, const PsdMatrix& r_tx);

FixedPointSolution solve_fixed_point(const PsdMatrix& t, double rho, double n_frames,
                                     double tol = kFixedPointTol);

/// Nonzero eigenvalues of σ_s^{-2} R_R (the λ_{R,j}), descending.
RVector receive_eigenvalues(const PsdMatrix& r_rx, double sigma2_s);

/// Everything the deterministic-equivalent formulas need for one (Φ, scene, N_S)
/// point: T in its eigenbasis, R_T^{1/2}, and one fixed point per λ_{R,j}.
class AsymptoticPoint {
  public:
    AsymptoticPoint(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                    double n_frames, double tol = kFixedPointTol);

    double smi() const;
    double smi_upper() const;
    double elmmse() const;
    double elmmse_lower() const;
    double smi_ns_derivative() const;
    double elmmse_ns_derivative() const;

    /// The λ_{R,j} (nonzero eigenvalues of σ_s^{-2} R_R).
    const RVector& rho() const { return rho_; }
    const std::vector<SpectralFixedPoint>& fixed_points() const { return fps_; }
    const EigenDecomposition& t_eig() const { return t_eig_; }
    const CMatrix& rt_sqrt() const { return rt_sqrt_; }
    const CMatrix& r_tx() const { return r_tx_; }
    /// U_T^H R_T U_T, with U_T the eigenvectors of T.
    const CMatrix& r_tx_in_t_basis() const { return rt_basis_; }
    double sigma2_s() const { return sigma2_s_; }
    double n_frames() const { return n_frames_; }
    Index phi_rank() const { return phi_rank_; }

    /// M_{T,j} = (I + α_j T)^{-1} as a dense matrix.
    CMatrix m_t(std::size_t j) const;

  private:
    RVector rho_;
    std::vector<SpectralFixedPoint> fps_;
    EigenDecomposition t_eig_;
    CMatrix rt_sqrt_;
    CMatrix r_tx_;
    CMatrix rt_basis_;
    double sigma2_s_;
    double n_frames_;
    Index phi_rank_;
};

double smi_asymptotic(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                      double n_frames);
double smi_upper_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s);
/// Requires n_frames >= N_T (DomainError otherwise).
double smi_lower_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                       double n_frames, Index n_targets);
double elmmse_asymptotic(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames);
double elmmse_lower_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s);
double smi_ns_derivative(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames);
double elmmse_ns_derivative(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                            double n_frames);

/// log det of R = R_R ⊗ R_T restricted to its nonzero eigenvalues.
struct SupportLogdet {
    double logdet;
    Index support_dim;
    bool full_rank;
};
SupportLogdet logdet_on_support(const CorrelationPair& pair);

struct EbcrbForms {
    double logdet;  // log det(R, support) - SMI
    double trace;   // equals the asymptotic ELMMSE
    Index support_dim;
    bool rank_deficient;
};
EbcrbForms ebcrb(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                 double n_frames);

/// N_S · I_s / I_{s,max} on a decreasing noise ladder: the value at the last
/// rung, and the σ_s² → 0 limit from a linear fit in 1/I_{s,max} through the
/// last two rungs.
std::pair<double, double> sensing_dof(const PsdMatrix& phi, const CorrelationPair& pair,
                                      double n_frames, const std::vector<double>& sigma_ladder);

enum class MetricMethod { asymptotic, montecarlo };

struct MetricReport {
    double smi = 0.0;
    double smi_upper = 0.0;
    double smi_lower = 0.0;
    double elmmse = 0.0;
    double elmmse_lower = 0.0;
    double ebcrb_logdet = 0.0;
    double ebcrb_trace = 0.0;
    Index support_dim = 0;
    bool rank_deficient = false;
    std::optional<std::pair<double, double>> dof_interval;
    MetricMethod method = MetricMethod::asymptotic;
    std::optional<double> stderr_smi;
    std::optional<double> stderr_elmmse;
};

MetricReport asymptotic_report(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                               double n_frames, Index n_targets);

}  // namespace smi
