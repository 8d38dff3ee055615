// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "smi/linalg.hpp"
#include "smi/scene.hpp"

namespace smi {

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    Index n_trials = 0;
    std::uint64_t seed = 0;
};

/// Per-realization SMI log det(I + σ_s^{-2} R_R ⊗ R_T^{1/2} F S S^H F^H R_T^{1/2}),
/// evaluated as Σ_j log det(I + λ_{R,j} · R_T^{1/2} F S S^H F^H R_T^{1/2}).
double smi_exact(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                 double sigma2_s);

/// Full N x N (N = N_T N_R) LMMSE error covariance
/// R^{1/2} (I + σ_s^{-2} R_R ⊗ R_T^{1/2} X X^H R_T^{1/2})^{-1} R^{1/2}, X = F S.
PsdMatrix lmmse_matrix(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                       double sigma2_s);

/// Full N x N Bayesian CRB (R^{-1} + σ_s^{-2} I ⊗ X X^H)^{-1}, evaluated on the
/// support of R and embedded back (zero on the null space).
PsdMatrix bcrb_matrix(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                      double sigma2_s);

struct IdentityGaps {
    double max_matrix_gap;  // ‖Ψ_BCRB − Ψ_LMMSE‖_max
    double identity_gap;    // |logdet(R) − logdet(Ψ_BCRB) − SMI| on the support
    double scale;           // max |R| entry, the natural unit of max_matrix_gap
};
IdentityGaps verify_prop4(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                       double sigma2_s);

/// Per-realization quantities sharing one draw of S (common random numbers).
struct RealizationMetrics {
    double smi;
    double lmmse_trace;
};

/// Precomputed scene data for fast per-realization evaluation in the
/// per-receive-eigenvalue reduced form (N_T x N_T work per trial).
class RealizationEvaluator {
  public:
    RealizationEvaluator(const CMatrix& phi_factor, const CorrelationPair& pair, double sigma2_s);

    RealizationMetrics operator()(const CMatrix& s) const;

  private:
    static RVector receive_eigenvalues_unscaled(const PsdMatrix& r_rx);

    CMatrix rt_sqrt_f_;  // R_T^{1/2} F
    CMatrix r_tx_;
    RVector rx_eigs_;  // nonzero eigenvalues of R_R (not divided by σ_s²)
    double sigma2_s_;
};

using ScalarMetric = std::function<double(const CMatrix& s)>;
using VectorMetric = std::function<std::vector<double>(const CMatrix& s)>;

/// Sample mean and standard error over n_trials i.i.d. draws of S from the
/// signal stream of cfg.seed. Trial i always uses stream key (seed, signal, i)
/// and the reduction runs in trial order, so the result does not depend on
/// the number of worker threads.
McEstimate mc_estimate(const ScalarMetric& metric, const SceneConfig& cfg, Index n_trials,
                       unsigned threads = 1);

/// Vector-valued variant: one estimate per output component.
std::vector<McEstimate> mc_estimate(const VectorMetric& metric, Index n_outputs,
                                    const SceneConfig& cfg, Index n_trials, unsigned threads = 1);

/// Pairwise (cascade) summation.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace smi
