// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smi/errors.hpp"
#include "smi/linalg.hpp"
#include "smi/scene.hpp"

namespace smi {

/// PSD clip, then rescale by P/tr when the trace exceeds P.
PsdMatrix project_feasible(const HermitianMatrix& phi, double power);

/// Nearest point in Frobenius norm of {Φ ⪰ 0, tr Φ ≤ P}: eigenvalues are
/// projected onto the capped simplex {x ≥ 0, Σx ≤ P}.
PsdMatrix project_psd_trace(const HermitianMatrix& phi, double power);

/// Same projection on a spectrum only.
RVector project_capped_simplex(const RVector& v, double cap);

enum class Projection { euclidean, clip_and_scale };

struct ArmijoParams {
    double initial_step = 1.0;  // relative: first trial moves Φ by about this fraction of ‖Φ‖_F
    double backtrack = 0.5;
    double sufficient_decrease = 1e-4;
};

struct GpSettings {
    int max_iters = 40;
    double grad_tol = 1e-10;
    ArmijoParams armijo;
    /// Absolute first trial step β_m for every iteration; disables the
    /// Barzilai-Borwein guess.
    std::optional<double> fixed_step;
    /// With line_search off, every trial step is accepted as is.
    bool line_search = true;
    Projection projection = Projection::euclidean;
    int max_backtracks = 50;
    bool barzilai_borwein = true;

    void validate() const;
};

struct AdmmSettings {
    double penalty = 1e4;
    double inner_step = 1.5e-4;
    double rate_floor = 0.0;  // nats
    int max_outer = 200;
    int inner_iters = 20;
    double primal_tol = 1e-3;

    void validate() const;
};

struct TrajectoryPoint {
    int iteration = 0;
    double objective = 0.0;     // SMI in nats (the loss is its negative)
    double feasibility = 0.0;   // GP: PSD/trace violation; ADMM: relative ‖Φ − Ω‖_F
    double dual_residual = 0.0; // ADMM only: relative ‖Ω_k − Ω_{k−1}‖_F
    double step = 0.0;          // GP step length; ADMM: rate multiplier μ
};

struct OptTrajectory {
    std::vector<TrajectoryPoint> iterates;
    PsdMatrix final_phi;
    bool converged = false;
    std::string stop_reason;
};

/// Line search exhausted its backtracks away from a stationary point.
class StallError : public ConvergenceError {
  public:
    StallError(const std::string& what, double residual, OptTrajectory trajectory)
        : ConvergenceError(what, residual), trajectory_(std::move(trajectory)) {}
    const OptTrajectory& trajectory() const noexcept { return trajectory_; }

  private:
    OptTrajectory trajectory_;
};

/// A smooth objective to maximize, returning value and gradient (∂/∂Φ*).
using SmoothObjective = std::function<std::pair<double, HermitianMatrix>(const PsdMatrix&)>;

/// Projected gradient ascent on {Φ ⪰ 0, tr Φ ≤ power}.
OptTrajectory gradient_projection(const SmoothObjective& objective, double power,
                                  const GpSettings& settings, const PsdMatrix& init);

/// Everything the sensing objective depends on.
struct SensingProblem {
    CorrelationPair pair;
    double sigma2_s;
    double n_frames;
    double power;

    static SensingProblem from_config(const SceneConfig& cfg);
};

SmoothObjective smi_objective(const SensingProblem& problem);
SmoothObjective smi_upper_objective(const SensingProblem& problem);

/// Maximizes the asymptotic SMI. Default start (P/N_T) I.
OptTrajectory optimize_sensing(const SensingProblem& problem, const GpSettings& settings,
                               const std::optional<PsdMatrix>& init = std::nullopt);
OptTrajectory optimize_sensing(const SceneConfig& cfg, const GpSettings& settings,
                               const std::optional<PsdMatrix>& init = std::nullopt);

/// Maximizes the N_S-free upper bound Σ_j log det(I + λ_j T(Φ)) instead.
OptTrajectory optimize_sensing_upper_bound(const SensingProblem& problem, const GpSettings& settings,
                                           const std::optional<PsdMatrix>& init = std::nullopt);

struct RateProjection {
    PsdMatrix omega;
    double multiplier = 0.0;       // μ of the rate constraint
    double rate = 0.0;             // comm_mi(Ω)
    double stationarity = 0.0;     // ‖Ω − Π_A(target + μ∇c(Ω))‖_F
    double complementarity = 0.0;  // |μ (c(Ω) − R₀)|
    double feasibility = 0.0;      // max(0, R₀ − c(Ω)) plus PSD/trace violation
    int inner_solves = 0;
};

/// argmin ‖target − Ω‖_F over {Ω ⪰ 0, tr Ω ≤ power, comm_mi(Ω) ≥ rate_floor}.
/// Throws InfeasibleError if the water-filling capacity is below rate_floor and
/// ConvergenceError if the KKT residuals cannot be brought under 1e-6.
RateProjection project_rate_constrained(const HermitianMatrix& target, const CommChannel& comm,
                                        double sigma2_c, double power, double rate_floor,
                                        std::optional<double> multiplier_hint = std::nullopt);

/// ADMM for max SMI s.t. comm_mi ≥ R₀, tr ≤ P, PSD. final_phi is the last Ω.
OptTrajectory optimize_isac(const SensingProblem& problem, const CommChannel& comm, double sigma2_c,
                            const AdmmSettings& settings,
                            const std::optional<PsdMatrix>& init = std::nullopt);

/// PSD and trace violation of Φ: max(0, −λ_min) + max(0, tr Φ − P).
double feasibility_violation(const CMatrix& phi, double power);

}  // namespace smi
