// SPDX-License-Identifier: Apache-2.0
#include "smi/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "smi/asymptotic.hpp"
#include "smi/gradient.hpp"

namespace smi {

namespace {

// Relative accuracy of objective values: the fixed point is solved to 1e-12,
// so smaller promised gains are not measurable.
constexpr double kEvalAccuracy = 1e-11;

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

HermitianMatrix as_hermitian(const CMatrix& m) { return HermitianMatrix::symmetrize(m); }

PsdMatrix recompose(const EigenDecomposition& e, const RVector& values) {
    return PsdMatrix::trusted(
        HermitianMatrix::symmetrize(e.vectors * values.asDiagonal() * e.vectors.adjoint()).mat());
}

double real_inner(const CMatrix& a, const CMatrix& b) { return trace_product(a, b); }

}  // namespace

double feasibility_violation(const CMatrix& phi, double power) {
    const RVector v = hermitian_eig(HermitianMatrix::symmetrize(phi)).values;
    const double neg = v.size() > 0 ? std::max(0.0, -v(v.size() - 1)) : 0.0;
    return neg + std::max(0.0, phi.trace().real() - power);
}

RVector project_capped_simplex(const RVector& v, double cap) {
    RVector x = v.cwiseMax(0.0);
    if (x.sum() <= cap) return x;
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        prefix += sorted[k];
        const double t = (prefix - cap) / static_cast<double>(k + 1);
        if (sorted[k] > t) tau = t;
    }
    return (v.array() - tau).cwiseMax(0.0).matrix();
}

PsdMatrix project_psd_trace(const HermitianMatrix& phi, double power) {
    if (!finite_positive(power)) throw DomainError("project_psd_trace: power must be > 0");
    const EigenDecomposition e = hermitian_eig(phi);
    const Index n = e.values.size();
    if (n == 0 || (e.values(n - 1) >= 0.0 && e.values.sum() <= power)) {
        return PsdMatrix::trusted(phi.mat());
    }
    return recompose(e, project_capped_simplex(e.values, power));
}

PsdMatrix project_feasible(const HermitianMatrix& phi, double power) {
    if (!finite_positive(power)) throw DomainError("project_feasible: power must be > 0");
    const EigenDecomposition e = hermitian_eig(phi);
    const Index n = e.values.size();
    if (n == 0 || (e.values(n - 1) >= 0.0 && e.values.sum() <= power)) {
        return PsdMatrix::trusted(phi.mat());
    }
    RVector v = e.values.cwiseMax(0.0);
    const double tr = v.sum();
    if (tr > power) v *= power / tr;
    return recompose(e, v);
}

void GpSettings::validate() const {
    if (max_iters < 1) throw DomainError("GpSettings: max_iters must be >= 1");
    if (!finite_positive(grad_tol)) throw DomainError("GpSettings: grad_tol must be > 0");
    if (!finite_positive(armijo.initial_step)) throw DomainError("GpSettings: armijo initial step must be > 0");
    if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0)) {
        throw DomainError("GpSettings: armijo backtrack factor must lie in (0, 1)");
    }
    if (!(armijo.sufficient_decrease > 0.0 && armijo.sufficient_decrease < 1.0)) {
        throw DomainError("GpSettings: armijo sufficient-decrease constant must lie in (0, 1)");
    }
    if (fixed_step && !finite_positive(*fixed_step)) throw DomainError("GpSettings: fixed_step must be > 0");
    if (max_backtracks < 1) throw DomainError("GpSettings: max_backtracks must be >= 1");
}

void AdmmSettings::validate() const {
    if (!finite_positive(penalty)) throw DomainError("AdmmSettings: penalty must be > 0");
    if (!finite_positive(inner_step)) throw DomainError("AdmmSettings: inner_step must be > 0");
    if (!std::isfinite(rate_floor) || rate_floor < 0.0) throw DomainError("AdmmSettings: rate_floor must be >= 0");
    if (max_outer < 1) throw DomainError("AdmmSettings: max_outer must be >= 1");
    if (inner_iters < 1) throw DomainError("AdmmSettings: inner_iters must be >= 1");
    if (!finite_positive(primal_tol)) throw DomainError("AdmmSettings: primal_tol must be > 0");
}

OptTrajectory gradient_projection(const SmoothObjective& objective, double power,
                                  const GpSettings& settings, const PsdMatrix& init) {
    settings.validate();
    if (!finite_positive(power)) throw DomainError("gradient_projection: power must be > 0");
    const Index n = init.dim();
    const double init_scale = std::max(1.0, init.mat().norm());
    if (feasibility_violation(init.mat(), power) > 1e-9 * init_scale) {
        throw DomainError("gradient_projection: initial point is not feasible");
    }
    auto project = [&](const CMatrix& m) {
        return settings.projection == Projection::euclidean ? project_psd_trace(as_hermitian(m), power)
                                                            : project_feasible(as_hermitian(m), power);
    };
    const double min_scale = power / std::sqrt(static_cast<double>(n));

    OptTrajectory traj;
    PsdMatrix phi = init;
    auto [f, g] = objective(phi);
    traj.iterates.push_back({0, f, feasibility_violation(phi.mat(), power), 0.0, 0.0});

    CMatrix prev_phi;
    CMatrix prev_grad;
    bool have_prev = false;
    for (int it = 1; it <= settings.max_iters; ++it) {
        const double phi_norm = phi.mat().norm();
        const double g_norm = g.mat().norm();
        const double scale = std::max(phi_norm, min_scale);
        if (g_norm == 0.0) {
            traj.converged = true;
            traj.stop_reason = "zero gradient";
            break;
        }
        // Gradient mapping at a scale-free reference step.
        const double ref_step = scale / g_norm;
        const double mapping = (project(phi.mat() + ref_step * g.mat()).mat() - phi.mat()).norm();
        if (mapping <= settings.grad_tol * std::max(1.0, phi_norm)) {
            traj.converged = true;
            traj.stop_reason = "gradient mapping below tolerance";
            break;
        }

        double step = settings.fixed_step ? *settings.fixed_step : settings.armijo.initial_step * ref_step;
        if (!settings.fixed_step && settings.barzilai_borwein && have_prev) {
            const CMatrix dphi = phi.mat() - prev_phi;
            const double curvature = -real_inner(dphi, g.mat() - prev_grad);
            if (curvature > 0.0) {
                step = std::clamp(dphi.squaredNorm() / curvature, 1e-10 * ref_step, 1e10 * ref_step);
            }
        }

        bool accepted = false;
        double predicted = 0.0;
        double first_predicted = 0.0;  // at the largest step tried
        PsdMatrix cand = phi;
        double f_cand = f;
        HermitianMatrix g_cand = g;
        for (int bt = 0; bt < settings.max_backtracks; ++bt) {
            cand = project(phi.mat() + step * g.mat());
            predicted = real_inner(g.mat(), cand.mat() - phi.mat());
            if (bt == 0) first_predicted = predicted;
            auto [fc, gc] = objective(cand);
            if (!settings.line_search ||
                (fc >= f && fc >= f + settings.armijo.sufficient_decrease * std::max(predicted, 0.0))) {
                f_cand = fc;
                g_cand = std::move(gc);
                accepted = true;
                break;
            }
            step *= settings.armijo.backtrack;
        }
        if (!accepted) {
            // Exhausted backtracks. If the linear model promised no more than the
            // objective's evaluation accuracy even at the largest step tried, this
            // is stationarity at working precision; otherwise objective and
            // gradient disagree.
            if (first_predicted <= kEvalAccuracy * std::max(1.0, std::abs(f))) {
                traj.converged = true;
                traj.stop_reason = "no further ascent at working precision";
                break;
            }
            traj.final_phi = phi;
            traj.stop_reason = "line search stalled";
            char buf[128];
            std::snprintf(buf, sizeof buf, "gradient_projection: line search failed after %d backtracks",
                          settings.max_backtracks);
            throw StallError(buf, mapping, std::move(traj));
        }
        prev_phi = phi.mat();
        prev_grad = g.mat();
        have_prev = true;
        phi = cand;
        f = f_cand;
        g = std::move(g_cand);
        traj.iterates.push_back({it, f, feasibility_violation(phi.mat(), power), 0.0, step});
    }
    if (traj.stop_reason.empty()) traj.stop_reason = "iteration cap";
    traj.final_phi = phi;
    return traj;
}

SensingProblem SensingProblem::from_config(const SceneConfig& cfg) {
    cfg.validate();
    return {build_correlations(cfg), cfg.sigma2_s, static_cast<double>(cfg.n_frames), cfg.power_budget};
}

SmoothObjective smi_objective(const SensingProblem& problem) {
    return [problem](const PsdMatrix& phi) {
        const AsymptoticPoint point(phi, problem.pair, problem.sigma2_s, problem.n_frames);
        return std::pair<double, HermitianMatrix>{point.smi(), grad_smi(point)};
    };
}

SmoothObjective smi_upper_objective(const SensingProblem& problem) {
    return [problem](const PsdMatrix& phi) {
        const AsymptoticPoint point(phi, problem.pair, problem.sigma2_s, problem.n_frames);
        return std::pair<double, HermitianMatrix>{point.smi_upper(), grad_smi_upper(point)};
    };
}

OptTrajectory optimize_sensing(const SensingProblem& problem, const GpSettings& settings,
                               const std::optional<PsdMatrix>& init) {
    const PsdMatrix start = init ? *init : isotropic_covariance(problem.pair.r_tx.dim(), problem.power);
    return gradient_projection(smi_objective(problem), problem.power, settings, start);
}

OptTrajectory optimize_sensing(const SceneConfig& cfg, const GpSettings& settings,
                               const std::optional<PsdMatrix>& init) {
    return optimize_sensing(SensingProblem::from_config(cfg), settings, init);
}

OptTrajectory optimize_sensing_upper_bound(const SensingProblem& problem, const GpSettings& settings,
                                           const std::optional<PsdMatrix>& init) {
    const PsdMatrix start = init ? *init : isotropic_covariance(problem.pair.r_tx.dim(), problem.power);
    return gradient_projection(smi_upper_objective(problem), problem.power, settings, start);
}

// ---------------------------------------------------------------------------
// Rate-constrained projection.

namespace {

constexpr double kKktTol = 1e-6;

struct PenalizedSolve {
    PsdMatrix omega;
    double rate;
    int iterations;
};

// argmin over {Ω ⪰ 0, tr Ω ≤ P} of ½‖Ω − Y‖² − μ c(Ω), by projected gradient
// with Barzilai-Borwein steps and Armijo backtracking. Strongly convex.
PenalizedSolve solve_penalized(const CMatrix& target, const CommChannel& comm, double sigma2_c,
                               double power, double mu, const PsdMatrix& warm) {
    auto value = [&](const PsdMatrix& x, double rate) {
        return 0.5 * (x.mat() - target).squaredNorm() - mu * rate;
    };
    auto gradient = [&](const PsdMatrix& x) {
        return CMatrix(x.mat() - target - mu * comm_mi_gradient(comm, x.mat(), sigma2_c).mat());
    };
    const double tol = 1e-12 * std::max(1.0, target.norm());

    PsdMatrix x = project_psd_trace(as_hermitian(warm.mat()), power);
    double rate = comm_mi(comm, x, sigma2_c);
    double h = value(x, rate);
    CMatrix g = gradient(x);
    double step = 1.0;
    CMatrix prev_x;
    CMatrix prev_g;
    int it = 0;
    for (; it < 20000; ++it) {
        // Unit-step gradient mapping: zero exactly at the minimizer.
        const PsdMatrix unit = project_psd_trace(as_hermitian(x.mat() - g), power);
        if ((unit.mat() - x.mat()).norm() <= tol) break;
        if (it > 0) {
            const CMatrix dx = x.mat() - prev_x;
            const double curv = real_inner(dx, g - prev_g);
            step = curv > 0.0 ? std::clamp(dx.squaredNorm() / curv, 1e-14, 1e14) : 1.0;
        }
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const PsdMatrix cand = project_psd_trace(as_hermitian(x.mat() - step * g), power);
            const double cand_rate = comm_mi(comm, cand, sigma2_c);
            const double hc = value(cand, cand_rate);
            const double pred = real_inner(g, cand.mat() - x.mat());
            if (hc <= h + 1e-4 * pred + 1e-15 * std::abs(h)) {
                prev_x = x.mat();
                prev_g = g;
                x = cand;
                rate = cand_rate;
                h = hc;
                g = gradient(x);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // roundoff floor; the caller checks KKT residuals
    }
    return {x, rate, it};
}

}  // namespace

RateProjection project_rate_constrained(const HermitianMatrix& target, const CommChannel& comm,
                                        double sigma2_c, double power, double rate_floor,
                                        std::optional<double> multiplier_hint) {
    if (!finite_positive(power)) throw DomainError("project_rate_constrained: power must be > 0");
    if (!finite_positive(sigma2_c)) throw DomainError("project_rate_constrained: sigma2_c must be > 0");
    if (!std::isfinite(rate_floor) || rate_floor < 0.0) {
        throw DomainError("project_rate_constrained: rate_floor must be >= 0");
    }
    if (comm.h.cols() != target.dim()) throw DomainError("project_rate_constrained: channel and target sizes differ");
    const CMatrix& y = target.mat();

    auto finish = [&](const PsdMatrix& omega, double mu, double rate, int solves) {
        RateProjection out{omega, mu, rate, 0.0, 0.0, 0.0, solves};
        const CMatrix moved = y + mu * comm_mi_gradient(comm, omega.mat(), sigma2_c).mat();
        out.stationarity = (omega.mat() - project_psd_trace(as_hermitian(moved), power).mat()).norm();
        out.complementarity = std::abs(mu * (rate - rate_floor));
        out.feasibility = std::max(0.0, rate_floor - rate) + feasibility_violation(omega.mat(), power);
        return out;
    };

    const PsdMatrix plain = project_psd_trace(target, power);
    const double plain_rate = comm_mi(comm, plain, sigma2_c);
    if (rate_floor == 0.0 || plain_rate >= rate_floor) return finish(plain, 0.0, plain_rate, 0);

    const WaterFilling wf = water_filling(comm, power, sigma2_c);
    if (wf.capacity < rate_floor) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "rate floor %.6g nats exceeds the channel capacity %.6g nats at power %.6g",
                      rate_floor, wf.capacity, power);
        throw InfeasibleError(buf);
    }
    if (rate_floor >= wf.capacity * (1.0 - 1e-12)) {
        // Only the capacity-achieving covariance is feasible; μ is unbounded
        // there, so no multiplier is reported.
        return finish(wf.phi, 0.0, wf.capacity, 0);
    }

    // c(Ω(μ)) − R₀ is increasing in μ; keep every evaluation to return the
    // feasible end of the final bracket.
    int solves = 0;
    PsdMatrix warm = plain;
    PsdMatrix best = wf.phi;
    double best_mu = std::numeric_limits<double>::infinity();
    double best_rate = wf.capacity;
    bool done = false;
    const double rate_tol = 1e-11 * std::max(1.0, rate_floor);
    auto phi_of = [&](double mu) {
        const PenalizedSolve s = solve_penalized(y, comm, sigma2_c, power, mu, warm);
        ++solves;
        warm = s.omega;
        const double gap = s.rate - rate_floor;
        if (gap >= 0.0 && mu < best_mu) {
            best = s.omega;
            best_mu = mu;
            best_rate = s.rate;
            if (gap <= rate_tol) done = true;
        }
        return gap;
    };

    double lo = 0.0;
    double f_lo = plain_rate - rate_floor;
    double hi = multiplier_hint && *multiplier_hint > 0.0 ? *multiplier_hint : 1.0;
    double f_hi = phi_of(hi);
    if (f_hi < 0.0) {
        int expand = 0;
        while (f_hi < 0.0) {
            if (++expand > 80) throw ConvergenceError("project_rate_constrained: multiplier bracket not found", -f_hi);
            lo = hi;
            f_lo = f_hi;
            hi *= 4.0;
            f_hi = phi_of(hi);
        }
    } else if (!done && multiplier_hint) {
        // Tighten the lower end around the hint.
        double probe = hi * 0.5;
        for (int k = 0; k < 40; ++k) {
            const double fp = phi_of(probe);
            if (fp < 0.0) {
                lo = probe;
                f_lo = fp;
                break;
            }
            hi = probe;
            f_hi = fp;
            if (done) break;
            probe *= 0.5;
        }
    }

    if (!done && f_hi > 0.0) {
        std::uintmax_t max_iter = 200;
        auto tol = [&](double a, double b) { return done || std::abs(b - a) <= 1e-15 * std::max(a, b); };
        boost::math::tools::toms748_solve(phi_of, lo, hi, f_lo, f_hi, tol, max_iter);
    }

    RateProjection out = finish(best, best_mu, best_rate, solves);
    if (out.stationarity > kKktTol || out.complementarity > kKktTol) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "project_rate_constrained: KKT residuals not met (stationarity %.3e, complementarity %.3e)",
                      out.stationarity, out.complementarity);
        throw ConvergenceError(buf, std::max(out.stationarity, out.complementarity));
    }
    return out;
}

// ---------------------------------------------------------------------------
// ADMM.

OptTrajectory optimize_isac(const SensingProblem& problem, const CommChannel& comm, double sigma2_c,
                            const AdmmSettings& settings, const std::optional<PsdMatrix>& init) {
    settings.validate();
    const double power = problem.power;
    const Index n = problem.pair.r_tx.dim();
    const double wf_capacity = water_filling(comm, power, sigma2_c).capacity;
    if (wf_capacity < settings.rate_floor) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "rate floor %.6g nats exceeds the channel capacity %.6g nats",
                      settings.rate_floor, wf_capacity);
        throw InfeasibleError(buf);
    }
    const SmoothObjective smi = smi_objective(problem);
    const double rho = settings.penalty;

    PsdMatrix phi = init ? *init : isotropic_covariance(n, power);
    RateProjection proj =
        project_rate_constrained(as_hermitian(phi.mat()), comm, sigma2_c, power, settings.rate_floor);
    PsdMatrix omega = proj.omega;
    CMatrix dual = CMatrix::Zero(n, n);

    GpSettings inner;
    inner.max_iters = settings.inner_iters;
    inner.fixed_step = settings.inner_step;
    inner.barzilai_borwein = false;
    inner.grad_tol = 1e-12;

    OptTrajectory traj;
    traj.iterates.push_back({0, smi(omega).first, 0.0, 0.0, proj.multiplier});
    for (int k = 1; k <= settings.max_outer; ++k) {
        const CMatrix anchor = omega.mat() - dual;
        const SmoothObjective augmented = [&](const PsdMatrix& x) {
            auto [f, g] = smi(x);
            const CMatrix diff = x.mat() - anchor;
            return std::pair<double, HermitianMatrix>{
                f - 0.5 * rho * diff.squaredNorm(), as_hermitian(g.mat() - rho * diff)};
        };
        phi = gradient_projection(augmented, power, inner, phi).final_phi;

        const PsdMatrix prev_omega = omega;
        std::optional<double> hint;
        if (proj.multiplier > 0.0 && std::isfinite(proj.multiplier)) hint = proj.multiplier;
        proj = project_rate_constrained(as_hermitian(phi.mat() + dual), comm, sigma2_c, power,
                                        settings.rate_floor, hint);
        omega = proj.omega;
        dual += phi.mat() - omega.mat();

        const double scale = std::max(omega.mat().norm(), 1e-300);
        const double primal = (phi.mat() - omega.mat()).norm() / scale;
        const double dual_res = (omega.mat() - prev_omega.mat()).norm() / scale;
        traj.iterates.push_back({k, smi(omega).first, primal, dual_res, proj.multiplier});
        if (primal < settings.primal_tol && dual_res < settings.primal_tol) {
            traj.converged = true;
            traj.stop_reason = "primal and dual residuals below tolerance";
            break;
        }
    }
    if (traj.stop_reason.empty()) traj.stop_reason = "iteration cap";
    traj.final_phi = omega;
    return traj;
}

}  // namespace smi
