// SPDX-License-Identifier: Apache-2.0
#include "smi/asymptotic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smi/errors.hpp"

namespace smi {

namespace {

struct FixedPointTerms {
    double rhs;    // (1/N) Σ μ/(1+αμ)
    double slope;  // d rhs / dδ = (α²/N) Σ μ²/(1+αμ)²
};

FixedPointTerms evaluate_rhs(const RVector& mu, double rho, double n, double delta) {
    const double alpha = rho / (1.0 + rho * delta);
    double rhs = 0.0;
    double slope = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        const double m = std::max(mu(i), 0.0);
        const double q = 1.0 / (1.0 + alpha * m);
        rhs += m * q;
        slope += (alpha * m * q) * (alpha * m * q);
    }
    return {rhs / n, slope / n};
}

// log(1+x) - x/(1+x), accurate for small x.
double info_gap(double x) {
    if (x < 1e-4) return x * x * (0.5 - x * (2.0 / 3.0 - 0.75 * x));
    return std::log1p(x) - x / (1.0 + x);
}

}  // namespace

SpectralFixedPoint solve_fixed_point_spectrum(const RVector& t_eigs, double rho, double n_frames,
                                              double tol) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("solve_fixed_point: rho must be >= 0");
    if (!(tol > 0.0)) throw DomainError("solve_fixed_point: tol must be > 0");
    if (!(n_frames > 0.0)) throw DomainError("solve_fixed_point: n_frames must be > 0");

    SpectralFixedPoint out;
    out.rho = rho;
    double trace = 0.0;
    for (Index i = 0; i < t_eigs.size(); ++i) trace += std::max(t_eigs(i), 0.0);

    // δ₀ = tr(T)/N_S is the α → 0 limit of the right-hand side, so it bounds
    // the root from above. The map is increasing and concave in δ, hence
    // Newton on δ - rhs(δ) descends monotonically onto the unique root.
    double delta = trace / n_frames;
    double residual = 0.0;
    int it = 0;
    for (; it < kFixedPointMaxIters; ++it) {
        const FixedPointTerms t = evaluate_rhs(t_eigs, rho, n_frames, delta);
        const double g = delta - t.rhs;
        residual = std::abs(g);
        if (residual <= tol * std::max(1.0, delta)) {
            // One polishing step; kept only if it does not degrade the residual.
            const double polished = delta - g / (1.0 - t.slope);
            if (polished >= 0.0 && std::isfinite(polished)) {
                const double r2 = std::abs(polished - evaluate_rhs(t_eigs, rho, n_frames, polished).rhs);
                if (r2 <= residual) {
                    delta = polished;
                    residual = r2;
                }
            }
            break;
        }
        double next = delta - g / (1.0 - t.slope);
        if (!(next >= 0.0) || !std::isfinite(next) || t.slope >= 1.0) {
            // Damped Picard fallback.
            next = 0.5 * (delta + t.rhs);
        }
        delta = next;
    }
    if (it == kFixedPointMaxIters) {
        throw ConvergenceError("solve_fixed_point: iteration cap reached", residual);
    }
    out.delta = delta;
    out.alpha = rho / (1.0 + rho * delta);
    out.residual = residual;
    out.iterations = it;
    return out;
}

PsdMatrix t_of_phi(const PsdMatrix& phi, const PsdMatrix& r_tx) {
    if (phi.dim() != r_tx.dim()) throw DomainError("t_of_phi: dimension mismatch");
    const CMatrix root = psd_sqrt(r_tx).mat();
    return PsdMatrix::trusted(root * phi.mat() * root);
}

FixedPointSolution solve_fixed_point(const PsdMatrix& t, double rho, double n_frames, double tol) {
    const EigenDecomposition e = hermitian_eig(t);
    const SpectralFixedPoint s = solve_fixed_point_spectrum(e.values, rho, n_frames, tol);
    FixedPointSolution out;
    out.rho = s.rho;
    out.delta = s.delta;
    out.alpha = s.alpha;
    out.residual = s.residual;
    out.iterations = s.iterations;
    const double alpha = s.alpha;
    out.m_t = HermitianMatrix::symmetrize(
        spectral_map(e, [alpha](double x) { return 1.0 / (1.0 + alpha * std::max(x, 0.0)); }));
    return out;
}

RVector receive_eigenvalues(const PsdMatrix& r_rx, double sigma2_s) {
    if (!(sigma2_s > 0.0)) throw DomainError("receive_eigenvalues: sigma2_s must be > 0");
    const RVector lam = hermitian_eig(r_rx).values;
    const Index r = numerical_rank(lam);
    return lam.head(r) / sigma2_s;
}

AsymptoticPoint::AsymptoticPoint(const PsdMatrix& phi, const CorrelationPair& pair,
                                 double sigma2_s, double n_frames, double tol)
    : rho_(receive_eigenvalues(pair.r_rx, sigma2_s)),
      rt_sqrt_(psd_sqrt(pair.r_tx).mat()),
      r_tx_(pair.r_tx.mat()),
      sigma2_s_(sigma2_s),
      n_frames_(n_frames) {
    if (phi.dim() != pair.r_tx.dim()) throw DomainError("AsymptoticPoint: Phi and R_T sizes differ");
    if (!(n_frames > 0.0)) throw DomainError("AsymptoticPoint: n_frames must be > 0");
    t_eig_ = hermitian_eig(CMatrix(rt_sqrt_ * phi.mat() * rt_sqrt_));
    for (Index i = 0; i < t_eig_.values.size(); ++i) t_eig_.values(i) = std::max(t_eig_.values(i), 0.0);
    rt_basis_ = t_eig_.vectors.adjoint() * r_tx_ * t_eig_.vectors;
    phi_rank_ = numerical_rank(hermitian_eig(phi).values);
    fps_.reserve(static_cast<std::size_t>(rho_.size()));
    for (Index j = 0; j < rho_.size(); ++j) {
        fps_.push_back(solve_fixed_point_spectrum(t_eig_.values, rho_(j), n_frames, tol));
    }
}

CMatrix AsymptoticPoint::m_t(std::size_t j) const {
    const double alpha = fps_.at(j).alpha;
    return spectral_map(t_eig_, [alpha](double x) { return 1.0 / (1.0 + alpha * x); });
}

double AsymptoticPoint::smi() const {
    const RVector& mu = t_eig_.values;
    double acc = 0.0;
    for (const SpectralFixedPoint& fp : fps_) {
        double ld = 0.0;
        for (Index i = 0; i < mu.size(); ++i) ld += std::log1p(fp.alpha * mu(i));
        acc += ld + n_frames_ * info_gap(fp.rho * fp.delta);
    }
    return acc;
}

double AsymptoticPoint::smi_upper() const {
    const RVector& mu = t_eig_.values;
    double acc = 0.0;
    for (Index j = 0; j < rho_.size(); ++j) {
        for (Index i = 0; i < mu.size(); ++i) acc += std::log1p(rho_(j) * mu(i));
    }
    return acc;
}

double AsymptoticPoint::elmmse() const {
    const RVector& mu = t_eig_.values;
    double acc = 0.0;
    for (const SpectralFixedPoint& fp : fps_) {
        double tr = 0.0;
        for (Index i = 0; i < mu.size(); ++i) tr += rt_basis_(i, i).real() / (1.0 + fp.alpha * mu(i));
        acc += sigma2_s_ * fp.rho * tr;
    }
    return acc;
}

double AsymptoticPoint::elmmse_lower() const {
    const RVector& mu = t_eig_.values;
    double acc = 0.0;
    for (Index j = 0; j < rho_.size(); ++j) {
        double tr = 0.0;
        for (Index i = 0; i < mu.size(); ++i) tr += rt_basis_(i, i).real() / (1.0 + rho_(j) * mu(i));
        acc += sigma2_s_ * rho_(j) * tr;
    }
    return acc;
}

double AsymptoticPoint::smi_ns_derivative() const {
    double acc = 0.0;
    for (const SpectralFixedPoint& fp : fps_) acc += info_gap(fp.rho * fp.delta);
    return acc;
}

double AsymptoticPoint::elmmse_ns_derivative() const {
    const RVector& mu = t_eig_.values;
    double acc = 0.0;
    for (const SpectralFixedPoint& fp : fps_) {
        const double a = fp.alpha;
        double tr_rmtm = 0.0;  // tr(R_T M T M)
        double tr_tm2 = 0.0;   // tr((T M)^2)
        for (Index i = 0; i < mu.size(); ++i) {
            const double q = 1.0 / (1.0 + a * mu(i));
            tr_rmtm += rt_basis_(i, i).real() * mu(i) * q * q;
            tr_tm2 += (mu(i) * q) * (mu(i) * q);
        }
        const double dd_dn = -fp.delta / (n_frames_ - a * a * tr_tm2);
        acc += sigma2_s_ * fp.rho * a * a * tr_rmtm * dd_dn;
    }
    return acc;
}

double smi_asymptotic(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                      double n_frames) {
    return AsymptoticPoint(phi, pair, sigma2_s, n_frames).smi();
}

double smi_upper_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s) {
    // N_S does not enter the bound; any positive value gives the same T and λ_R.
    return AsymptoticPoint(phi, pair, sigma2_s, 1.0).smi_upper();
}

double smi_lower_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                       double n_frames, Index n_targets) {
    if (n_frames < static_cast<double>(phi.dim())) {
        std::ostringstream os;
        os << "smi_lower_bound: requires N_S >= N_T (N_S = " << n_frames << ", N_T = " << phi.dim()
           << ")";
        throw DomainError(os.str());
    }
    const double loss =
        static_cast<double>(std::min<Index>(n_targets, numerical_rank(hermitian_eig(phi).values)));
    return (n_frames - loss) / n_frames * smi_upper_bound(phi, pair, sigma2_s);
}

double elmmse_asymptotic(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames) {
    return AsymptoticPoint(phi, pair, sigma2_s, n_frames).elmmse();
}

double elmmse_lower_bound(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s) {
    return AsymptoticPoint(phi, pair, sigma2_s, 1.0).elmmse_lower();
}

double smi_ns_derivative(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames) {
    return AsymptoticPoint(phi, pair, sigma2_s, n_frames).smi_ns_derivative();
}

double elmmse_ns_derivative(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                            double n_frames) {
    return AsymptoticPoint(phi, pair, sigma2_s, n_frames).elmmse_ns_derivative();
}

SupportLogdet logdet_on_support(const CorrelationPair& pair) {
    const RVector rr = hermitian_eig(pair.r_rx).values;
    const RVector rt = hermitian_eig(pair.r_tx).values;
    const double top = std::max(rr(0), 0.0) * std::max(rt(0), 0.0);
    SupportLogdet out{0.0, 0, false};
    if (top <= 0.0) return out;
    for (Index a = 0; a < rr.size(); ++a) {
        for (Index b = 0; b < rt.size(); ++b) {
            const double v = rr(a) * rt(b);
            if (v > kRankTol * top) {
                out.logdet += std::log(v);
                ++out.support_dim;
            }
        }
    }
    out.full_rank = out.support_dim == rr.size() * rt.size();
    return out;
}

EbcrbForms ebcrb(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                 double n_frames) {
    const AsymptoticPoint pt(phi, pair, sigma2_s, n_frames);
    const SupportLogdet sl = logdet_on_support(pair);
    return {sl.logdet - pt.smi(), pt.elmmse(), sl.support_dim, !sl.full_rank};
}

std::pair<double, double> sensing_dof(const PsdMatrix& phi, const CorrelationPair& pair,
                                      double n_frames, const std::vector<double>& sigma_ladder) {
    if (sigma_ladder.empty()) throw DomainError("sensing_dof: empty noise ladder");
    for (std::size_t i = 0; i < sigma_ladder.size(); ++i) {
        if (!(sigma_ladder[i] > 0.0) || (i > 0 && !(sigma_ladder[i] < sigma_ladder[i - 1]))) {
            throw DomainError("sensing_dof: ladder must be positive and strictly decreasing");
        }
    }
    std::vector<double> ratio;
    std::vector<double> inv_upper;
    for (double s2 : sigma_ladder) {
        const AsymptoticPoint pt(phi, pair, s2, n_frames);
        const double upper = pt.smi_upper();
        if (upper <= 0.0) return {n_frames, n_frames};  // Φ = 0: nothing is lost
        ratio.push_back(n_frames * pt.smi() / upper);
        inv_upper.push_back(1.0 / upper);
    }
    const double last = ratio.back();
    if (ratio.size() < 2) return {last, last};
    // I_s and I_{s,max} grow with the same slope in log(1/σ²), so the ratio is
    // affine in 1/I_{s,max} to leading order; extrapolate that line to zero.
    const std::size_t n = ratio.size();
    const double x1 = inv_upper[n - 2], x2 = inv_upper[n - 1];
    const double y1 = ratio[n - 2], y2 = ratio[n - 1];
    if (x1 == x2) return {last, last};
    const double limit = (y2 * x1 - y1 * x2) / (x1 - x2);
    return {last, limit};
}

MetricReport asymptotic_report(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                               double n_frames, Index n_targets) {
    const AsymptoticPoint pt(phi, pair, sigma2_s, n_frames);
    const SupportLogdet sl = logdet_on_support(pair);
    MetricReport r;
    r.smi = pt.smi();
    r.smi_upper = pt.smi_upper();
    const double loss = static_cast<double>(std::min<Index>(n_targets, pt.phi_rank()));
    r.smi_lower = (n_frames - loss) / n_frames * r.smi_upper;
    r.elmmse = pt.elmmse();
    r.elmmse_lower = pt.elmmse_lower();
    r.ebcrb_logdet = sl.logdet - r.smi;
    r.ebcrb_trace = r.elmmse;
    r.support_dim = sl.support_dim;
    r.rank_deficient = !sl.full_rank;
    r.method = MetricMethod::asymptotic;
    return r;
}

}  // namespace smi
