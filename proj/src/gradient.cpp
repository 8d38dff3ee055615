// SPDX-License-Identifier: Apache-2.0
#include "smi/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "smi/errors.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

constexpr double kUlp = std::numeric_limits<double>::epsilon();

// W diag(d) W^H.
HermitianMatrix weighted_gram(const CMatrix& w, const RVector& d) {
    return HermitianMatrix::symmetrize(w * d.asDiagonal() * w.adjoint());
}

double delta_denominator(const RVector& mu, double alpha, double n_frames) {
    double acc = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        const double x = mu(i) / (1.0 + alpha * mu(i));
        acc += x * x;
    }
    const double den = n_frames - alpha * alpha * acc;
    if (!(den > 0.0)) throw NumericalError("grad_delta: degenerate fixed point (denominator <= 0)");
    return den;
}

}  // namespace

HermitianMatrix grad_delta(const PsdMatrix& phi, const PsdMatrix& r_tx, double rho, double n_frames) {
    const CMatrix rt_sqrt = psd_sqrt(r_tx).mat();
    EigenDecomposition e = hermitian_eig(CMatrix(rt_sqrt * phi.mat() * rt_sqrt));
    e.values = e.values.cwiseMax(0.0);
    const SpectralFixedPoint fp = solve_fixed_point_spectrum(e.values, rho, n_frames);
    const double den = delta_denominator(e.values, fp.alpha, n_frames);
    RVector d(e.values.size());
    for (Index i = 0; i < d.size(); ++i) {
        const double m = 1.0 / (1.0 + fp.alpha * e.values(i));
        d(i) = m * m / den;
    }
    return weighted_gram(rt_sqrt * e.vectors, d);
}

HermitianMatrix grad_smi(const AsymptoticPoint& point) {
    const RVector& mu = point.t_eig().values;
    RVector d = RVector::Zero(mu.size());
    for (const SpectralFixedPoint& fp : point.fixed_points()) {
        for (Index i = 0; i < mu.size(); ++i) d(i) += fp.alpha / (1.0 + fp.alpha * mu(i));
    }
    return weighted_gram(point.rt_sqrt() * point.t_eig().vectors, d);
}

HermitianMatrix grad_smi(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                         double n_frames) {
    return grad_smi(AsymptoticPoint(phi, pair, sigma2_s, n_frames));
}

HermitianMatrix grad_elmmse(const AsymptoticPoint& point) {
    const RVector& mu = point.t_eig().values;
    const Index n = mu.size();
    const CMatrix& a = point.r_tx_in_t_basis();
    const CMatrix w = point.rt_sqrt() * point.t_eig().vectors;
    const double s2 = point.sigma2_s();
    // Accumulated in the T eigenbasis, mapped back through W at the end.
    CMatrix inner = CMatrix::Zero(n, n);
    for (std::size_t j = 0; j < point.fixed_points().size(); ++j) {
        const SpectralFixedPoint& fp = point.fixed_points()[j];
        const double lam = point.rho()(static_cast<Index>(j));
        const double alpha = fp.alpha;
        RVector m(n);
        for (Index i = 0; i < n; ++i) m(i) = 1.0 / (1.0 + alpha * mu(i));
        double tr_rmtm = 0.0;  // tr(R_T M T M)
        for (Index i = 0; i < n; ++i) tr_rmtm += a(i, i).real() * mu(i) * m(i) * m(i);
        const double den = delta_denominator(mu, alpha, point.n_frames());
        const double c1 = s2 * lam * alpha * alpha * tr_rmtm / den;
        for (Index i = 0; i < n; ++i) inner(i, i) += c1 * m(i) * m(i);
        inner.noalias() -= s2 * lam * alpha * (m.asDiagonal() * a * m.asDiagonal());
    }
    return HermitianMatrix::symmetrize(w * inner * w.adjoint());
}

HermitianMatrix grad_elmmse(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s,
                            double n_frames) {
    return grad_elmmse(AsymptoticPoint(phi, pair, sigma2_s, n_frames));
}

HermitianMatrix grad_smi_upper(const AsymptoticPoint& point) {
    const RVector& mu = point.t_eig().values;
    RVector d = RVector::Zero(mu.size());
    for (Index j = 0; j < point.rho().size(); ++j) {
        const double lam = point.rho()(j);
        for (Index i = 0; i < mu.size(); ++i) d(i) += lam / (1.0 + lam * mu(i));
    }
    return weighted_gram(point.rt_sqrt() * point.t_eig().vectors, d);
}

HermitianMatrix grad_smi_upper(const PsdMatrix& phi, const CorrelationPair& pair, double sigma2_s) {
    // N_S does not enter the upper bound; any admissible value builds the point.
    return grad_smi_upper(AsymptoticPoint(phi, pair, sigma2_s, static_cast<double>(phi.dim())));
}

CMatrix random_hermitian_direction(Index n, std::uint64_t seed, std::uint64_t index) {
    RngStream stream(seed, Stream::fd_directions, index);
    const CMatrix g = stream.complex_gaussian(n, n);
    CMatrix e = 0.5 * (g + g.adjoint());
    e /= e.norm();
    return e;
}

namespace {

double compute_kappa() {
    const Index n = 4;
    const CMatrix a = random_hermitian_direction(n, 0x6b617070, 0);
    const CMatrix phi = random_hermitian_direction(n, 0x6b617070, 1);
    const CMatrix e = random_hermitian_direction(n, 0x6b617070, 2);
    const MatrixMetric f = [&a](const CMatrix& x) { return trace_product(a, x); };
    const double t = kFdRelativeStep * std::max(1.0, phi.norm());
    const double fd = (f(phi + t * e) - f(phi - t * e)) / (2.0 * t);
    const double g = trace_product(a, e);
    // Gradient of tr(AΦ) with respect to Φ* is A (up to the convention factor).
    double best = 1.0;
    double best_err = INFINITY;
    for (double k : {1.0, 2.0}) {
        const double err = std::abs(fd - k * g);
        if (err < best_err) {
            best_err = err;
            best = k;
        }
    }
    return best;
}

}  // namespace

double calibrated_kappa() {
    static const double kappa = compute_kappa();
    return kappa;
}

GradientReport fd_check(const MatrixMetric& metric, const HermitianMatrix& grad, const CMatrix& phi,
                        int directions, std::uint64_t seed, double tol) {
    if (directions < 1) throw DomainError("fd_check: directions must be >= 1");
    if (grad.dim() != phi.rows() || phi.rows() != phi.cols()) {
        throw DomainError("fd_check: gradient and Phi sizes differ");
    }
    const double kappa = calibrated_kappa();
    const double t = kFdRelativeStep * (phi.norm() > 0.0 ? phi.norm() : 1.0);
    double worst = 0.0;
    for (int d = 0; d < directions; ++d) {
        const CMatrix e = random_hermitian_direction(phi.rows(), seed, static_cast<std::uint64_t>(d));
        const double f_plus = metric(phi + t * e), f_minus = metric(phi - t * e);
        const double fd = (f_plus - f_minus) / (2.0 * t);
        const double an = kappa * trace_product(grad.mat(), e);
        // Derivatives smaller than the rounding floor of the difference quotient
        // (a few dozen ulps of f over 2t) cannot be resolved to `tol`.
        const double rounding = 64.0 * kUlp * (std::abs(f_plus) + std::abs(f_minus)) / (2.0 * t);
        const double eps = std::max(1e-8 * grad.mat().norm(), rounding / tol);
        const double denom = std::abs(fd) + eps;
        const double err = denom > 0.0 ? std::abs(fd - an) / denom : std::abs(fd - an);
        worst = std::max(worst, err);
    }
    if (worst > tol) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "fd_check: relative error %.3e exceeds %.1e with kappa = %g", worst, tol, kappa);
        throw ConventionError(buf);
    }
    return {grad, kappa, worst};
}

}  // namespace smi
