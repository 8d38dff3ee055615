// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smi/asymptotic.hpp"
#include "smi/errors.hpp"
#include "smi/gradient.hpp"
#include "test_support.hpp"

using namespace smi;
using smi::test::random_psd;
using smi::test::random_scene;

namespace {

double min_eig(const CMatrix& m) { return hermitian_eig(HermitianMatrix::symmetrize(m)).values.minCoeff(); }

struct Scene {
    CorrelationPair pair;
    PsdMatrix phi;
    double s2;
    double ns;
};

Scene scene(std::uint64_t seed, Index nt = 6, Index nr = 5, Index k = 3) {
    const double s2 = 0.5;
    const SceneConfig cfg = random_scene(seed, nt, nr, k, nt + 2, s2);
    RngStream rng(seed, Stream::test_scene, 7);
    return {build_correlations(cfg), random_psd(rng, nt, 1.0), s2, static_cast<double>(nt + 2)};
}

}  // namespace

TEST_CASE("kappa calibrates to one") {
    CHECK(calibrated_kappa() == 1.0);
    CHECK(calibrated_kappa() == calibrated_kappa());
}

TEST_CASE("fd_check: linear metric is exact, a doubled gradient is rejected") {
    RngStream rng(1, Stream::test_scene);
    const PsdMatrix a = random_psd(rng, 5, 3.0);
    const MatrixMetric lin = [&](const CMatrix& p) { return (a.mat() * p).trace().real(); };
    const CMatrix phi = random_psd(rng, 5, 1.0).mat();
    const HermitianMatrix g(a.mat());
    const GradientReport r = fd_check(lin, g, phi, 10);
    CHECK(r.kappa == 1.0);
    CHECK(r.fd_relative_error < 1e-9);
    CHECK_THROWS_AS(fd_check(lin, HermitianMatrix(CMatrix(2.0 * a.mat())), phi, 10), ConventionError);
}

TEST_CASE("random_hermitian_direction") {
    const CMatrix e = random_hermitian_direction(6, 3, 4);
    CHECK(hermitian_defect(e) == 0.0);
    CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(max_abs(e - random_hermitian_direction(6, 3, 4)) == 0.0);
    CHECK(max_abs(e - random_hermitian_direction(6, 3, 5)) > 0.0);
}

TEST_CASE("gradients at Phi = 0") {
    const Scene s = scene(2);
    const PsdMatrix zero = PsdMatrix::zero(6);
    const CMatrix rt = s.pair.r_tx.mat();
    CHECK(max_abs(grad_delta(zero, s.pair.r_tx, 3.0, s.ns).mat() - rt / s.ns) <= 1e-14 * max_abs(rt));

    const RVector lam = hermitian_eig(s.pair.r_rx).values / s.s2;
    double sum = 0.0, sum2 = 0.0;
    for (Index j = 0; j < numerical_rank(hermitian_eig(s.pair.r_rx).values); ++j) {
        sum += lam(j);
        sum2 += lam(j) * lam(j);
    }
    CHECK(max_abs(grad_smi(zero, s.pair, s.s2, s.ns).mat() - sum * rt) <= 1e-12 * sum * max_abs(rt));
    const CMatrix el_ref = -s.s2 * sum2 * rt * rt;
    CHECK(max_abs(grad_elmmse(zero, s.pair, s.s2, s.ns).mat() - el_ref) <= 1e-12 * max_abs(el_ref));
    CHECK(max_abs(grad_smi_upper(zero, s.pair, s.s2).mat() - sum * rt) <= 1e-12 * sum * max_abs(rt));
}

TEST_CASE("grad_delta: scalar implicit differentiation") {
    // δ = t / (N (1 + α t)), α = ρ/(1+ρδ), t = r φ. Differentiating implicitly,
    // dδ/dφ = r / (N (1 + α t)² − α² t²).
    for (double r : {0.3, 1.0, 4.0}) {
        for (double phi : {0.1, 1.0, 7.0}) {
            const double rho = 2.5, n = 3.0;
            const PsdMatrix rt(CMatrix::Constant(1, 1, r));
            const PsdMatrix ph(CMatrix::Constant(1, 1, phi));
            const FixedPointSolution fp = solve_fixed_point(t_of_phi(ph, rt), rho, n);
            const double t = r * phi, a = fp.alpha;
            const double oracle = r / (n * (1 + a * t) * (1 + a * t) - a * a * t * t);
            CHECK(grad_delta(ph, rt, rho, n).mat()(0, 0).real() == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
}

TEST_CASE("finite differences: delta, SMI, ELMMSE, upper bound") {
    for (std::uint64_t t = 0; t < 5; ++t) {
        const Scene s = scene(10 + t);
        const double rho = 2.0;
        const MatrixMetric delta = [&](const CMatrix& p) {
            return solve_fixed_point(t_of_phi(PsdMatrix::trusted(p), s.pair.r_tx), rho, s.ns).delta;
        };
        CHECK_NOTHROW(fd_check(delta, grad_delta(s.phi, s.pair.r_tx, rho, s.ns), s.phi.mat(), 8, t));

        const MatrixMetric smi = [&](const CMatrix& p) {
            return smi_asymptotic(PsdMatrix::trusted(p), s.pair, s.s2, s.ns);
        };
        const GradientReport rs = fd_check(smi, grad_smi(s.phi, s.pair, s.s2, s.ns), s.phi.mat(), 8, t);
        CHECK(rs.fd_relative_error < 1e-6);

        const MatrixMetric el = [&](const CMatrix& p) {
            return elmmse_asymptotic(PsdMatrix::trusted(p), s.pair, s.s2, s.ns);
        };
        const GradientReport re = fd_check(el, grad_elmmse(s.phi, s.pair, s.s2, s.ns), s.phi.mat(), 8, t);
        CHECK(re.fd_relative_error < 1e-6);

        const MatrixMetric ub = [&](const CMatrix& p) {
            return smi_upper_bound(PsdMatrix::trusted(p), s.pair, s.s2);
        };
        CHECK_NOTHROW(fd_check(ub, grad_smi_upper(s.phi, s.pair, s.s2), s.phi.mat(), 8, t));
    }
}

TEST_CASE("one kappa across 20 scenes") {
    for (std::uint64_t t = 0; t < 20; ++t) {
        const Index nt = 2 + static_cast<Index>(t % 7);
        const Scene s = scene(100 + t, nt, 2 + static_cast<Index>((t * 3) % 7), 1 + static_cast<Index>(t % 5));
        const MatrixMetric smi = [&](const CMatrix& p) {
            return smi_asymptotic(PsdMatrix::trusted(p), s.pair, s.s2, s.ns);
        };
        const MatrixMetric el = [&](const CMatrix& p) {
            return elmmse_asymptotic(PsdMatrix::trusted(p), s.pair, s.s2, s.ns);
        };
        const GradientReport a = fd_check(smi, grad_smi(s.phi, s.pair, s.s2, s.ns), s.phi.mat(), 4, t);
        const GradientReport b = fd_check(el, grad_elmmse(s.phi, s.pair, s.s2, s.ns), s.phi.mat(), 4, t);
        CHECK(a.kappa == 1.0);
        CHECK(b.kappa == 1.0);
    }
}

TEST_CASE("structure: Hermitian, PSD SMI gradient, ELMMSE decreasing along Phi") {
    RngStream rng(3, Stream::test_scene);
    for (std::uint64_t t = 0; t < 50; ++t) {
        const Index nt = 2 + static_cast<Index>(t % 9);
        const SceneConfig cfg = random_scene(500 + t, nt, 3 + static_cast<Index>(t % 5), 1 + static_cast<Index>(t % 6),
                                             nt + static_cast<Index>(t % 5), 0.1 + 0.05 * static_cast<double>(t));
        const CorrelationPair p = build_correlations(cfg);
        const PsdMatrix phi = t % 3 == 0 ? smi::test::random_low_rank_psd(rng, nt, 1, 1.0) : random_psd(rng, nt, 2.0);
        const double ns = static_cast<double>(cfg.n_frames);
        const CMatrix gs = grad_smi(phi, p, cfg.sigma2_s, ns).mat();
        const CMatrix ge = grad_elmmse(phi, p, cfg.sigma2_s, ns).mat();
        CHECK(hermitian_defect(gs) <= 1e-10 * std::max(1.0, max_abs(gs)));
        CHECK(hermitian_defect(ge) <= 1e-10 * std::max(1.0, max_abs(ge)));
        CHECK(min_eig(gs) >= -1e-10 * max_abs(gs));
        CHECK((ge * phi.mat()).trace().real() <= 0.0);
        const CMatrix gd = grad_delta(phi, p.r_tx, 1.0 / cfg.sigma2_s, ns).mat();
        CHECK(min_eig(gd) >= -1e-12 * max_abs(gd));
    }
}

TEST_CASE("AsymptoticPoint overloads match the scene overloads") {
    const Scene s = scene(4);
    const AsymptoticPoint pt(s.phi, s.pair, s.s2, s.ns);
    CHECK(max_abs(grad_smi(pt).mat() - grad_smi(s.phi, s.pair, s.s2, s.ns).mat()) == 0.0);
    CHECK(max_abs(grad_elmmse(pt).mat() - grad_elmmse(s.phi, s.pair, s.s2, s.ns).mat()) == 0.0);
    CHECK(max_abs(grad_smi_upper(pt).mat() - grad_smi_upper(s.phi, s.pair, s.s2).mat()) == 0.0);
}
