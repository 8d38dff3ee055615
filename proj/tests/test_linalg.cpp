// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smi/errors.hpp"
#include "smi/linalg.hpp"
#include "test_support.hpp"

using namespace smi;
using smi::test::random_hermitian;
using smi::test::random_psd;

namespace {

CMatrix diag(std::initializer_list<double> v) {
    RVector d(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) d(i++) = x;
    return d.cast<Complex>().asDiagonal();
}

}  // namespace

TEST_CASE("kron: identity and diagonal cases") {
    CHECK(max_abs(kron(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)) - CMatrix::Identity(6, 6)) == 0.0);
    CHECK(max_abs(kron(diag({1, 2}), diag({3, 4})) - diag({3, 4, 6, 8})) == 0.0);
}

TEST_CASE("kron: element-by-element against the block definition") {
    RngStream rng(1, Stream::test_scene);
    const CMatrix a = rng.complex_gaussian(2, 3);
    const CMatrix b = rng.complex_gaussian(4, 2);
    const CMatrix k = kron(a, b);
    REQUIRE(k.rows() == 8);
    REQUIRE(k.cols() == 6);
    double worst = 0.0;
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index p = 0; p < 4; ++p)
                for (Index q = 0; q < 2; ++q)
                    worst = std::max(worst, std::abs(k(i * 4 + p, j * 2 + q) - a(i, j) * b(p, q)));
    CHECK(worst == 0.0);
}

TEST_CASE("kron: mixed-product property") {
    RngStream rng(2, Stream::test_scene);
    for (int t = 0; t < 10; ++t) {
        const CMatrix a = rng.complex_gaussian(3, 2), c = rng.complex_gaussian(2, 4);
        const CMatrix b = rng.complex_gaussian(2, 3), d = rng.complex_gaussian(3, 2);
        const CMatrix lhs = kron(a, b) * kron(c, d);
        const CMatrix rhs = kron(a * c, b * d);
        CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }
}

TEST_CASE("HermitianMatrix validation") {
    CHECK_THROWS_AS(HermitianMatrix(CMatrix::Zero(2, 3)), DomainError);
    CMatrix m = CMatrix::Identity(2, 2);
    m(0, 1) = Complex(0.0, 1.0);
    CHECK_THROWS_AS(HermitianMatrix{m}, DomainError);
    m(1, 0) = Complex(0.0, -1.0);
    CHECK_NOTHROW(HermitianMatrix{m});
    m(0, 0) = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(HermitianMatrix{m}, DomainError);
    // Drift below the relative tolerance is accepted and removed.
    CMatrix drift = CMatrix::Identity(3, 3) * 100.0;
    drift(0, 2) = Complex(1e-11, 0.0);
    const HermitianMatrix h(drift);
    CHECK(hermitian_defect(h.mat()) == 0.0);
}

TEST_CASE("PsdMatrix rejects indefinite input") {
    CHECK_THROWS_AS(PsdMatrix(diag({1.0, -1e-3})), DomainError);
    CHECK_NOTHROW(PsdMatrix(diag({1.0, -1e-12})));
    CHECK_NOTHROW(PsdMatrix(diag({0.0, 0.0})));
}

TEST_CASE("hermitian_eig: examples and reconstruction") {
    const EigenDecomposition e4 = hermitian_eig(HermitianMatrix::identity(4));
    CHECK(max_abs(e4.values - RVector::Ones(4)) <= 1e-15);

    const EigenDecomposition e2 = hermitian_eig(HermitianMatrix(diag({1, 5})));
    CHECK(e2.values(0) == doctest::Approx(5.0));
    CHECK(e2.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(e2.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e2.vectors(0, 1)) == doctest::Approx(1.0));

    RngStream rng(3, Stream::test_scene);
    const HermitianMatrix h(random_hermitian(rng, 8));
    const EigenDecomposition e = hermitian_eig(h);
    for (Index i = 1; i < 8; ++i) CHECK(e.values(i) <= e.values(i - 1));
    const CMatrix back = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    CHECK((back - h.mat()).norm() <= 1e-10 * h.mat().norm());
    CHECK((e.vectors.adjoint() * e.vectors - CMatrix::Identity(8, 8)).norm() <= 1e-10);
}

TEST_CASE("hermitian_eig: PSD spectra stay above the PSD tolerance") {
    RngStream rng(4, Stream::test_scene);
    for (int t = 0; t < 20; ++t) {
        const PsdMatrix p = smi::test::random_low_rank_psd(rng, 8, 3);
        const RVector v = hermitian_eig(p).values;
        CHECK(v(7) >= -1e-10 * v(0));
        CHECK(within_psd_tolerance(v));
    }
}

TEST_CASE("logdet_plus") {
    CHECK(logdet_plus(PsdMatrix::zero(3)) == 0.0);
    CHECK(logdet_plus(PsdMatrix(diag({std::exp(1.0) - 1.0, std::exp(2.0) - 1.0}))) == doctest::Approx(3.0).epsilon(1e-14));
    RngStream rng(5, Stream::test_scene);
    const PsdMatrix p = random_psd(rng, 8, 5.0);
    const RVector v = hermitian_eig(p).values;
    double oracle = 0.0;
    for (Index i = 0; i < v.size(); ++i) oracle += std::log1p(v(i));
    CHECK(logdet_plus(p) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("logdet_plus of a Kronecker product factorizes over eigenvalue pairs") {
    RngStream rng(6, Stream::test_scene);
    for (int t = 0; t < 5; ++t) {
        const PsdMatrix a = random_psd(rng, 3, 2.0);
        const PsdMatrix b = random_psd(rng, 4, 3.0);
        const RVector la = hermitian_eig(a).values, lb = hermitian_eig(b).values;
        double oracle = 0.0;
        for (Index i = 0; i < la.size(); ++i)
            for (Index j = 0; j < lb.size(); ++j) oracle += std::log1p(la(i) * lb(j));
        const double got = logdet_plus(PsdMatrix::trusted(kron(a.mat(), b.mat())));
        CHECK(std::abs(got - oracle) <= 1e-10 * std::max(1.0, oracle));
    }
}

TEST_CASE("psd_sqrt") {
    CHECK(max_abs(psd_sqrt(HermitianMatrix::identity(3)).mat() - CMatrix::Identity(3, 3)) <= 1e-15);
    CHECK(max_abs(psd_sqrt(HermitianMatrix(diag({4, 9}))).mat() - diag({2, 3})) <= 1e-14);
    RngStream rng(7, Stream::test_scene);
    const PsdMatrix p = smi::test::random_low_rank_psd(rng, 8, 5, 4.0);
    const CMatrix r = psd_sqrt(p).mat();
    CHECK((r * r - p.mat()).norm() <= 1e-10 * p.mat().norm());
    CHECK_THROWS_AS(psd_sqrt(HermitianMatrix(diag({1.0, -0.5}))), DomainError);
}

TEST_CASE("psd_clip") {
    CHECK(max_abs(psd_clip(HermitianMatrix(diag({1, -2}))).mat() - diag({1, 0})) <= 1e-15);
    RngStream rng(8, Stream::test_scene);
    const PsdMatrix p = random_psd(rng, 6);
    CHECK(max_abs(psd_clip(p).mat() - p.mat()) <= 1e-12);

    // Nearest-point property against random PSD candidates.
    const HermitianMatrix h(random_hermitian(rng, 6));
    const double d = (psd_clip(h).mat() - h.mat()).norm();
    for (int t = 0; t < 200; ++t) {
        const PsdMatrix c = random_psd(rng, 6, rng.uniform(0.1, 6.0), 0.0);
        CHECK(d <= (c.mat() - h.mat()).norm() + 1e-12);
    }
}

TEST_CASE("numerical_rank and trace_product") {
    RVector v(4);
    v << 1.0, 1e-3, 1e-10, 0.0;
    CHECK(numerical_rank(v) == 2);
    RngStream rng(9, Stream::test_scene);
    const CMatrix a = random_hermitian(rng, 5), b = random_hermitian(rng, 5);
    CHECK(trace_product(a, b) == doctest::Approx((a * b).trace().real()).epsilon(1e-12));
}
