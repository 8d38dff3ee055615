// SPDX-License-Identifier: Apache-2.0
#include "smi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smi/errors.hpp"

namespace smi {

namespace {

CMatrix symmetrized(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

void require_square(const CMatrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        std::ostringstream os;
        os << who << ": expected a nonempty square matrix, got " << m.rows() << "x" << m.cols();
        throw DomainError(os.str());
    }
}

}  // namespace

double hermitian_defect(const CMatrix& m) { return max_abs(m - m.adjoint()); }

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double trace_product(const CMatrix& a, const CMatrix& b) {
    // tr(AB) = sum_ij A_ij B_ji; for Hermitian B that is sum_ij A_ij conj(B_ij).
    return (a.array() * b.transpose().array()).sum().real();
}

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
    require_square(m, "HermitianMatrix");
    if (!m.allFinite()) throw DomainError("HermitianMatrix: non-finite entry");
    const double defect = hermitian_defect(m);
    if (defect > kHermitianTol * std::max(1.0, max_abs(m))) {
        std::ostringstream os;
        os << "HermitianMatrix: max |A - A^H| = " << defect << " exceeds tolerance";
        throw DomainError(os.str());
    }
    m_ = symmetrized(m);
}

HermitianMatrix::HermitianMatrix(const CMatrix& m, Unchecked) : m_(symmetrized(m)) {}

HermitianMatrix HermitianMatrix::symmetrize(const CMatrix& m) {
    require_square(m, "HermitianMatrix");
    return HermitianMatrix(m, Unchecked{});
}

HermitianMatrix HermitianMatrix::zero(Index n) { return HermitianMatrix(CMatrix::Zero(n, n)); }

HermitianMatrix HermitianMatrix::identity(Index n) {
    return HermitianMatrix(CMatrix::Identity(n, n));
}

PsdMatrix::PsdMatrix(const CMatrix& m) : PsdMatrix(HermitianMatrix(m)) {}

PsdMatrix::PsdMatrix(const HermitianMatrix& h) : HermitianMatrix(h) {
    if (!within_psd_tolerance(hermitian_eig(h).values)) {
        throw DomainError("PsdMatrix: matrix has eigenvalues below the PSD tolerance");
    }
}

PsdMatrix PsdMatrix::zero(Index n) { return trusted(CMatrix::Zero(n, n)); }

PsdMatrix PsdMatrix::identity(Index n) { return trusted(CMatrix::Identity(n, n)); }

PsdMatrix PsdMatrix::trusted(const CMatrix& m) {
    require_square(m, "PsdMatrix");
    return PsdMatrix(m, Unchecked{});
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

EigenDecomposition hermitian_eig(const HermitianMatrix& h) { return hermitian_eig(h.mat()); }

EigenDecomposition hermitian_eig(const CMatrix& h) {
    require_square(h, "hermitian_eig");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("hermitian_eig: eigensolver did not converge");
    }
    // Eigen returns ascending order.
    const Index n = h.rows();
    EigenDecomposition out{RVector(n), CMatrix(n, n)};
    for (Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

bool within_psd_tolerance(const RVector& values) {
    if (values.size() == 0) return true;
    const double largest = values.maxCoeff();
    return values.minCoeff() >= -kPsdTol * std::max(largest, 0.0);
}

Index numerical_rank(const RVector& values, double rel_tol) {
    if (values.size() == 0) return 0;
    const double scale = values.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < values.size(); ++i) {
        if (values(i) > rel_tol * scale) ++r;
    }
    return r;
}

Index numerical_rank(const HermitianMatrix& h, double rel_tol) {
    return numerical_rank(hermitian_eig(h).values, rel_tol);
}

double logdet_plus(const PsdMatrix& h) {
    const RVector lam = hermitian_eig(h).values;
    double acc = 0.0;
    for (Index i = 0; i < lam.size(); ++i) acc += std::log1p(std::max(lam(i), 0.0));
    return acc;
}

PsdMatrix psd_sqrt(const HermitianMatrix& h) {
    const EigenDecomposition e = hermitian_eig(h);
    if (!within_psd_tolerance(e.values)) {
        throw DomainError("psd_sqrt: matrix is not positive semidefinite");
    }
    return PsdMatrix::trusted(spectral_map(e, [](double x) { return std::sqrt(std::max(x, 0.0)); }));
}

PsdMatrix psd_clip(const HermitianMatrix& h) {
    const EigenDecomposition e = hermitian_eig(h);
    if (e.values.minCoeff() >= 0.0) return PsdMatrix::trusted(h.mat());
    return PsdMatrix::trusted(spectral_map(e, [](double x) { return std::max(x, 0.0); }));
}

}  // namespace smi
