// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include <Eigen/Dense>

namespace smi {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative tolerance on max |A - A^H| accepted as Hermitian.
inline constexpr double kHermitianTol = 1e-12;
/// Relative tolerance on the smallest eigenvalue accepted as PSD.
inline constexpr double kPsdTol = 1e-10;
/// Relative threshold separating numerically nonzero eigenvalues.
inline constexpr double kRankTol = 1e-9;

/// Square complex matrix that is Hermitian to kHermitianTol. The stored
/// payload is exactly Hermitian: construction replaces A by (A + A^H)/2.
class HermitianMatrix {
  public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(const CMatrix& m);

    static HermitianMatrix zero(Index n);
    static HermitianMatrix identity(Index n);

    /// (m + m^H)/2 without the tolerance check, for sums of Hermitian terms
    /// that drift by roundoff.
    static HermitianMatrix symmetrize(const CMatrix& m);

    const CMatrix& mat() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }

  protected:
    struct Unchecked {};
    HermitianMatrix(const CMatrix& m, Unchecked);

    CMatrix m_;
};

/// Hermitian matrix with smallest eigenvalue >= -kPsdTol * largest.
class PsdMatrix : public HermitianMatrix {
  public:
    PsdMatrix() = default;
    explicit PsdMatrix(const CMatrix& m);
    explicit PsdMatrix(const HermitianMatrix& h);

    static PsdMatrix zero(Index n);
    static PsdMatrix identity(Index n);

    /// Wraps a matrix that is PSD by construction (e.g. V diag(λ≥0) V^H or
    /// B B^H). Only symmetrizes; skips the eigenvalue check.
    static PsdMatrix trusted(const CMatrix& m);

  private:
    PsdMatrix(const CMatrix& m, Unchecked u) : HermitianMatrix(m, u) {}
};

struct EigenDecomposition {
    RVector values;   // descending
    CMatrix vectors;  // columns match values
};

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Eigendecomposition h = V diag(λ) V^H with λ sorted descending.
/// Throws NumericalError if the solver does not converge.
EigenDecomposition hermitian_eig(const HermitianMatrix& h);

/// Same as above for a raw matrix the caller guarantees to be Hermitian;
/// only the lower triangle is read.
EigenDecomposition hermitian_eig(const CMatrix& h);

/// V diag(f(λ)) V^H.
template <typename F>
CMatrix spectral_map(const EigenDecomposition& e, F&& f) {
    RVector mapped(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) mapped(i) = f(e.values(i));
    return e.vectors * mapped.asDiagonal() * e.vectors.adjoint();
}

/// log det(I + h) in nats.
double logdet_plus(const PsdMatrix& h);

/// Principal square root. Eigenvalues within the PSD tolerance below zero are
/// clamped; anything more negative raises DomainError.
PsdMatrix psd_sqrt(const HermitianMatrix& h);

/// Frobenius-nearest PSD matrix: negative eigenvalues set to zero.
PsdMatrix psd_clip(const HermitianMatrix& h);

/// True when the smallest eigenvalue is >= -kPsdTol * max(largest, 0).
bool within_psd_tolerance(const RVector& descending_values);

/// Number of eigenvalues above rel_tol * max |λ|.
Index numerical_rank(const RVector& values, double rel_tol = kRankTol);
Index numerical_rank(const HermitianMatrix& h, double rel_tol = kRankTol);

/// Largest |A - A^H| entry.
double hermitian_defect(const CMatrix& m);

/// Largest entry magnitude.
double max_abs(const CMatrix& m);

/// Real trace of a Hermitian product tr(A B); both inputs Hermitian of equal size.
double trace_product(const CMatrix& a, const CMatrix& b);

}  // namespace smi
