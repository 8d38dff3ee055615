// SPDX-License-Identifier: Apache-2.0
#include "smi/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "smi/errors.hpp"
#include "smi/rng.hpp"

namespace smi {

namespace {

void check_shapes(const CMatrix& s, const CMatrix& f, const CorrelationPair& pair) {
    const Index nt = pair.r_tx.dim();
    if (f.rows() != nt || f.cols() != nt) throw DomainError("phi_factor must be N_T x N_T");
    if (s.rows() != nt) throw DomainError("signal matrix must have N_T rows");
}

// Support of R = R_R ⊗ R_T: eigenvectors with λ > kRankTol · λ_max.
struct Support {
    CMatrix basis;   // N x r
    RVector values;  // r
};

Support support_of(const CMatrix& r) {
    const EigenDecomposition e = hermitian_eig(r);
    const Index k = numerical_rank(e.values);
    return {e.vectors.leftCols(k), e.values.head(k)};
}

}  // namespace

RealizationEvaluator::RealizationEvaluator(const CMatrix& phi_factor, const CorrelationPair& pair,
                                           double sigma2_s)
    : rt_sqrt_f_(psd_sqrt(pair.r_tx).mat() * phi_factor),
      r_tx_(pair.r_tx.mat()),
      rx_eigs_(receive_eigenvalues_unscaled(pair.r_rx)),
      sigma2_s_(sigma2_s) {
    if (!(sigma2_s > 0.0)) throw DomainError("sigma2_s must be > 0");
}

RVector RealizationEvaluator::receive_eigenvalues_unscaled(const PsdMatrix& r_rx) {
    const RVector lam = hermitian_eig(r_rx).values;
    return lam.head(numerical_rank(lam));
}

RealizationMetrics RealizationEvaluator::operator()(const CMatrix& s) const {
    const CMatrix w = rt_sqrt_f_ * s;
    const EigenDecomposition e = hermitian_eig(CMatrix(w * w.adjoint()));
    const CMatrix rt_basis = e.vectors.adjoint() * r_tx_ * e.vectors;
    RealizationMetrics out{0.0, 0.0};
    for (Index j = 0; j < rx_eigs_.size(); ++j) {
        const double lam = rx_eigs_(j) / sigma2_s_;
        double tr = 0.0;
        for (Index i = 0; i < e.values.size(); ++i) {
            const double mu = std::max(e.values(i), 0.0);
            out.smi += std::log1p(lam * mu);
            tr += rt_basis(i, i).real() / (1.0 + lam * mu);
        }
        out.lmmse_trace += rx_eigs_(j) * tr;
    }
    return out;
}

double smi_exact(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                 double sigma2_s) {
    check_shapes(s, phi_factor, pair);
    return RealizationEvaluator(phi_factor, pair, sigma2_s)(s).smi;
}

PsdMatrix lmmse_matrix(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                       double sigma2_s) {
    check_shapes(s, phi_factor, pair);
    const CMatrix rt_root = psd_sqrt(pair.r_tx).mat();
    const CMatrix w = rt_root * phi_factor * s;
    const CMatrix b = kron(pair.r_rx.mat(), w * w.adjoint()) / sigma2_s;
    const Index n = b.rows();
    const CMatrix inner = (CMatrix::Identity(n, n) + b).ldlt().solve(CMatrix::Identity(n, n));
    const CMatrix r_root = kron(psd_sqrt(pair.r_rx).mat(), rt_root);
    return PsdMatrix::trusted(r_root * inner * r_root);
}

PsdMatrix bcrb_matrix(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                      double sigma2_s) {
    check_shapes(s, phi_factor, pair);
    const Support sup = support_of(kron(pair.r_rx.mat(), pair.r_tx.mat()));
    const Index r = sup.values.size();
    const Index n = pair.r_rx.dim() * pair.r_tx.dim();
    if (r == 0) return PsdMatrix::zero(n);
    const CMatrix x = phi_factor * s;
    const CMatrix fisher_data =
        kron(CMatrix::Identity(pair.r_rx.dim(), pair.r_rx.dim()), x * x.adjoint()) / sigma2_s;
    CMatrix j = sup.basis.adjoint() * fisher_data * sup.basis;
    j.diagonal() += sup.values.cwiseInverse().cast<Complex>();
    Eigen::LLT<CMatrix> llt(0.5 * (j + j.adjoint()));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("bcrb_matrix: Bayesian Fisher matrix is numerically singular");
    }
    const CMatrix psi = llt.solve(CMatrix::Identity(r, r));
    return PsdMatrix::trusted(sup.basis * psi * sup.basis.adjoint());
}

IdentityGaps verify_prop4(const CMatrix& s, const CMatrix& phi_factor, const CorrelationPair& pair,
                       double sigma2_s) {
    check_shapes(s, phi_factor, pair);
    const CMatrix r = kron(pair.r_rx.mat(), pair.r_tx.mat());
    const Support sup = support_of(r);
    const PsdMatrix bcrb = bcrb_matrix(s, phi_factor, pair, sigma2_s);
    const PsdMatrix lmmse = lmmse_matrix(s, phi_factor, pair, sigma2_s);

    // log det R_s - log det Ψ_s = log det(Λ^{1/2} J Λ^{1/2}) with J = Ψ_s^{-1} the
    // support Fisher matrix, i.e. log det(I + σ^{-2} Λ^{1/2} U^H (I ⊗ X X^H) U Λ^{1/2}).
    double logdet_ratio = 0.0;
    if (sup.values.size() > 0) {
        const CMatrix x = phi_factor * s;
        const CMatrix scaled = sup.basis * sup.values.cwiseSqrt().cast<Complex>().asDiagonal();
        const CMatrix data = kron(CMatrix::Identity(pair.r_rx.dim(), pair.r_rx.dim()), x * x.adjoint());
        logdet_ratio = logdet_plus(PsdMatrix::trusted(scaled.adjoint() * data * scaled / sigma2_s));
    }
    const double smi = smi_exact(s, phi_factor, pair, sigma2_s);
    return {max_abs(bcrb.mat() - lmmse.mat()), std::abs(logdet_ratio - smi), max_abs(r)};
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += data[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

std::vector<McEstimate> mc_estimate(const VectorMetric& metric, Index n_outputs,
                                    const SceneConfig& cfg, Index n_trials, unsigned threads) {
    if (n_trials < 2) throw DomainError("mc_estimate: n_trials must be >= 2");
    if (n_outputs < 1) throw DomainError("mc_estimate: n_outputs must be >= 1");
    const auto trials = static_cast<std::size_t>(n_trials);
    const auto outputs = static_cast<std::size_t>(n_outputs);
    // values[k * trials + i] holds output k of trial i.
    std::vector<double> values(outputs * trials);

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned worker, unsigned stride) {
        try {
            for (std::size_t i = worker; i < trials; i += stride) {
                RngStream stream(cfg.seed, Stream::signal, i);
                const CMatrix s = sample_signal(cfg, stream);
                const std::vector<double> v = metric(s);
                if (v.size() != outputs) throw DomainError("mc_estimate: metric output size mismatch");
                for (std::size_t k = 0; k < outputs; ++k) values[k * trials + i] = v[k];
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(trials)));
    if (n_workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<McEstimate> out(outputs);
    std::vector<double> dev(trials);
    for (std::size_t k = 0; k < outputs; ++k) {
        const double* col = values.data() + k * trials;
        const double mean = pairwise_sum(col, trials) / static_cast<double>(trials);
        for (std::size_t i = 0; i < trials; ++i) dev[i] = (col[i] - mean) * (col[i] - mean);
        const double var = pairwise_sum(dev.data(), trials) / static_cast<double>(trials - 1);
        out[k] = {mean, std::sqrt(var / static_cast<double>(trials)), n_trials, cfg.seed};
    }
    return out;
}

McEstimate mc_estimate(const ScalarMetric& metric, const SceneConfig& cfg, Index n_trials,
                       unsigned threads) {
    const VectorMetric wrapped = [&metric](const CMatrix& s) { return std::vector<double>{metric(s)}; };
    return mc_estimate(wrapped, 1, cfg, n_trials, threads).front();
}

}  // namespace smi
