// SPDX-License-Identifier: Apache-2.0
#include "smi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "smi/errors.hpp"

namespace smi {

namespace {

void fail(const std::string& msg) { throw DomainError("SceneConfig: " + msg); }

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void SceneConfig::validate() const {
    if (n_tx < 1 || n_rx < 1 || n_comm < 1) fail("antenna counts must be >= 1");
    if (n_frames < n_tx) {
        std::ostringstream os;
        os << "n_frames = " << n_frames << " violates N_S >= N_T (n_tx = " << n_tx << ")";
        fail(os.str());
    }
    if (n_targets < 0) fail("n_targets must be >= 0");
    const auto k = static_cast<std::size_t>(n_targets);
    if (target_angles_tx.size() != k) fail("target_angles_tx must have n_targets entries");
    if (target_angles_rx.size() != k) fail("target_angles_rx must have n_targets entries");
    if (!target_gains.empty() && target_gains.size() != k) {
        fail("target_gains must be empty or have n_targets entries");
    }
    for (double g : target_gains) {
        if (!std::isfinite(g) || g < 0.0) fail("target_gains must be finite and >= 0");
    }
    if (!positive_finite(sigma2_s)) fail("sigma2_s must be > 0");
    if (!positive_finite(sigma2_c)) fail("sigma2_c must be > 0");
    if (!positive_finite(power_budget)) fail("power_budget must be > 0");
    if (!positive_finite(antenna_spacing)) fail("antenna_spacing must be > 0");
    if (!positive_finite(comm_snr)) fail("comm_snr must be > 0");
}

double SceneConfig::gain(Index k) const {
    return target_gains.empty() ? 1.0 : target_gains[static_cast<std::size_t>(k)];
}

CVector steering_vector(double theta, Index n, double spacing) {
    CVector a(n);
    const double phase = 2.0 * std::numbers::pi * spacing * std::sin(theta);
    for (Index i = 0; i < n; ++i) a(i) = std::polar(1.0, phase * static_cast<double>(i));
    return a;
}

CorrelationPair build_correlations(const SceneConfig& cfg) {
    CMatrix r_tx = CMatrix::Zero(cfg.n_tx, cfg.n_tx);
    CMatrix r_rx = CMatrix::Zero(cfg.n_rx, cfg.n_rx);
    for (Index k = 0; k < cfg.n_targets; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        const CVector at = steering_vector(cfg.target_angles_tx[idx], cfg.n_tx, cfg.antenna_spacing);
        const CVector ar = steering_vector(cfg.target_angles_rx[idx], cfg.n_rx, cfg.antenna_spacing);
        r_tx.noalias() += cfg.gain(k) * at * at.adjoint();
        r_rx.noalias() += ar * ar.adjoint();
    }
    return {PsdMatrix::trusted(r_tx), PsdMatrix::trusted(r_rx)};
}

CMatrix sample_signal(const SceneConfig& cfg, RngStream& stream) {
    return sample_signal(cfg.n_tx, cfg.n_frames, stream);
}

CMatrix sample_signal(Index n_tx, Index n_frames, RngStream& stream) {
    return stream.complex_gaussian(n_tx, n_frames, 1.0 / static_cast<double>(n_frames));
}

CVector sample_target_channel(const CorrelationPair& pair, RngStream& stream) {
    const CMatrix root = kron(psd_sqrt(pair.r_rx).mat(), psd_sqrt(pair.r_tx).mat());
    const CVector w = stream.complex_gaussian(root.cols(), 1);
    return root * w;
}

CommChannel make_comm_channel(const SceneConfig& cfg) {
    RngStream stream(cfg.seed, Stream::comm_channel);
    CMatrix h = stream.complex_gaussian(cfg.n_comm, cfg.n_tx);
    // At Φ = (P/N_T) I: tr(HΦH^H) = (P/N_T)‖H‖_F².
    const double received = cfg.power_budget / static_cast<double>(cfg.n_tx) * h.squaredNorm();
    const double target = cfg.comm_snr * static_cast<double>(cfg.n_comm) * cfg.sigma2_c;
    h *= std::sqrt(target / received);
    return {std::move(h)};
}

double comm_mi(const CommChannel& ch, const PsdMatrix& phi, double sigma2_c) {
    return comm_mi(ch, phi.mat(), sigma2_c);
}

double comm_mi(const CommChannel& ch, const CMatrix& phi, double sigma2_c) {
    const CMatrix q = (ch.h * phi * ch.h.adjoint()) / sigma2_c;
    const RVector lam = hermitian_eig(HermitianMatrix::symmetrize(q)).values;
    double acc = 0.0;
    for (Index i = 0; i < lam.size(); ++i) acc += std::log1p(std::max(lam(i), 0.0));
    return acc;
}

HermitianMatrix comm_mi_gradient(const CommChannel& ch, const CMatrix& phi, double sigma2_c) {
    const Index nc = ch.h.rows();
    const CMatrix q = CMatrix::Identity(nc, nc) + (ch.h * phi * ch.h.adjoint()) / sigma2_c;
    const CMatrix inv = q.ldlt().solve(CMatrix::Identity(nc, nc));
    return HermitianMatrix::symmetrize(ch.h.adjoint() * inv * ch.h / sigma2_c);
}

WaterFilling water_filling(const CommChannel& ch, double power, double sigma2_c) {
    const Index n = ch.h.cols();
    const EigenDecomposition e =
        hermitian_eig(HermitianMatrix::symmetrize(ch.h.adjoint() * ch.h / sigma2_c));
    // Active set shrinks from the weakest mode until all allocations are positive.
    Index active = numerical_rank(e.values, 1e-12);
    double level = 0.0;
    while (active > 0) {
        double inv_sum = 0.0;
        for (Index i = 0; i < active; ++i) inv_sum += 1.0 / e.values(i);
        level = (power + inv_sum) / static_cast<double>(active);
        if (level - 1.0 / e.values(active - 1) > 0.0) break;
        --active;
    }
    RVector alloc = RVector::Zero(n);
    double capacity = 0.0;
    for (Index i = 0; i < active; ++i) {
        alloc(i) = level - 1.0 / e.values(i);
        capacity += std::log1p(alloc(i) * e.values(i));
    }
    const CMatrix phi = e.vectors * alloc.asDiagonal() * e.vectors.adjoint();
    return {capacity, PsdMatrix::trusted(phi)};
}

PsdMatrix isotropic_covariance(Index n, double power) {
    return PsdMatrix::trusted(CMatrix::Identity(n, n) * (power / static_cast<double>(n)));
}

}  // namespace smi
