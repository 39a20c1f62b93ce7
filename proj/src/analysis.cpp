// SPDX-License-Identifier: Apache-2.0
//
// isacsim: link-level simulator for sensing-assisted OFDM channel estimation
// Copyright (C) 2026 the isacsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "isacsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace isacsim {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

constexpr double kHermTol = 1e-9;

void check_hermitian(const CMat& a, const char* name) {
    require(a.rows() == a.cols(), std::string(name) + " is not square");
    const double scale = std::max(1.0, a.norm());
    require((a - a.adjoint()).norm() <= kHermTol * scale,
            std::string(name) + " is not Hermitian within tolerance");
}

// eigendecomposition with eigenvalues sorted descending and clamped at zero
void eig_descending(const CMat& a, Eigen::VectorXd& values, CMat& vectors) {
    Eigen::SelfAdjointEigenSolver<CMat> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition did not converge");
    const Eigen::Index n = a.rows();
    values.resize(n);
    vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = n - 1 - i;  // Eigen sorts ascending
        values(i) = std::max(0.0, solver.eigenvalues()(src));
        vectors.col(i) = solver.eigenvectors().col(src);
    }
}

}  // namespace

SpectralDecomp spectral_decomp(const CMat& r_hat_pp, const CMat& r_true_pp, double sigma_hat_sq) {
    check_hermitian(r_hat_pp, "constructed pilot correlation");
    check_hermitian(r_true_pp, "true pilot correlation");
    require(r_hat_pp.rows() == r_true_pp.rows(), "correlation matrices differ in size");
    require(sigma_hat_sq > 0.0, "sigma_hat_sq must be positive");

    SpectralDecomp d;
    CMat v;
    eig_descending(r_hat_pp, d.singular_values_est, v);
    {
        CMat u;
        eig_descending(r_true_pp, d.singular_values_true, u);
    }
    d.wiener_gains = d.singular_values_est.array() / (d.singular_values_est.array() + sigma_hat_sq);
    d.b = (v.adjoint() * r_true_pp * v).diagonal().real().cwiseMax(0.0);
    return d;
}

double nmse_theorem1(const CMat& r_hat_pp, const CMat& r_true_pp, double sigma_hat_sq,
                     double sigma_sq) {
    const SpectralDecomp d = spectral_decomp(r_hat_pp, r_true_pp, sigma_hat_sq);
    const Eigen::ArrayXd lam = d.wiener_gains.array();
    const double sum =
        ((1.0 - lam).square() * d.b.array() + sigma_sq * lam.square()).sum();
    return sum / static_cast<double>(r_hat_pp.rows());
}

double nmse_lower_bound(const CMat& r_true_pp, double sigma_hat_sq, double sigma_sq) {
    check_hermitian(r_true_pp, "true pilot correlation");
    require(sigma_hat_sq > 0.0, "sigma_hat_sq must be positive");
    Eigen::VectorXd mu;
    CMat u;
    eig_descending(r_true_pp, mu, u);
    const Eigen::ArrayXd lam = mu.array() / (mu.array() + sigma_hat_sq);
    const double sum = ((1.0 - lam).square() * mu.array() + sigma_sq * lam.square()).sum();
    return sum / static_cast<double>(r_true_pp.rows());
}

ProjectionEnergy projection_energy(const CMat& r_hat_pp, const CMat& r_true_pp) {
    check_hermitian(r_hat_pp, "constructed pilot correlation");
    check_hermitian(r_true_pp, "true pilot correlation");
    require(r_hat_pp.rows() == r_true_pp.rows(), "correlation matrices differ in size");

    Eigen::VectorXd gamma, mu;
    CMat v, u;
    eig_descending(r_hat_pp, gamma, v);
    eig_descending(r_true_pp, mu, u);

    ProjectionEnergy p;
    p.overlap = (v.adjoint() * u).cwiseAbs2();
    p.b = p.overlap * mu;
    return p;
}

PsdSupport make_support(const std::vector<Rect>& rects, double pilot_density) {
    require(!rects.empty(), "support needs at least one rectangle");
    require(pilot_density >= 1.0, "pilot density must be >= 1");

    // breakpoint arrangement: every cell of the refined grid is either fully
    // inside or fully outside the union
    std::set<double> taus, fds;
    for (const Rect& r : rects) {
        require(r.delay_hi > r.delay_lo && r.doppler_hi > r.doppler_lo,
                "support rectangle with non-positive extent");
        taus.insert(r.delay_lo);
        taus.insert(r.delay_hi);
        fds.insert(r.doppler_lo);
        fds.insert(r.doppler_hi);
    }
    const std::vector<double> tv(taus.begin(), taus.end());
    const std::vector<double> fv(fds.begin(), fds.end());

    PsdSupport s;
    s.pilot_density = pilot_density;
    for (size_t i = 0; i + 1 < tv.size(); ++i) {
        for (size_t j = 0; j + 1 < fv.size(); ++j) {
            const double tc = 0.5 * (tv[i] + tv[i + 1]);
            const double fc = 0.5 * (fv[j] + fv[j + 1]);
            const bool inside = std::any_of(rects.begin(), rects.end(), [&](const Rect& r) {
                return tc >= r.delay_lo && tc <= r.delay_hi && fc >= r.doppler_lo &&
                       fc <= r.doppler_hi;
            });
            if (inside) s.cells.push_back({tv[i], tv[i + 1], fv[j], fv[j + 1]});
        }
    }
    for (const Rect& c : s.cells) s.total_area += c.area();
    require(s.total_area > 0.0, "support has zero area");
    s.height = 1.0 / s.total_area;
    return s;
}

PsdSupport support_separable(const SensingEstimate& est, const ToleranceRecord& tol,
                             double pilot_density) {
    require(est.num_paths() == tol.num_paths, "estimate and tolerance record differ in size");
    std::vector<Rect> rects;
    for (const Interval& d : tol.delay_set.intervals())
        for (const Interval& f : tol.doppler_set.intervals())
            rects.push_back({d.lo, d.hi, f.lo, f.hi});
    return make_support(rects, pilot_density);
}

PsdSupport support_full_2d(const SensingEstimate& est, const ToleranceRecord& tol,
                           double pilot_density) {
    require(est.num_paths() == tol.num_paths, "estimate and tolerance record differ in size");
    std::vector<Rect> rects;
    for (int l = 0; l < est.num_paths(); ++l)
        rects.push_back({est.delays[l] - 0.5 * tol.c_freq[l], est.delays[l] + 0.5 * tol.c_freq[l],
                         est.dopplers[l] - 0.5 * tol.c_time[l],
                         est.dopplers[l] + 0.5 * tol.c_time[l]});
    return make_support(rects, pilot_density);
}

namespace {

bool support_contains(const PsdSupport& s, double tau, double fd) {
    return std::any_of(s.cells.begin(), s.cells.end(), [&](const Rect& r) {
        return tau >= r.delay_lo && tau <= r.delay_hi && fd >= r.doppler_lo && fd <= r.doppler_hi;
    });
}

void check_alias_free(const PsdSupport& s, const OfdmConfig& cfg, const DmrsPattern& pat,
                      const char* which) {
    double tau_max = 0.0, fd_max = 0.0;
    for (const Rect& r : s.cells) {
        tau_max = std::max({tau_max, std::abs(r.delay_lo), std::abs(r.delay_hi)});
        fd_max = std::max({fd_max, std::abs(r.doppler_lo), std::abs(r.doppler_hi)});
    }
    const double tau_crit = tau_max * pat.sc_interval * cfg.subcarrier_spacing;
    const double fd_crit = fd_max * pat.sym_interval * cfg.symbol_duration;
    if (tau_crit >= 0.5 || fd_crit >= 0.5)
        throw std::domain_error(std::string("alias-free condition violated for the ") + which +
                                " PSD support: tau_max*dsc*df = " + std::to_string(tau_crit) +
                                ", fd_max*dsym*To = " + std::to_string(fd_crit) +
                                " (both must stay below 0.5)");
}

}  // namespace

PsdNmse nmse_psd_terms(const PsdSupport& s_true, const PsdSupport& s_hat, double sigma_sq,
                       double sigma_hat_sq, const OfdmConfig& cfg, const DmrsPattern& pat) {
    require(sigma_hat_sq > 0.0, "sigma_hat_sq must be positive");
    require(s_true.pilot_density == s_hat.pilot_density,
            "supports carry different pilot densities");
    check_alias_free(s_true, cfg, pat, "true");
    check_alias_free(s_hat, cfg, pat, "constructed");

    // breakpoints of both supports refine each integrand-constant cell
    std::set<double> taus, fds;
    for (const PsdSupport* s : {&s_true, &s_hat}) {
        for (const Rect& r : s->cells) {
            taus.insert(r.delay_lo);
            taus.insert(r.delay_hi);
            fds.insert(r.doppler_lo);
            fds.insert(r.doppler_hi);
        }
    }
    const std::vector<double> tv(taus.begin(), taus.end());
    const std::vector<double> fv(fds.begin(), fds.end());

    const double rho = s_hat.pilot_density;
    const double nm = static_cast<double>(cfg.num_subcarriers) * cfg.num_symbols;

    PsdNmse out;
    for (size_t i = 0; i + 1 < tv.size(); ++i) {
        for (size_t j = 0; j + 1 < fv.size(); ++j) {
            const double tc = 0.5 * (tv[i] + tv[i + 1]);
            const double fc = 0.5 * (fv[j] + fv[j + 1]);
            const double s = support_contains(s_true, tc, fc) ? s_true.height : 0.0;
            const double sh = support_contains(s_hat, tc, fc) ? s_hat.height : 0.0;
            if (s == 0.0 && sh == 0.0) continue;
            const double area = (tv[i + 1] - tv[i]) * (fv[j + 1] - fv[j]);
            const double denom = sh / rho + sigma_hat_sq;
            out.mismatch_term +=
                area * sigma_hat_sq * (sigma_hat_sq * s * s - sigma_sq * sh * sh) / (denom * denom);
            out.baseline_term += area * sigma_sq * sh / denom;
        }
    }
    out.mismatch_term /= nm;
    out.baseline_term /= nm;
    return out;
}

double nmse_psd(const PsdSupport& s_true, const PsdSupport& s_hat, double sigma_sq,
                double sigma_hat_sq, const OfdmConfig& cfg, const DmrsPattern& pat) {
    return nmse_psd_terms(s_true, s_hat, sigma_sq, sigma_hat_sq, cfg, pat).total();
}

SupportRatio support_1d_vs_2d(const SensingEstimate& est, const ToleranceRecord& tol) {
    SupportRatio r;
    r.area_1d = tol.delay_set.total_length() * tol.doppler_set.total_length();
    r.area_2d = support_full_2d(est, tol, 1.0).total_area;
    r.ratio = r.area_1d / r.area_2d;
    return r;
}

double mse_matrix_full(const CMat& w, const CMat& r_grid, const CMat& r_cross,
                       const CMat& r_pilot, double sigma_sq) {
    require(w.rows() == r_grid.rows() && w.cols() == r_pilot.rows() &&
                r_cross.rows() == r_grid.rows() && r_cross.cols() == r_pilot.rows(),
            "mse_matrix_full: dimension mismatch");
    const Eigen::Index np = r_pilot.rows();
    const CMat obs = r_pilot + sigma_sq * CMat::Identity(np, np);
    const CMat m = r_grid - r_cross * w.adjoint() - w * r_cross.adjoint() + w * obs * w.adjoint();
    return m.trace().real() / static_cast<double>(r_grid.rows());
}

ComplexityBreakdown complexity_model(int n, int m, int n_p, int m_p, int n_per, int m_per,
                                     double k_inversion) {
    require(n >= 1 && m >= 1 && n_p >= 1 && m_p >= 1 && n_per >= 1 && m_per >= 1,
            "complexity_model: dimensions must be positive");
    require(k_inversion >= 0.0, "inversion constant must be non-negative");
    const auto N = static_cast<uint64_t>(n), M = static_cast<uint64_t>(m);
    const auto Np = static_cast<uint64_t>(n_p), Mp = static_cast<uint64_t>(m_p);
    const uint64_t NpMp = Np * Mp;
    auto kc = [&](uint64_t cube) {
        return static_cast<uint64_t>(std::llround(k_inversion * static_cast<double>(cube)));
    };

    ComplexityBreakdown c;
    c.full2d_build = kc(NpMp * NpMp * NpMp) + N * M * NpMp * NpMp;
    c.full2d_apply = N * M * NpMp;
    c.full2d_total = c.full2d_build + c.full2d_apply;

    c.separable_paper_total = Mp * (kc(Np * Np * Np) + N * Np * Np + N * Np) +
                              N * (kc(Mp * Mp * Mp) + M * Mp * Mp + M * Mp);
    c.separable_build = kc(Np * Np * Np) + N * Np * Np + kc(Mp * Mp * Mp) + M * Mp * Mp;
    c.separable_apply = N * Np * Mp + N * M * Mp;
    c.separable_total = c.separable_build + c.separable_apply;

    c.sensing_window = NpMp;
    const double per = static_cast<double>(n_per) * m_per;
    c.sensing_fft = static_cast<uint64_t>(std::llround(per * std::log2(per)));
    return c;
}

}  // namespace isacsim
