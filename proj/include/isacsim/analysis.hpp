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

#pragma once

#include "isacsim/correlation.hpp"

namespace isacsim {

/// Spectral view of a constructed/true pilot correlation pair. Both matrices
/// are Hermitian PSD, so the singular values are the eigenvalues; tiny
/// negative eigenvalues are clamped to zero.
struct SpectralDecomp {
    Eigen::VectorXd singular_values_est;   // gamma_i, descending
    Eigen::VectorXd singular_values_true;  // mu_i, descending
    Eigen::VectorXd wiener_gains;          // lambda_i = gamma_i/(gamma_i + sigma_hat^2)
    Eigen::VectorXd b;                     // diag(V^H R V), eigenbasis of the estimate
};

SpectralDecomp spectral_decomp(const CMat& r_hat_pp, const CMat& r_true_pp, double sigma_hat_sq);

/// Pilot-grid NMSE of the Wiener filter built from r_hat_pp when the channel
/// follows r_true_pp: (1/n) sum_i [(1-lambda_i)^2 b_i + sigma^2 lambda_i^2].
double nmse_theorem1(const CMat& r_hat_pp, const CMat& r_true_pp, double sigma_hat_sq,
                     double sigma_sq);

/// Same expression with mu_i in place of b_i (the exactly-constructed case);
/// the best pilot NMSE an LMMSE estimator can reach.
double nmse_lower_bound(const CMat& r_true_pp, double sigma_hat_sq, double sigma_sq);

struct ProjectionEnergy {
    Eigen::VectorXd b;        // b_i = sum_j mu_j |v_i^H u_j|^2
    Eigen::MatrixXd overlap;  // |v_i^H u_j|^2
};
ProjectionEnergy projection_energy(const CMat& r_hat_pp, const CMat& r_true_pp);

/// Axis-aligned rectangle in the (delay, Doppler) plane.
struct Rect {
    double delay_lo = 0.0, delay_hi = 0.0;
    double doppler_lo = 0.0, doppler_hi = 0.0;
    double area() const { return (delay_hi - delay_lo) * (doppler_hi - doppler_lo); }
};

/// Uniform joint delay-Doppler PSD over a union of rectangles, height 1/|D|.
struct PsdSupport {
    std::vector<Rect> cells;  // pairwise disjoint after normalization
    double total_area = 0.0;
    double height = 0.0;         // 1/total_area
    double pilot_density = 1.0;  // rho = dsc * dsym
};

/// Normalizes arbitrary (possibly overlapping) rectangles into a disjoint
/// decomposition with the uniform height.
PsdSupport make_support(const std::vector<Rect>& rects, double pilot_density);

/// Product support (delay union) x (Doppler union): the effective prior of the
/// two-1D-filter implementation.
PsdSupport support_separable(const SensingEstimate& est, const ToleranceRecord& tol,
                             double pilot_density);
/// Union of per-path tolerance rectangles: the prior of the joint 2D filter.
PsdSupport support_full_2d(const SensingEstimate& est, const ToleranceRecord& tol,
                           double pilot_density);

struct PsdNmse {
    double mismatch_term = 0.0;  // vanishes for matched PSDs and noise
    double baseline_term = 0.0;  // fundamental estimator error
    double total() const { return mismatch_term + baseline_term; }
};

/// Support-based NMSE over all resource elements. Both PSDs are piecewise
/// constant, so the integral is exact rectangle arithmetic. Requires the
/// alias-free conditions; violations raise std::domain_error.
PsdNmse nmse_psd_terms(const PsdSupport& s_true, const PsdSupport& s_hat, double sigma_sq,
                       double sigma_hat_sq, const OfdmConfig& cfg, const DmrsPattern& pat);
double nmse_psd(const PsdSupport& s_true, const PsdSupport& s_hat, double sigma_sq,
                double sigma_hat_sq, const OfdmConfig& cfg, const DmrsPattern& pat);

struct SupportRatio {
    double area_1d = 0.0;
    double area_2d = 0.0;
    double ratio = 0.0;  // equals the path count for equal disjoint tolerances
};
SupportRatio support_1d_vs_2d(const SensingEstimate& est, const ToleranceRecord& tol);

/// trace(R_hh - R_cross W^H - W R_cross^H + W (R_pilot + sigma^2 I) W^H) / NM.
double mse_matrix_full(const CMat& w, const CMat& r_grid, const CMat& r_cross,
                       const CMat& r_pilot, double sigma_sq);

/// Complex-multiplication accounting. The *_paper totals follow the published
/// prefactored form (coefficient construction counted once per filtered
/// column/row); the build/apply split counts each coefficient set once, which
/// is what the instrumented estimators tally.
struct ComplexityBreakdown {
    uint64_t full2d_build = 0;   // k (NpMp)^3 + NM (NpMp)^2
    uint64_t full2d_apply = 0;   // NM NpMp
    uint64_t full2d_total = 0;
    uint64_t separable_paper_total = 0;  // Mp(kNp^3+NNp^2+NNp) + N(kMp^3+MMp^2+MMp)
    uint64_t separable_build = 0;        // kNp^3 + NNp^2 + kMp^3 + MMp^2
    uint64_t separable_apply = 0;        // NNpMp + NMMp
    uint64_t separable_total = 0;
    uint64_t sensing_window = 0;  // NpMp element-wise window products
    uint64_t sensing_fft = 0;     // NPer MPer log2(NPer MPer), order term
};
ComplexityBreakdown complexity_model(int n, int m, int n_p, int m_p, int n_per, int m_per,
                                     double k_inversion = 1.0);

}  // namespace isacsim
