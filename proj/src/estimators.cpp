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

#include "isacsim/estimators.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isacsim {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kMinRcond = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

uint64_t u64(Eigen::Index v) { return static_cast<uint64_t>(v); }

// W = R_cross (R_pilot + sigma^2 I)^{-1} via an LDLT solve of the Hermitian
// regularized Gram matrix.
CMat wiener_solve(const CMat& cross, const CMat& pilot, double sigma_hat_sq) {
    const Eigen::Index np = pilot.rows();
    CMat gram = pilot + sigma_hat_sq * CMat::Identity(np, np);
    Eigen::LDLT<CMat> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("LMMSE solve failed: LDLT factorization did not converge");
    const double rc = ldlt.rcond();
    if (rc < kMinRcond)
        throw std::runtime_error("LMMSE solve ill-conditioned: rcond = " + std::to_string(rc) +
                                 " for a " + std::to_string(np) + "x" + std::to_string(np) +
                                 " pilot Gram matrix (sigma_hat_sq = " +
                                 std::to_string(sigma_hat_sq) + ")");
    return ldlt.solve(cross.adjoint()).adjoint();
}

// Natural cubic spline (zero second derivative at both ends). Outside the
// knot range the end segments extend as cubics.
class NaturalSpline {
  public:
    NaturalSpline(const std::vector<double>& xs, const std::vector<double>& ys)
        : xs_(xs), ys_(ys) {
        const size_t n = xs.size();
        z_.assign(n, 0.0);
        if (n < 3) return;
        std::vector<double> h(n - 1), diag(n), rhs(n);
        for (size_t i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];
        for (size_t i = 1; i + 1 < n; ++i) {
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        // Thomas solve of the interior tridiagonal system
        std::vector<double> c(n, 0.0), d(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            const double lower = (i > 1) ? h[i - 1] : 0.0;
            const double denom = diag[i] - lower * c[i - 1];
            c[i] = h[i] / denom;
            d[i] = (rhs[i] - lower * d[i - 1]) / denom;
        }
        for (size_t i = n - 2; i > 0; --i) z_[i] = d[i] - c[i] * z_[i + 1];
    }

    double eval(double x) const {
        const size_t n = xs_.size();
        if (n == 1) return ys_[0];
        size_t i = 0;
        if (x >= xs_[n - 2])
            i = n - 2;  // covers extrapolation past the right end
        else
            while (i + 2 < n && x >= xs_[i + 1]) ++i;
        const double h = xs_[i + 1] - xs_[i];
        const double a = (xs_[i + 1] - x) / h;
        const double b = (x - xs_[i]) / h;
        return a * ys_[i] + b * ys_[i + 1] +
               ((a * a * a - a) * z_[i] + (b * b * b - b) * z_[i + 1]) * h * h / 6.0;
    }

  private:
    std::vector<double> xs_, ys_;
    std::vector<double> z_;  // second derivatives at the knots
};

// spline along one axis for real and imaginary parts separately
CVec spline_axis(const std::vector<double>& xs, const CVec& values, int out_len) {
    std::vector<double> re(values.size()), im(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        re[i] = values(i).real();
        im[i] = values(i).imag();
    }
    CVec out(out_len);
    if (xs.size() == 1) {
        out.setConstant(values(0));  // single pilot: nearest is the constant
        return out;
    }
    const NaturalSpline sr(xs, re), si(xs, im);
    for (int i = 0; i < out_len; ++i) out(i) = cxd(sr.eval(i), si.eval(i));
    return out;
}

}  // namespace

LmmseCoefficients lmmse_coeffs(const CorrSet& corr, double sigma_hat_sq,
                               ToleranceRecord provenance) {
    require(sigma_hat_sq > 0.0, "sigma_hat_sq must be positive");
    require(corr.grid_rows > 0 && corr.grid_cols > 0, "correlation set lacks grid dimensions");
    LmmseCoefficients c;
    c.mode = corr.mode;
    c.grid_rows = corr.grid_rows;
    c.grid_cols = corr.grid_cols;
    c.sigma_hat_sq = sigma_hat_sq;
    c.provenance = std::move(provenance);
    if (corr.mode == CorrMode::Separable) {
        c.w_freq = wiener_solve(corr.freq_cross, corr.freq_pilot, sigma_hat_sq);
        c.w_time = wiener_solve(corr.time_cross, corr.time_pilot, sigma_hat_sq);
        const uint64_t n = u64(c.w_freq.rows()), np = u64(c.w_freq.cols());
        const uint64_t m = u64(c.w_time.rows()), mp = u64(c.w_time.cols());
        c.build_mult_count = np * np * np + n * np * np + mp * mp * mp + m * mp * mp;
    } else {
        c.w_full = wiener_solve(corr.full_cross, corr.full_pilot, sigma_hat_sq);
        const uint64_t nm = u64(c.w_full.rows()), npmp = u64(c.w_full.cols());
        c.build_mult_count = npmp * npmp * npmp + nm * npmp * npmp;
    }
    return c;
}

CMat estimate_separable(const CMat& h_ls_p, const LmmseCoefficients& coeffs,
                        uint64_t* mult_tally) {
    require(coeffs.mode == CorrMode::Separable, "coefficients are not separable");
    require(coeffs.w_freq.cols() == h_ls_p.rows() && coeffs.w_time.cols() == h_ls_p.cols(),
            "pilot LS dimensions do not match the coefficients");
    const CMat tmp = coeffs.w_freq * h_ls_p;     // N x M_p
    CMat out = tmp * coeffs.w_time.transpose();  // N x M
    if (mult_tally) {
        *mult_tally += u64(coeffs.w_freq.rows()) * u64(coeffs.w_freq.cols()) * u64(h_ls_p.cols());
        *mult_tally += u64(tmp.rows()) * u64(coeffs.w_time.cols()) * u64(coeffs.w_time.rows());
    }
    return out;
}

CMat estimate_full_2d(const CMat& h_ls_p, const LmmseCoefficients& coeffs, uint64_t* mult_tally) {
    require(coeffs.mode == CorrMode::Full2d, "coefficients are not full-2D");
    require(coeffs.w_full.cols() == h_ls_p.size(),
            "pilot LS dimensions do not match the coefficients");
    require(coeffs.w_full.rows() ==
                static_cast<Eigen::Index>(coeffs.grid_rows) * coeffs.grid_cols,
            "coefficient rows do not match the grid dimensions");
    const Eigen::Map<const CVec> vec(h_ls_p.data(), h_ls_p.size());
    const CVec out = coeffs.w_full * vec;
    if (mult_tally) *mult_tally += u64(coeffs.w_full.rows()) * u64(coeffs.w_full.cols());
    return Eigen::Map<const CMat>(out.data(), coeffs.grid_rows, coeffs.grid_cols);
}

CMat estimate_ls_spline(const ResourceGrid& y, const ResourceGrid& x, const OfdmConfig& cfg,
                        const DmrsPattern& pat) {
    const CMat h_ls = ls_pilots(y, x, pat);

    std::vector<double> xs_f(pat.pilot_subcarriers.begin(), pat.pilot_subcarriers.end());
    std::vector<double> xs_t(pat.pilot_symbols.begin(), pat.pilot_symbols.end());

    CMat tmp(cfg.num_subcarriers, pat.n_pilot_sym);
    for (int m = 0; m < pat.n_pilot_sym; ++m)
        tmp.col(m) = spline_axis(xs_f, h_ls.col(m), cfg.num_subcarriers);

    CMat out(cfg.num_subcarriers, cfg.num_symbols);
    for (int n = 0; n < cfg.num_subcarriers; ++n)
        out.row(n) = spline_axis(xs_t, tmp.row(n).transpose(), cfg.num_symbols).transpose();
    return out;
}

CMat estimate_robust(const ResourceGrid& y, const ResourceGrid& x, const OfdmConfig& cfg,
                     const DmrsPattern& pat, double delay_max, double doppler_max,
                     double sigma_hat_sq) {
    const CorrSet corr = robust_correlations(delay_max, doppler_max, cfg, pat);
    const LmmseCoefficients coeffs = lmmse_coeffs(corr, sigma_hat_sq);
    return estimate_separable(ls_pilots(y, x, pat), coeffs);
}

CMat estimate_parametric(const CMat& h_ls_p, const OfdmConfig& cfg, const DmrsPattern& pat,
                         const SensingEstimate& est, double sigma_hat_sq) {
    require(h_ls_p.rows() == pat.n_pilot_sc && h_ls_p.cols() == pat.n_pilot_sym,
            "pilot LS dimensions do not match the pattern");
    const int count = est.num_paths();
    if (count == 0) {
        std::cerr << "estimate_parametric: no sensed paths, returning a zero grid\n";
        return CMat::Zero(cfg.num_subcarriers, cfg.num_symbols);
    }

    const double df = cfg.subcarrier_spacing;
    const double to = cfg.symbol_duration;
    const Eigen::Index rows = static_cast<Eigen::Index>(pat.n_pilot_sc) * pat.n_pilot_sym;
    CMat dict(rows, count);
    for (int l = 0; l < count; ++l) {
        for (int m = 0; m < pat.n_pilot_sym; ++m) {
            const double q1 = pat.pilot_symbols[m] + 1;
            for (int n = 0; n < pat.n_pilot_sc; ++n) {
                const double p1 = pat.pilot_subcarriers[n] + 1;
                dict(static_cast<Eigen::Index>(m) * pat.n_pilot_sc + n, l) = std::polar(
                    1.0, -kTwoPi * p1 * df * est.delays[l] + kTwoPi * q1 * to * est.dopplers[l]);
            }
        }
    }

    // gains: (F^H F + sigma^2 L I)^{-1} F^H h_ls  (C_alpha = I/L)
    const Eigen::Map<const CVec> ls_vec(h_ls_p.data(), h_ls_p.size());
    CMat gram = dict.adjoint() * dict +
                sigma_hat_sq * static_cast<double>(count) * CMat::Identity(count, count);
    Eigen::LDLT<CMat> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("parametric gain fit failed: LDLT did not converge");
    const CVec gains = ldlt.solve(dict.adjoint() * ls_vec);

    CMat out = CMat::Zero(cfg.num_subcarriers, cfg.num_symbols);
    for (int l = 0; l < count; ++l) {
        CVec f(cfg.num_subcarriers), t(cfg.num_symbols);
        for (int n = 0; n < cfg.num_subcarriers; ++n)
            f(n) = std::polar(1.0, -kTwoPi * (n + 1) * df * est.delays[l]);
        for (int m = 0; m < cfg.num_symbols; ++m)
            t(m) = std::polar(1.0, kTwoPi * (m + 1) * to * est.dopplers[l]);
        out.noalias() += gains(l) * f * t.transpose();
    }
    return out;
}

SlotPipeline::SlotPipeline(OfdmConfig cfg, DmrsPattern pat, SensingConfig cfgS, CorrMode mode,
                           double sigma_hat_sq)
    : cfg_(std::move(cfg)),
      pat_(std::move(pat)),
      cfgS_(cfgS),
      mode_(mode),
      sigma_hat_sq_(sigma_hat_sq) {
    builder_ = [this](const SensingEstimate& est, const ToleranceRecord& tol) {
        const CorrSet corr = (mode_ == CorrMode::Separable)
                                 ? build_separable(cfg_, pat_, est, tol)
                                 : build_full_2d(cfg_, pat_, est, tol);
        return std::make_shared<const LmmseCoefficients>(lmmse_coeffs(corr, sigma_hat_sq_, tol));
    };
}

void SlotPipeline::set_tolerance_override(double c_freq, double c_time) {
    require(c_freq > 0.0 && c_time > 0.0, "tolerance override must be positive");
    tol_override_ = {c_freq, c_time};
}

void SlotPipeline::set_builder(CoeffBuilder builder) { builder_ = std::move(builder); }

SlotResult SlotPipeline::process(const CMat& h_ls_slot, const SensingEstimate& est) {
    SlotResult result;
    if (!ready_ || update_check(record_, est)) {
        ToleranceRecord tol;
        if (tol_override_)
            tol = uniform_tolerance(est, tol_override_->first, tol_override_->second);
        else
            tol = default_tolerance(est, resolutions(cfg_, cfgS_));
        coeffs_ = builder_(est, tol);
        record_ = tol;
        ready_ = true;
        result.coefficients_updated = true;
        result.mult_count += coeffs_->build_mult_count;
    }
    result.h_hat = (mode_ == CorrMode::Separable)
                       ? estimate_separable(h_ls_slot, *coeffs_, &result.mult_count)
                       : estimate_full_2d(h_ls_slot, *coeffs_, &result.mult_count);
    return result;
}

}  // namespace isacsim
