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

#include <functional>
#include <memory>
#include <optional>

#include "isacsim/correlation.hpp"

namespace isacsim {

/// Regularizer matching an operating SNR of 1e5 with unit-modulus DMRS.
inline constexpr double kDefaultSigmaHatSq = 1e-5;

struct LmmseCoefficients {
    CorrMode mode = CorrMode::Separable;
    int grid_rows = 0;  // N
    int grid_cols = 0;  // M
    CMat w_freq;  // N x N_p
    CMat w_time;  // M x M_p
    CMat w_full;  // NM x N_p*M_p, Full2d only
    double sigma_hat_sq = kDefaultSigmaHatSq;
    ToleranceRecord provenance;       // tolerance snapshot the matrices came from
    uint64_t build_mult_count = 0;    // modeled complex multiplications to build
};

/// Wiener coefficients from a constructed correlation set. Pilot Gram
/// matrices are ridge-regularized and solved, never inverted explicitly;
/// reciprocal condition below 1e-12 raises a diagnostic.
LmmseCoefficients lmmse_coeffs(const CorrSet& corr, double sigma_hat_sq,
                               ToleranceRecord provenance = {});

/// Frequency filtering per pilot symbol, then time filtering per subcarrier.
CMat estimate_separable(const CMat& h_ls_p, const LmmseCoefficients& coeffs,
                        uint64_t* mult_tally = nullptr);

/// One joint filter on the column-major vectorized pilot LS estimate.
CMat estimate_full_2d(const CMat& h_ls_p, const LmmseCoefficients& coeffs,
                      uint64_t* mult_tally = nullptr);

/// LS at pilots + natural cubic spline interpolation/extrapolation, first
/// along frequency within each pilot symbol, then along time per subcarrier.
CMat estimate_ls_spline(const ResourceGrid& y, const ResourceGrid& x, const OfdmConfig& cfg,
                        const DmrsPattern& pat);

/// Robust LMMSE: uniform priors over [0, delay_max] x [-doppler_max, doppler_max].
CMat estimate_robust(const ResourceGrid& y, const ResourceGrid& x, const OfdmConfig& cfg,
                     const DmrsPattern& pat, double delay_max, double doppler_max,
                     double sigma_hat_sq);

/// Fourier-dictionary gain fit on the sensed (delay, Doppler) pairs with
/// C_alpha = I/L, then CFR reconstruction over the whole grid.
CMat estimate_parametric(const CMat& h_ls_p, const OfdmConfig& cfg, const DmrsPattern& pat,
                         const SensingEstimate& est, double sigma_hat_sq);

struct SlotResult {
    CMat h_hat;
    bool coefficients_updated = false;
    uint64_t mult_count = 0;
};

using CoeffBuilder = std::function<std::shared_ptr<const LmmseCoefficients>(
    const SensingEstimate&, const ToleranceRecord&)>;

/// Per-slot flow of the proposed estimator: update check against the recorded
/// interval sets, coefficient rebuild only when triggered, then filtering.
/// The tally counts apply multiplications plus modeled build cost on updates.
class SlotPipeline {
  public:
    SlotPipeline(OfdmConfig cfg, DmrsPattern pat, SensingConfig cfgS, CorrMode mode,
                 double sigma_hat_sq);

    /// Fixed tolerance factors (absolute units) instead of the resolution default.
    void set_tolerance_override(double c_freq, double c_time);
    /// Replaces the direct coefficient construction (e.g. with a shared cache).
    void set_builder(CoeffBuilder builder);

    SlotResult process(const CMat& h_ls_slot, const SensingEstimate& est);

    bool has_coefficients() const { return ready_; }
    const ToleranceRecord& record() const { return record_; }
    const LmmseCoefficients& coefficients() const { return *coeffs_; }

  private:
    OfdmConfig cfg_;
    DmrsPattern pat_;
    SensingConfig cfgS_;
    CorrMode mode_;
    double sigma_hat_sq_;
    std::optional<std::pair<double, double>> tol_override_;
    CoeffBuilder builder_;
    ToleranceRecord record_;
    std::shared_ptr<const LmmseCoefficients> coeffs_;
    bool ready_ = false;
};

}  // namespace isacsim
