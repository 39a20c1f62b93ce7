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

#include <optional>
#include <string>

#include "isacsim/estimators.hpp"

namespace isacsim {

enum class EstimatorKind {
    ProposedSeparable,
    ProposedFull2d,
    LsSpline,
    RobustLmmse,
    Parametric,
    PerfectCfr,
};

std::string estimator_name(EstimatorKind kind);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::ProposedSeparable;
    std::optional<double> delay_max;      // robust: defaults to the largest true delay
    std::optional<double> doppler_max;    // robust: defaults to the largest |Doppler|
    std::optional<double> sigma_hat_sq;   // overrides the scenario default
    bool perfect_gain = false;            // proposed: weight paths by true mean powers
};

/// Sensing error injected onto the true parameters (bypasses the periodogram).
struct InjectedError {
    double delay_bins = 0.0;
    double doppler_bins = 0.0;
};

/// Fixed tolerance factors in FFT-bin units instead of the resolution default.
struct ToleranceOverride {
    double delay_bins = 0.0;
    double doppler_bins = 0.0;
};

struct Scenario {
    std::string id = "scenario";
    OfdmConfig ofdm;
    int dmrs_sc_interval = 8;
    int dmrs_sym_interval = 8;
    SensingConfig sensing;
    std::vector<double> powers_db;  // relative path powers
    std::vector<double> delays;     // s
    std::vector<double> dopplers;   // Hz
    std::vector<EstimatorSpec> estimators;
    std::vector<double> snr_grid_db;
    int trials = 1;
    uint64_t seed = 1;
    int slots = 2;             // estimation slots per trial
    int modulation_order = 0;  // 0 disables BER accounting
    std::optional<InjectedError> injected_error;
    std::optional<ToleranceOverride> tolerance_override;
    double sigma_hat_sq = kDefaultSigmaHatSq;

    DmrsPattern pattern() const;
    /// Sensing config with auto (zero) exclusion radii replaced by the
    /// resolution-sized default.
    SensingConfig resolved_sensing() const;
    std::vector<double> powers_linear() const;
    void validate() const;
};

/// Strict parser: unknown keys anywhere in the document are rejected.
Scenario scenario_from_json_text(const std::string& text);
Scenario scenario_from_file(const std::string& path);
std::string scenario_to_json_text(const Scenario& scn);

std::vector<std::string> preset_names();
Scenario preset_scenario(const std::string& name);

/// "small" shrinks the grid to N=256 and both FFT sizes to 256; "full"
/// restores the published scale (N=1584, 1024-point FFTs).
void apply_scale(Scenario& scn, const std::string& scale);

}  // namespace isacsim
