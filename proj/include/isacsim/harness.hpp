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

#include <iosfwd>
#include <mutex>
#include <unordered_map>

#include "isacsim/analysis.hpp"
#include "isacsim/scenario.hpp"

namespace isacsim {

struct ResultRow {
    std::string scenario_id;
    std::string estimator;
    double snr_db = 0.0;
    double nmse = 0.0;
    std::optional<double> nmse_predicted;  // support-based model prediction
    std::optional<double> ber;
    uint64_t mult_count = 0;
    uint64_t updates_triggered = 0;
    int trials = 0;  // successful trials folded into the row
    int failed_trials = 0;
    double wall_time_s = 0.0;  // excluded from the determinism contract
};

/// Sufficient statistics of one estimator in one trial; sums are associative
/// so trials can run in any order.
struct EstimatorTrialStats {
    double err_energy = 0.0;  // sum over slots of |H - H_hat|_F^2
    double ref_energy = 0.0;  // sum over slots of |H|_F^2
    double bit_errors = 0.0;  // erasures count half a bit each
    uint64_t bits = 0;
    uint64_t mult_count = 0;
    uint64_t updates = 0;
    bool failed = false;
};

/// Thread-safe memo of coefficient sets keyed by their exact build inputs.
/// Purely an evaluation shortcut: a hit returns bit-identical coefficients.
class CoeffCache {
  public:
    std::shared_ptr<const LmmseCoefficients> get_or_build(
        const std::string& key,
        const std::function<std::shared_ptr<const LmmseCoefficients>()>& build);

  private:
    std::mutex mu_;
    std::unordered_map<std::string, std::shared_ptr<const LmmseCoefficients>> map_;
};

/// One deterministic Monte-Carlo trial: draw gains, synthesize the slots,
/// sense (or inject the configured error), run every estimator.
std::vector<EstimatorTrialStats> run_trial(const Scenario& scn, double snr_db, int trial_index,
                                           CoeffCache* cache = nullptr);

/// Cartesian product of the SNR grid and the estimator list, trials averaged.
/// num_threads 0 picks ISACSIM_THREADS or the hardware concurrency.
std::vector<ResultRow> sweep(const Scenario& scn, int num_threads = 0);

std::string results_csv_header();
void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);

/// RD map of one trial's sensing input at the given SNR.
RdMap compute_rdmap(const Scenario& scn, double snr_db, int trial_index);
void write_rdmap_csv(const RdMap& map, std::ostream& out);

struct AnalysisRow {
    std::string scenario_id;
    double snr_db = 0.0;
    double sigma_sq = 0.0;
    double sigma_hat_sq = 0.0;
    double nmse_pilot = 0.0;     // closed form for the constructed pilot matrix
    double nmse_pilot_lb = 0.0;  // exactly-constructed bound
    std::optional<double> psd_nmse_1d;
    std::optional<double> psd_nmse_2d;
    double area_1d = 0.0;
    double area_2d = 0.0;
    double support_ratio = 0.0;
};

/// Closed-form predictions for the scenario (no Monte-Carlo).
std::vector<AnalysisRow> analyze(const Scenario& scn);
void write_analysis_csv(const std::vector<AnalysisRow>& rows, std::ostream& out);

/// Sensing estimate feeding predictions: the injected one when configured,
/// otherwise a noiseless sensing pass over the nominal channel.
SensingEstimate reference_estimate(const Scenario& scn);
ToleranceRecord reference_tolerance(const Scenario& scn, const SensingEstimate& est);

int default_thread_count();

}  // namespace isacsim
