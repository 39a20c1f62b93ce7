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

#include "isacsim/grid.hpp"
#include "isacsim/sensing.hpp"

namespace isacsim {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Sorted union of closed intervals, overlaps merged.
class IntervalSet {
  public:
    IntervalSet() = default;
    static IntervalSet unite(std::vector<Interval> intervals);

    bool contains(double x) const;  // closed-interval membership
    double total_length() const;
    const std::vector<Interval>& intervals() const { return merged_; }

  private:
    std::vector<Interval> merged_;
};

/// Per-path tolerance factors plus the union interval sets they span around a
/// sensing estimate. The record is frozen until an update check triggers.
struct ToleranceRecord {
    std::vector<double> c_freq;  // C_F,l in seconds
    std::vector<double> c_time;  // C_T,l in Hz
    IntervalSet delay_set;       // union of [tau_l - C_F,l/2, tau_l + C_F,l/2]
    IntervalSet doppler_set;
    int num_paths = 0;
};

ToleranceRecord make_tolerance(const SensingEstimate& est, std::vector<double> c_freq,
                               std::vector<double> c_time);
/// All tolerance factors set to the sensing resolutions.
ToleranceRecord default_tolerance(const SensingEstimate& est, const Resolutions& res);
/// One common tolerance pair for every path.
ToleranceRecord uniform_tolerance(const SensingEstimate& est, double c_freq, double c_time);

/// True when coefficients must be recomputed: the path count changed, or any
/// new delay/Doppler fell outside the recorded interval sets.
bool update_check(const ToleranceRecord& record, const SensingEstimate& latest);

enum class CorrMode { Separable, Full2d };

struct CorrSet {
    CorrMode mode = CorrMode::Separable;
    int grid_rows = 0;  // N
    int grid_cols = 0;  // M
    CMat freq_cross;    // N x N_p
    CMat freq_pilot;    // N_p x N_p
    CMat time_cross;    // M x M_p
    CMat time_pilot;    // M_p x M_p
    CMat full_cross;    // NM x N_p*M_p, Full2d only
    CMat full_pilot;    // N_p*M_p x N_p*M_p, Full2d only
};

inline constexpr size_t kFull2dMaxEntries = size_t{1} << 26;  // ~1 GiB of complex doubles

/// Normalized lag correlations of the constructed prior. Empty weights select
/// the constant multi-path intensity profile (every path weighted 1/L); a
/// weight vector (normalized internally) feeds the perfect-gain variant.
cxd corr_freq(int lag, const OfdmConfig& cfg, const SensingEstimate& est,
              const ToleranceRecord& tol, const std::vector<double>& weights = {});
cxd corr_time(int lag, const OfdmConfig& cfg, const SensingEstimate& est,
              const ToleranceRecord& tol, const std::vector<double>& weights = {});
/// Joint (delay x Doppler) correlation; factors into corr_freq*corr_time only
/// for a single path.
cxd corr_2d(int lag_freq, int lag_time, const OfdmConfig& cfg, const SensingEstimate& est,
            const ToleranceRecord& tol, const std::vector<double>& weights = {});

CorrSet build_separable(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingEstimate& est,
                        const ToleranceRecord& tol, const std::vector<double>& weights = {});
CorrSet build_full_2d(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingEstimate& est,
                      const ToleranceRecord& tol, const std::vector<double>& weights = {},
                      size_t max_entries = kFull2dMaxEntries);

/// Joint pilot correlation matrix (N_p*M_p square) of the constructed prior,
/// without the large grid-to-pilot cross matrix.
CMat constructed_pilot_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                                   const SensingEstimate& est, const ToleranceRecord& tol,
                                   const std::vector<double>& weights = {});

/// Delay uniform on [0, delay_max], Doppler uniform on [-doppler_max, +doppler_max]:
/// r_F(k) = e^{-j pi k df tmax} sinc(k df tmax), r_T(k) = sinc(2 k To fmax).
CorrSet robust_correlations(double delay_max, double doppler_max, const OfdmConfig& cfg,
                            const DmrsPattern& pat);

/// Exact second-order statistics of point-mass paths at the given delays and
/// Dopplers with mean powers `powers` (normalized internally to unit total).
CMat exact_pilot_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                             const std::vector<double>& delays,
                             const std::vector<double>& dopplers,
                             const std::vector<double>& powers);

struct FullCorr {
    CMat r_grid;   // NM x NM
    CMat r_cross;  // NM x N_p*M_p
    CMat r_pilot;  // N_p*M_p x N_p*M_p
};
FullCorr exact_full_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                                const std::vector<double>& delays,
                                const std::vector<double>& dopplers,
                                const std::vector<double>& powers,
                                size_t max_entries = kFull2dMaxEntries);

}  // namespace isacsim
