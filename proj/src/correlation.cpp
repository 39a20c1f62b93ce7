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

#include "isacsim/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace isacsim {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(M_PI * x) / (M_PI * x);
}

// One mixture component of the constructed prior: delay/Doppler uniform on
// tolerance-factor intervals around the sensed values (width 0 = point mass).
struct PriorPath {
    double delay, doppler;
    double c_freq, c_time;
    double weight;
};

std::vector<PriorPath> prior_paths(const SensingEstimate& est, const ToleranceRecord& tol,
                                   const std::vector<double>& weights) {
    const size_t count = est.delays.size();
    require(count >= 1, "sensing estimate holds no paths");
    require(tol.c_freq.size() == count && tol.c_time.size() == count,
            "tolerance record not aligned with the sensing estimate");
    std::vector<double> w(count, 1.0);
    if (!weights.empty()) {
        require(weights.size() == count, "weight vector not aligned with the sensing estimate");
        w = weights;
    }
    double total = 0.0;
    for (double v : w) {
        require(v >= 0.0, "path weights must be non-negative");
        total += v;
    }
    require(total > 0.0, "path weights sum to zero");

    std::vector<PriorPath> out(count);
    for (size_t l = 0; l < count; ++l)
        out[l] = {est.delays[l], est.dopplers[l], tol.c_freq[l], tol.c_time[l], w[l] / total};
    return out;
}

cxd freq_component(const PriorPath& p, int lag, double df) {
    return sinc(lag * df * p.c_freq) * std::polar(1.0, -kTwoPi * lag * df * p.delay);
}

cxd time_component(const PriorPath& p, int lag, double to) {
    return sinc(lag * to * p.c_time) * std::polar(1.0, kTwoPi * lag * to * p.doppler);
}

// Lag table r(k), k in [-max_lag, max_lag], index k + max_lag.
CVec lag_table(const std::function<cxd(int)>& r, int max_lag) {
    CVec t(2 * max_lag + 1);
    for (int k = -max_lag; k <= max_lag; ++k) t(k + max_lag) = r(k);
    return t;
}

CorrSet separable_from_lags(const OfdmConfig& cfg, const DmrsPattern& pat,
                            const std::function<cxd(int)>& rf,
                            const std::function<cxd(int)>& rt) {
    const int n = cfg.num_subcarriers;
    const int m = cfg.num_symbols;
    const CVec f = lag_table(rf, n - 1);
    const CVec t = lag_table(rt, m - 1);

    CorrSet set;
    set.mode = CorrMode::Separable;
    set.grid_rows = n;
    set.grid_cols = m;
    set.freq_cross.resize(n, pat.n_pilot_sc);
    for (int row = 0; row < n; ++row)
        for (int j = 0; j < pat.n_pilot_sc; ++j)
            set.freq_cross(row, j) = f(row - pat.pilot_subcarriers[j] + n - 1);
    set.freq_pilot.resize(pat.n_pilot_sc, pat.n_pilot_sc);
    for (int i = 0; i < pat.n_pilot_sc; ++i)
        for (int j = 0; j < pat.n_pilot_sc; ++j)
            set.freq_pilot(i, j) = f(pat.pilot_subcarriers[i] - pat.pilot_subcarriers[j] + n - 1);
    set.time_cross.resize(m, pat.n_pilot_sym);
    for (int row = 0; row < m; ++row)
        for (int j = 0; j < pat.n_pilot_sym; ++j)
            set.time_cross(row, j) = t(row - pat.pilot_symbols[j] + m - 1);
    set.time_pilot.resize(pat.n_pilot_sym, pat.n_pilot_sym);
    for (int i = 0; i < pat.n_pilot_sym; ++i)
        for (int j = 0; j < pat.n_pilot_sym; ++j)
            set.time_pilot(i, j) = t(pat.pilot_symbols[i] - pat.pilot_symbols[j] + m - 1);
    return set;
}

// 2D lag table R(dn, dm) accumulated per path from its separable components.
CMat joint_lag_table(const OfdmConfig& cfg, const std::vector<PriorPath>& paths, int max_dn,
                     int max_dm) {
    CMat table = CMat::Zero(2 * max_dn + 1, 2 * max_dm + 1);
    for (const PriorPath& p : paths) {
        CVec u(2 * max_dn + 1), v(2 * max_dm + 1);
        for (int dn = -max_dn; dn <= max_dn; ++dn)
            u(dn + max_dn) = freq_component(p, dn, cfg.subcarrier_spacing);
        for (int dm = -max_dm; dm <= max_dm; ++dm)
            v(dm + max_dm) = time_component(p, dm, cfg.symbol_duration);
        table.noalias() += p.weight * u * v.transpose();
    }
    return table;
}

CMat fill_full_cross(const OfdmConfig& cfg, const DmrsPattern& pat, const CMat& table,
                     size_t max_entries) {
    const int n = cfg.num_subcarriers;
    const int m = cfg.num_symbols;
    const int np = pat.n_pilot_sc;
    const int mp = pat.n_pilot_sym;
    const size_t cross_entries = static_cast<size_t>(n) * m * np * mp;
    if (cross_entries > max_entries)
        throw std::length_error("full 2D correlation would need " + std::to_string(cross_entries) +
                                " entries (cap " + std::to_string(max_entries) + ")");

    const int off_n = (table.rows() - 1) / 2;
    const int off_m = (table.cols() - 1) / 2;

    // column-major vectorization on both sides: row = m0*N + n0, col = mp0*N_p + np0
    CMat cross(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(np) * mp);
    for (int mc = 0; mc < mp; ++mc)
        for (int nc = 0; nc < np; ++nc) {
            const Eigen::Index col = static_cast<Eigen::Index>(mc) * np + nc;
            const int pc = pat.pilot_subcarriers[nc];
            const int qc = pat.pilot_symbols[mc];
            for (int mr = 0; mr < m; ++mr)
                for (int nr = 0; nr < n; ++nr)
                    cross(static_cast<Eigen::Index>(mr) * n + nr, col) =
                        table(nr - pc + off_n, mr - qc + off_m);
        }
    return cross;
}

CMat fill_full_pilot(const DmrsPattern& pat, const CMat& table) {
    const int np = pat.n_pilot_sc;
    const int mp = pat.n_pilot_sym;
    const int off_n = (table.rows() - 1) / 2;
    const int off_m = (table.cols() - 1) / 2;

    CMat pilot(static_cast<Eigen::Index>(np) * mp, static_cast<Eigen::Index>(np) * mp);
    for (int mc = 0; mc < mp; ++mc)
        for (int nc = 0; nc < np; ++nc) {
            const Eigen::Index col = static_cast<Eigen::Index>(mc) * np + nc;
            const int pc = pat.pilot_subcarriers[nc];
            const int qc = pat.pilot_symbols[mc];
            for (int mr = 0; mr < mp; ++mr)
                for (int nr = 0; nr < np; ++nr)
                    pilot(static_cast<Eigen::Index>(mr) * np + nr, col) =
                        table(pat.pilot_subcarriers[nr] - pc + off_n,
                              pat.pilot_symbols[mr] - qc + off_m);
        }
    return pilot;
}

}  // namespace

IntervalSet IntervalSet::unite(std::vector<Interval> intervals) {
    for (const Interval& v : intervals)
        require(v.hi >= v.lo, "interval with negative length");
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    IntervalSet set;
    for (const Interval& v : intervals) {
        if (!set.merged_.empty() && v.lo <= set.merged_.back().hi)
            set.merged_.back().hi = std::max(set.merged_.back().hi, v.hi);
        else
            set.merged_.push_back(v);
    }
    return set;
}

bool IntervalSet::contains(double x) const {
    for (const Interval& v : merged_)
        if (x >= v.lo && x <= v.hi) return true;
    return false;
}

double IntervalSet::total_length() const {
    double sum = 0.0;
    for (const Interval& v : merged_) sum += v.length();
    return sum;
}

ToleranceRecord make_tolerance(const SensingEstimate& est, std::vector<double> c_freq,
                               std::vector<double> c_time) {
    const size_t count = est.delays.size();
    require(count >= 1, "sensing estimate holds no paths");
    require(c_freq.size() == count && c_time.size() == count,
            "tolerance vectors not aligned with the sensing estimate");
    for (size_t l = 0; l < count; ++l)
        require(c_freq[l] > 0.0 && c_time[l] > 0.0, "tolerance factors must be positive");

    ToleranceRecord rec;
    rec.c_freq = std::move(c_freq);
    rec.c_time = std::move(c_time);
    rec.num_paths = static_cast<int>(count);
    std::vector<Interval> delay_iv(count), doppler_iv(count);
    for (size_t l = 0; l < count; ++l) {
        delay_iv[l] = {est.delays[l] - 0.5 * rec.c_freq[l], est.delays[l] + 0.5 * rec.c_freq[l]};
        doppler_iv[l] = {est.dopplers[l] - 0.5 * rec.c_time[l],
                         est.dopplers[l] + 0.5 * rec.c_time[l]};
    }
    rec.delay_set = IntervalSet::unite(std::move(delay_iv));
    rec.doppler_set = IntervalSet::unite(std::move(doppler_iv));
    return rec;
}

ToleranceRecord default_tolerance(const SensingEstimate& est, const Resolutions& res) {
    return uniform_tolerance(est, res.delay, res.doppler);
}

ToleranceRecord uniform_tolerance(const SensingEstimate& est, double c_freq, double c_time) {
    const size_t count = est.delays.size();
    return make_tolerance(est, std::vector<double>(count, c_freq),
                          std::vector<double>(count, c_time));
}

bool update_check(const ToleranceRecord& record, const SensingEstimate& latest) {
    if (latest.num_paths() != record.num_paths) return true;
    for (double tau : latest.delays)
        if (!record.delay_set.contains(tau)) return true;
    for (double fd : latest.dopplers)
        if (!record.doppler_set.contains(fd)) return true;
    return false;
}

cxd corr_freq(int lag, const OfdmConfig& cfg, const SensingEstimate& est,
              const ToleranceRecord& tol, const std::vector<double>& weights) {
    cxd sum = 0.0;
    for (const PriorPath& p : prior_paths(est, tol, weights))
        sum += p.weight * freq_component(p, lag, cfg.subcarrier_spacing);
    return sum;
}

cxd corr_time(int lag, const OfdmConfig& cfg, const SensingEstimate& est,
              const ToleranceRecord& tol, const std::vector<double>& weights) {
    cxd sum = 0.0;
    for (const PriorPath& p : prior_paths(est, tol, weights))
        sum += p.weight * time_component(p, lag, cfg.symbol_duration);
    return sum;
}

cxd corr_2d(int lag_freq, int lag_time, const OfdmConfig& cfg, const SensingEstimate& est,
            const ToleranceRecord& tol, const std::vector<double>& weights) {
    cxd sum = 0.0;
    for (const PriorPath& p : prior_paths(est, tol, weights))
        sum += p.weight * freq_component(p, lag_freq, cfg.subcarrier_spacing) *
               time_component(p, lag_time, cfg.symbol_duration);
    return sum;
}

CorrSet build_separable(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingEstimate& est,
                        const ToleranceRecord& tol, const std::vector<double>& weights) {
    const std::vector<PriorPath> paths = prior_paths(est, tol, weights);
    auto rf = [&](int k) {
        cxd s = 0.0;
        for (const PriorPath& p : paths) s += p.weight * freq_component(p, k, cfg.subcarrier_spacing);
        return s;
    };
    auto rt = [&](int k) {
        cxd s = 0.0;
        for (const PriorPath& p : paths) s += p.weight * time_component(p, k, cfg.symbol_duration);
        return s;
    };
    return separable_from_lags(cfg, pat, rf, rt);
}

CorrSet build_full_2d(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingEstimate& est,
                      const ToleranceRecord& tol, const std::vector<double>& weights,
                      size_t max_entries) {
    const std::vector<PriorPath> paths = prior_paths(est, tol, weights);
    CorrSet set = build_separable(cfg, pat, est, tol, weights);
    set.mode = CorrMode::Full2d;
    const CMat table =
        joint_lag_table(cfg, paths, cfg.num_subcarriers - 1, cfg.num_symbols - 1);
    set.full_cross = fill_full_cross(cfg, pat, table, max_entries);
    set.full_pilot = fill_full_pilot(pat, table);
    return set;
}

CMat constructed_pilot_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                                   const SensingEstimate& est, const ToleranceRecord& tol,
                                   const std::vector<double>& weights) {
    const std::vector<PriorPath> paths = prior_paths(est, tol, weights);
    const CMat table = joint_lag_table(cfg, paths, cfg.num_subcarriers - 1, cfg.num_symbols - 1);
    return fill_full_pilot(pat, table);
}

CorrSet robust_correlations(double delay_max, double doppler_max, const OfdmConfig& cfg,
                            const DmrsPattern& pat) {
    require(delay_max > 0.0 && doppler_max > 0.0, "robust spreads must be positive");
    const double df = cfg.subcarrier_spacing;
    const double to = cfg.symbol_duration;
    auto rf = [&](int k) {
        return std::polar(sinc(k * df * delay_max), -M_PI * k * df * delay_max);
    };
    auto rt = [&](int k) { return cxd(sinc(2.0 * k * to * doppler_max), 0.0); };
    return separable_from_lags(cfg, pat, rf, rt);
}

namespace {

std::vector<PriorPath> point_mass_paths(const std::vector<double>& delays,
                                        const std::vector<double>& dopplers,
                                        const std::vector<double>& powers) {
    const size_t count = delays.size();
    require(count >= 1 && dopplers.size() == count && powers.size() == count,
            "delays/dopplers/powers must have equal, non-zero length");
    double total = 0.0;
    for (double p : powers) {
        require(p > 0.0, "path powers must be positive");
        total += p;
    }
    std::vector<PriorPath> out(count);
    for (size_t l = 0; l < count; ++l)
        out[l] = {delays[l], dopplers[l], 0.0, 0.0, powers[l] / total};
    return out;
}

}  // namespace

CMat exact_pilot_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                             const std::vector<double>& delays,
                             const std::vector<double>& dopplers,
                             const std::vector<double>& powers) {
    const std::vector<PriorPath> paths = point_mass_paths(delays, dopplers, powers);
    const CMat table = joint_lag_table(cfg, paths, cfg.num_subcarriers - 1, cfg.num_symbols - 1);
    return fill_full_pilot(pat, table);
}

FullCorr exact_full_correlation(const OfdmConfig& cfg, const DmrsPattern& pat,
                                const std::vector<double>& delays,
                                const std::vector<double>& dopplers,
                                const std::vector<double>& powers, size_t max_entries) {
    const std::vector<PriorPath> paths = point_mass_paths(delays, dopplers, powers);
    const int n = cfg.num_subcarriers;
    const int m = cfg.num_symbols;
    const size_t grid_entries = static_cast<size_t>(n) * m * n * m;
    if (grid_entries > max_entries)
        throw std::length_error("full grid correlation would need " +
                                std::to_string(grid_entries) + " entries (cap " +
                                std::to_string(max_entries) + ")");

    const CMat table = joint_lag_table(cfg, paths, n - 1, m - 1);
    FullCorr out;
    out.r_cross = fill_full_cross(cfg, pat, table, max_entries);
    out.r_pilot = fill_full_pilot(pat, table);

    const int off_n = n - 1;
    const int off_m = m - 1;
    out.r_grid.resize(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(n) * m);
    for (int mc = 0; mc < m; ++mc)
        for (int nc = 0; nc < n; ++nc) {
            const Eigen::Index col = static_cast<Eigen::Index>(mc) * n + nc;
            for (int mr = 0; mr < m; ++mr)
                for (int nr = 0; nr < n; ++nr)
                    out.r_grid(static_cast<Eigen::Index>(mr) * n + nr, col) =
                        table(nr - nc + off_n, mr - mc + off_m);
        }
    return out;
}

}  // namespace isacsim
