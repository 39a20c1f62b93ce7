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

#include "isacsim/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <ostream>
#include <thread>

#include "isacsim/rng.hpp"

namespace isacsim {

namespace {

// RNG substream purposes
enum StreamId : uint64_t {
    kGainStream = 1,
    kWarmupNoiseStream = 2,
    kSlotNoiseStream = 3,
    kDataStream = 4,
    kPilotStream = 5,
};

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// unit-modulus QPSK DMRS values, fixed per scenario seed
CMat make_pilot_values(const DmrsPattern& pat, uint64_t seed) {
    Rng rng(mix_seed({seed, kPilotStream}));
    CMat vals(pat.n_pilot_sc, pat.n_pilot_sym);
    for (int m = 0; m < pat.n_pilot_sym; ++m)
        for (int n = 0; n < pat.n_pilot_sc; ++n)
            vals(n, m) = cxd(rng.bit() ? -M_SQRT1_2 : M_SQRT1_2,
                             rng.bit() ? -M_SQRT1_2 : M_SQRT1_2);
    return vals;
}

BoolGrid pilot_mask(const OfdmConfig& cfg, const DmrsPattern& pat) {
    BoolGrid mask = BoolGrid::Constant(cfg.num_subcarriers, cfg.num_symbols, false);
    for (int m : pat.pilot_symbols)
        for (int n : pat.pilot_subcarriers) mask(n, m) = true;
    return mask;
}

struct TxGrid {
    ResourceGrid x;
    std::vector<uint8_t> data_bits;  // data REs in column-major grid order
    int order = 4;
};

TxGrid build_tx(const Scenario& scn, const DmrsPattern& pat, const CMat& pilot_vals,
                const BoolGrid& pilots, int trial, int slot) {
    const int order = scn.modulation_order != 0 ? scn.modulation_order : 4;
    const int bps = qam_bits_per_symbol(order);
    const Eigen::Index n_data =
        static_cast<Eigen::Index>(scn.ofdm.num_subcarriers) * scn.ofdm.num_symbols -
        static_cast<Eigen::Index>(pat.n_pilot_sc) * pat.n_pilot_sym;

    Rng rng(mix_seed({scn.seed, kDataStream, static_cast<uint64_t>(trial),
                      static_cast<uint64_t>(slot)}));
    TxGrid tx;
    tx.order = order;
    tx.data_bits.resize(static_cast<size_t>(n_data) * bps);
    for (auto& b : tx.data_bits) b = rng.bit() ? 1 : 0;
    const CVec data = qam_modulate(tx.data_bits, order);

    tx.x.role = GridRole::TxSymbols;
    tx.x.data.resize(scn.ofdm.num_subcarriers, scn.ofdm.num_symbols);
    Eigen::Index next_data = 0;
    for (Eigen::Index m = 0; m < tx.x.data.cols(); ++m)
        for (Eigen::Index n = 0; n < tx.x.data.rows(); ++n)
            tx.x.data(n, m) = pilots(n, m) ? pilot_vals(n / pat.sc_interval, m / pat.sym_interval)
                                           : data(next_data++);
    return tx;
}

SensingEstimate injected_estimate(const Scenario& scn, const BinWidths& bins) {
    SensingEstimate est;
    const double dt = scn.injected_error->delay_bins * bins.delay;
    const double df = scn.injected_error->doppler_bins * bins.doppler;
    for (size_t l = 0; l < scn.delays.size(); ++l) {
        est.delays.push_back(scn.delays[l] + dt);
        est.dopplers.push_back(scn.dopplers[l] + df);
        est.peak_powers.push_back(0.0);
    }
    return est;
}

// warmup history: pilot LS matrices of the slots preceding slot 0
void fill_warmup(SensingWindow& window, const Scenario& scn, const DmrsPattern& pat,
                 const PathSet& paths, double noise_sigma, int trial) {
    const int s_comb = scn.sensing.slots_combined;
    for (int k = 0; k + 1 < s_comb; ++k) {
        const long slot = static_cast<long>(k) - (s_comb - 1);  // negative slot index
        CMat ls = gen_cfr_at_pilots(scn.ofdm, pat, paths, slot * scn.ofdm.num_symbols);
        if (noise_sigma > 0.0) {
            Rng rng(mix_seed({scn.seed, kWarmupNoiseStream, static_cast<uint64_t>(trial),
                              static_cast<uint64_t>(k)}));
            for (Eigen::Index m = 0; m < ls.cols(); ++m)
                for (Eigen::Index n = 0; n < ls.rows(); ++n) ls(n, m) += noise_sigma * rng.cgauss();
        }
        window.push(std::move(ls));
    }
}

void serialize_doubles(std::string& out, const std::vector<double>& v) {
    for (double d : v) {
        char buf[sizeof(double)];
        std::memcpy(buf, &d, sizeof(double));
        out.append(buf, sizeof(double));
    }
    out.push_back('|');
}

std::string coeff_key(const char* tag, double sigma_hat_sq, const SensingEstimate& est,
                      const ToleranceRecord& tol, const std::vector<double>& weights) {
    std::string key(tag);
    key.push_back('|');
    serialize_doubles(key, {sigma_hat_sq});
    serialize_doubles(key, est.delays);
    serialize_doubles(key, est.dopplers);
    serialize_doubles(key, tol.c_freq);
    serialize_doubles(key, tol.c_time);
    serialize_doubles(key, weights);
    return key;
}

uint64_t parametric_mult_model(int n, int m, int n_p, int m_p, int n_paths) {
    const auto L = static_cast<uint64_t>(n_paths);
    const uint64_t npmp = static_cast<uint64_t>(n_p) * m_p;
    // Gram + solve + projection + grid reconstruction
    return L * L * L + npmp * L * L + npmp * L + static_cast<uint64_t>(n) * m * L;
}

void accumulate_ber(const ResourceGrid& y, const CMat& h_hat, const TxGrid& tx,
                    const BoolGrid& pilots, EstimatorTrialStats& st) {
    const EqualizedGrid eq = zf_equalize(y, ResourceGrid{h_hat, GridRole::Cfr});
    const int bps = qam_bits_per_symbol(tx.order);

    CVec data(static_cast<Eigen::Index>(tx.data_bits.size()) / bps);
    std::vector<bool> erased(data.size());
    Eigen::Index k = 0;
    for (Eigen::Index m = 0; m < eq.data.cols(); ++m)
        for (Eigen::Index n = 0; n < eq.data.rows(); ++n) {
            if (pilots(n, m)) continue;
            data(k) = eq.data(n, m);
            erased[k] = eq.erased(n, m);
            ++k;
        }

    const std::vector<uint8_t> rx_bits = qam_demodulate(data, tx.order);
    for (Eigen::Index s = 0; s < data.size(); ++s) {
        if (erased[s]) {
            st.bit_errors += 0.5 * bps;
            continue;
        }
        for (int b = 0; b < bps; ++b)
            if (rx_bits[s * bps + b] != tx.data_bits[s * bps + b]) st.bit_errors += 1.0;
    }
    st.bits += tx.data_bits.size();
}

}  // namespace

std::shared_ptr<const LmmseCoefficients> CoeffCache::get_or_build(
    const std::string& key,
    const std::function<std::shared_ptr<const LmmseCoefficients>()>& build) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
    }
    // build outside the lock; identical inputs give identical results, so a
    // racing duplicate build is only wasted work
    std::shared_ptr<const LmmseCoefficients> built = build();
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = map_.try_emplace(key, built);
    return it->second;
}

std::vector<EstimatorTrialStats> run_trial(const Scenario& scn, double snr_db, int trial_index,
                                           CoeffCache* cache) {
    const OfdmConfig& cfg = scn.ofdm;
    const DmrsPattern pat = scn.pattern();
    const SensingConfig cfgS = scn.resolved_sensing();
    const NoiseSpec noise = NoiseSpec::at(snr_db);
    const BinWidths bins = bin_widths(cfg, pat, cfgS);

    const PathSet paths = gen_random_paths(
        scn.powers_db, scn.delays, scn.dopplers,
        mix_seed({scn.seed, kGainStream, static_cast<uint64_t>(trial_index)}));
    const CMat pilot_vals = make_pilot_values(pat, scn.seed);
    const BoolGrid pilots = pilot_mask(cfg, pat);

    const size_t n_est = scn.estimators.size();
    std::vector<EstimatorTrialStats> stats(n_est);
    std::vector<std::unique_ptr<SlotPipeline>> pipelines(n_est);
    std::vector<std::shared_ptr<const LmmseCoefficients>> robust_coeffs(n_est);

    for (size_t i = 0; i < n_est; ++i) {
        const EstimatorSpec& spec = scn.estimators[i];
        if (spec.kind != EstimatorKind::ProposedSeparable &&
            spec.kind != EstimatorKind::ProposedFull2d)
            continue;
        const CorrMode mode = spec.kind == EstimatorKind::ProposedSeparable ? CorrMode::Separable
                                                                            : CorrMode::Full2d;
        const double sigma_hat = spec.sigma_hat_sq.value_or(scn.sigma_hat_sq);
        pipelines[i] = std::make_unique<SlotPipeline>(cfg, pat, cfgS, mode, sigma_hat);
        if (scn.tolerance_override)
            pipelines[i]->set_tolerance_override(scn.tolerance_override->delay_bins * bins.delay,
                                                 scn.tolerance_override->doppler_bins *
                                                     bins.doppler);
        // perfect-gain weighting only lines up when the sensed path count
        // matches the true one; otherwise fall back to the constant profile
        const std::vector<double> gain_weights =
            spec.perfect_gain ? scn.powers_linear() : std::vector<double>{};
        const char* tag = spec.kind == EstimatorKind::ProposedSeparable ? "sep" : "full";
        pipelines[i]->set_builder([&, tag, mode, sigma_hat, gain_weights](
                                      const SensingEstimate& est, const ToleranceRecord& tol) {
            const std::vector<double> w =
                (!gain_weights.empty() &&
                 est.num_paths() == static_cast<int>(gain_weights.size()))
                    ? gain_weights
                    : std::vector<double>{};
            auto build = [&]() {
                const CorrSet corr = mode == CorrMode::Separable
                                         ? build_separable(cfg, pat, est, tol, w)
                                         : build_full_2d(cfg, pat, est, tol, w);
                return std::make_shared<const LmmseCoefficients>(
                    lmmse_coeffs(corr, sigma_hat, tol));
            };
            if (!cache) return build();
            return cache->get_or_build(coeff_key(tag, sigma_hat, est, tol, w), build);
        });
    }

    std::optional<SensingWindow> window;
    SensingEstimate injected;
    if (scn.injected_error) {
        injected = injected_estimate(scn, bins);
    } else {
        window.emplace(cfgS.slots_combined);
        fill_warmup(*window, scn, pat, paths, std::sqrt(noise.variance()), trial_index);
    }

    for (int slot = 0; slot < scn.slots; ++slot) {
        const ResourceGrid h =
            gen_cfr(cfg, paths, static_cast<long>(slot) * cfg.num_symbols);
        const TxGrid tx = build_tx(scn, pat, pilot_vals, pilots, trial_index, slot);
        const ResourceGrid y =
            transmit(tx.x, h, noise,
                     mix_seed({scn.seed, kSlotNoiseStream, static_cast<uint64_t>(trial_index),
                               static_cast<uint64_t>(slot)}));
        const CMat h_ls = ls_pilots(y, tx.x, pat);

        SensingEstimate est;
        if (scn.injected_error) {
            est = injected;
        } else {
            window->push(h_ls);
            const RdMap map =
                periodogram(apply_window(window->combined(), cfgS.window), cfg, pat, cfgS);
            est = detect_peaks(map, cfgS);
        }

        const double ref = h.data.squaredNorm();
        for (size_t i = 0; i < n_est; ++i) {
            if (stats[i].failed) continue;
            const EstimatorSpec& spec = scn.estimators[i];
            try {
                CMat h_hat;
                switch (spec.kind) {
                    case EstimatorKind::ProposedSeparable:
                    case EstimatorKind::ProposedFull2d: {
                        SlotResult res = pipelines[i]->process(h_ls, est);
                        stats[i].mult_count += res.mult_count;
                        if (res.coefficients_updated) ++stats[i].updates;
                        h_hat = std::move(res.h_hat);
                        break;
                    }
                    case EstimatorKind::LsSpline:
                        h_hat = estimate_ls_spline(y, tx.x, cfg, pat);
                        break;
                    case EstimatorKind::RobustLmmse: {
                        if (!robust_coeffs[i]) {
                            double dmax = 0.0, fmax = 0.0;
                            for (size_t l = 0; l < scn.delays.size(); ++l) {
                                dmax = std::max(dmax, scn.delays[l]);
                                fmax = std::max(fmax, std::abs(scn.dopplers[l]));
                            }
                            // degenerate all-zero spreads fall back to one bin
                            const double delay_max =
                                spec.delay_max.value_or(std::max(dmax, bins.delay));
                            const double doppler_max =
                                spec.doppler_max.value_or(std::max(fmax, bins.doppler));
                            const double sigma_hat =
                                spec.sigma_hat_sq.value_or(scn.sigma_hat_sq);
                            auto build = [&]() {
                                return std::make_shared<const LmmseCoefficients>(lmmse_coeffs(
                                    robust_correlations(delay_max, doppler_max, cfg, pat),
                                    sigma_hat));
                            };
                            std::string key = "robust|";
                            serialize_doubles(key, {delay_max, doppler_max, sigma_hat});
                            robust_coeffs[i] = cache ? cache->get_or_build(key, build) : build();
                            stats[i].mult_count += robust_coeffs[i]->build_mult_count;
                        }
                        h_hat = estimate_separable(h_ls, *robust_coeffs[i], &stats[i].mult_count);
                        break;
                    }
                    case EstimatorKind::Parametric: {
                        const double sigma_hat = spec.sigma_hat_sq.value_or(scn.sigma_hat_sq);
                        h_hat = estimate_parametric(h_ls, cfg, pat, est, sigma_hat);
                        stats[i].mult_count +=
                            parametric_mult_model(cfg.num_subcarriers, cfg.num_symbols,
                                                  pat.n_pilot_sc, pat.n_pilot_sym,
                                                  est.num_paths());
                        break;
                    }
                    case EstimatorKind::PerfectCfr:
                        h_hat = h.data;
                        break;
                }
                stats[i].err_energy += (h.data - h_hat).squaredNorm();
                stats[i].ref_energy += ref;
                if (scn.modulation_order != 0)
                    accumulate_ber(y, h_hat, tx, pilots, stats[i]);
            } catch (const std::exception& e) {
                std::cerr << "trial " << trial_index << " snr " << snr_db << " dB: estimator "
                          << estimator_name(spec.kind) << " failed: " << e.what() << "\n";
                stats[i] = EstimatorTrialStats{};
                stats[i].failed = true;
            }
        }
    }
    return stats;
}

SensingEstimate reference_estimate(const Scenario& scn) {
    const DmrsPattern pat = scn.pattern();
    const SensingConfig cfgS = scn.resolved_sensing();
    const BinWidths bins = bin_widths(scn.ofdm, pat, cfgS);
    if (scn.injected_error) return injected_estimate(scn, bins);

    // nominal channel: deterministic real gains at the true mean powers
    PathSet nominal;
    const std::vector<double> powers = scn.powers_linear();
    double total = 0.0;
    for (double p : powers) total += p;
    for (size_t l = 0; l < powers.size(); ++l)
        nominal.paths.push_back(
            {std::sqrt(powers[l] / total), scn.delays[l], scn.dopplers[l]});

    SensingWindow window(cfgS.slots_combined);
    for (int k = 0; k < cfgS.slots_combined; ++k) {
        const long slot = static_cast<long>(k) - (cfgS.slots_combined - 1);
        window.push(gen_cfr_at_pilots(scn.ofdm, pat, nominal, slot * scn.ofdm.num_symbols));
    }
    const RdMap map =
        periodogram(apply_window(window.combined(), cfgS.window), scn.ofdm, pat, cfgS);
    return detect_peaks(map, cfgS);
}

ToleranceRecord reference_tolerance(const Scenario& scn, const SensingEstimate& est) {
    const DmrsPattern pat = scn.pattern();
    const SensingConfig cfgS = scn.resolved_sensing();
    if (scn.tolerance_override) {
        const BinWidths bins = bin_widths(scn.ofdm, pat, cfgS);
        return uniform_tolerance(est, scn.tolerance_override->delay_bins * bins.delay,
                                 scn.tolerance_override->doppler_bins * bins.doppler);
    }
    return default_tolerance(est, resolutions(scn.ofdm, cfgS));
}

int default_thread_count() {
    if (const char* env = std::getenv("ISACSIM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc != 0 ? static_cast<int>(hc) : 1;
}

std::vector<ResultRow> sweep(const Scenario& scn, int num_threads) {
    scn.validate();
    const int threads = num_threads > 0 ? num_threads : default_thread_count();
    CoeffCache cache;

    // support-based predictions for the proposed estimators
    std::optional<SensingEstimate> ref_est;
    std::optional<ToleranceRecord> ref_tol;
    try {
        ref_est = reference_estimate(scn);
        if (ref_est->num_paths() > 0) ref_tol = reference_tolerance(scn, *ref_est);
    } catch (const std::exception&) {
        // prediction is best-effort; the sweep itself proceeds
    }
    const DmrsPattern pat = scn.pattern();
    auto predict = [&](const EstimatorSpec& spec, double sigma_sq) -> std::optional<double> {
        if (!ref_tol) return std::nullopt;
        if (spec.kind != EstimatorKind::ProposedSeparable &&
            spec.kind != EstimatorKind::ProposedFull2d)
            return std::nullopt;
        try {
            const double rho = pat.pilot_density();
            const PsdSupport support = spec.kind == EstimatorKind::ProposedSeparable
                                           ? support_separable(*ref_est, *ref_tol, rho)
                                           : support_full_2d(*ref_est, *ref_tol, rho);
            return nmse_psd(support, support, sigma_sq,
                            spec.sigma_hat_sq.value_or(scn.sigma_hat_sq), scn.ofdm, pat);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };

    std::vector<ResultRow> rows;
    for (double snr : scn.snr_grid_db) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<EstimatorTrialStats>> per_trial(scn.trials);
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= scn.trials) break;
                per_trial[t] = run_trial(scn, snr, t, &cache);
            }
        };
        if (threads <= 1 || scn.trials == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            const int n_workers = std::min(threads, scn.trials);
            pool.reserve(n_workers);
            for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const double sigma_sq = NoiseSpec::at(snr).variance();
        for (size_t i = 0; i < scn.estimators.size(); ++i) {
            ResultRow row;
            row.scenario_id = scn.id;
            row.estimator = estimator_name(scn.estimators[i].kind);
            row.snr_db = snr;
            double err = 0.0, ref = 0.0, bit_err = 0.0;
            uint64_t bits = 0;
            for (int t = 0; t < scn.trials; ++t) {
                const EstimatorTrialStats& st = per_trial[t][i];
                if (st.failed) {
                    ++row.failed_trials;
                    continue;
                }
                ++row.trials;
                err += st.err_energy;
                ref += st.ref_energy;
                bit_err += st.bit_errors;
                bits += st.bits;
                row.mult_count += st.mult_count;
                row.updates_triggered += st.updates;
            }
            row.nmse = ref > 0.0 ? err / ref : 0.0;
            if (bits > 0) row.ber = bit_err / static_cast<double>(bits);
            row.nmse_predicted = predict(scn.estimators[i], sigma_sq);
            row.wall_time_s = dt;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string results_csv_header() {
    return "scenario,estimator,snr_db,nmse,nmse_predicted,ber,mult_count,updates_triggered,"
           "trials,failed_trials,wall_time_s";
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "# isacsim-results v1\n" << results_csv_header() << "\n";
    for (const ResultRow& r : rows) {
        out << r.scenario_id << ',' << r.estimator << ',' << fmt_g(r.snr_db) << ','
            << fmt_g(r.nmse) << ',' << (r.nmse_predicted ? fmt_g(*r.nmse_predicted) : "") << ','
            << (r.ber ? fmt_g(*r.ber) : "") << ',' << r.mult_count << ',' << r.updates_triggered
            << ',' << r.trials << ',' << r.failed_trials << ',' << fmt_g(r.wall_time_s) << "\n";
    }
}

RdMap compute_rdmap(const Scenario& scn, double snr_db, int trial_index) {
    const OfdmConfig& cfg = scn.ofdm;
    const DmrsPattern pat = scn.pattern();
    const SensingConfig cfgS = scn.resolved_sensing();
    const NoiseSpec noise = NoiseSpec::at(snr_db);

    const PathSet paths = gen_random_paths(
        scn.powers_db, scn.delays, scn.dopplers,
        mix_seed({scn.seed, kGainStream, static_cast<uint64_t>(trial_index)}));
    const CMat pilot_vals = make_pilot_values(pat, scn.seed);
    const BoolGrid pilots = pilot_mask(cfg, pat);

    SensingWindow window(cfgS.slots_combined);
    fill_warmup(window, scn, pat, paths, std::sqrt(noise.variance()), trial_index);

    const ResourceGrid h = gen_cfr(cfg, paths, 0);
    const TxGrid tx = build_tx(scn, pat, pilot_vals, pilots, trial_index, 0);
    const ResourceGrid y = transmit(
        tx.x, h, noise,
        mix_seed({scn.seed, kSlotNoiseStream, static_cast<uint64_t>(trial_index), 0}));
    window.push(ls_pilots(y, tx.x, pat));
    return periodogram(apply_window(window.combined(), cfgS.window), cfg, pat, cfgS);
}

void write_rdmap_csv(const RdMap& map, std::ostream& out) {
    out << "# isacsim-rdmap v1\n";
    out << "delay_bin,doppler_bin,delay_s,doppler_hz,power\n";
    const int cols = static_cast<int>(map.values.cols());
    for (int n = 0; n < map.values.rows(); ++n) {
        for (int m = 0; m < cols; ++m) {
            const int m_wrapped = (m <= cols / 2) ? m : m - cols;
            out << n << ',' << m << ',' << fmt_g(n * map.bin_delay) << ','
                << fmt_g(m_wrapped * map.bin_doppler) << ',' << fmt_g(map.values(n, m)) << "\n";
        }
    }
}

std::vector<AnalysisRow> analyze(const Scenario& scn) {
    scn.validate();
    const DmrsPattern pat = scn.pattern();
    const SensingEstimate est = reference_estimate(scn);
    if (est.num_paths() == 0)
        throw std::runtime_error("analyze: reference sensing produced no paths");
    const ToleranceRecord tol = reference_tolerance(scn, est);

    const CMat r_hat = constructed_pilot_correlation(scn.ofdm, pat, est, tol);
    const CMat r_true =
        exact_pilot_correlation(scn.ofdm, pat, scn.delays, scn.dopplers, scn.powers_linear());
    const SupportRatio ratio = support_1d_vs_2d(est, tol);
    const double rho = pat.pilot_density();

    std::vector<AnalysisRow> rows;
    for (double snr : scn.snr_grid_db) {
        AnalysisRow row;
        row.scenario_id = scn.id;
        row.snr_db = snr;
        row.sigma_sq = NoiseSpec::at(snr).variance();
        row.sigma_hat_sq = scn.sigma_hat_sq;
        row.nmse_pilot = nmse_theorem1(r_hat, r_true, scn.sigma_hat_sq, row.sigma_sq);
        row.nmse_pilot_lb = nmse_lower_bound(r_true, scn.sigma_hat_sq, row.sigma_sq);
        try {
            const PsdSupport s1 = support_separable(est, tol, rho);
            row.psd_nmse_1d = nmse_psd(s1, s1, row.sigma_sq, scn.sigma_hat_sq, scn.ofdm, pat);
        } catch (const std::exception&) {
        }
        try {
            const PsdSupport s2 = support_full_2d(est, tol, rho);
            row.psd_nmse_2d = nmse_psd(s2, s2, row.sigma_sq, scn.sigma_hat_sq, scn.ofdm, pat);
        } catch (const std::exception&) {
        }
        row.area_1d = ratio.area_1d;
        row.area_2d = ratio.area_2d;
        row.support_ratio = ratio.ratio;
        rows.push_back(row);
    }
    return rows;
}

void write_analysis_csv(const std::vector<AnalysisRow>& rows, std::ostream& out) {
    out << "# isacsim-analysis v1\n";
    out << "scenario,snr_db,sigma_sq,sigma_hat_sq,nmse_pilot,nmse_pilot_lb,psd_nmse_1d,"
           "psd_nmse_2d,area_1d,area_2d,support_ratio\n";
    for (const AnalysisRow& r : rows) {
        out << r.scenario_id << ',' << fmt_g(r.snr_db) << ',' << fmt_g(r.sigma_sq) << ','
            << fmt_g(r.sigma_hat_sq) << ',' << fmt_g(r.nmse_pilot) << ',' << fmt_g(r.nmse_pilot_lb)
            << ',' << (r.psd_nmse_1d ? fmt_g(*r.psd_nmse_1d) : "") << ','
            << (r.psd_nmse_2d ? fmt_g(*r.psd_nmse_2d) : "") << ',' << fmt_g(r.area_1d) << ','
            << fmt_g(r.area_2d) << ',' << fmt_g(r.support_ratio) << "\n";
    }
}

}  // namespace isacsim
