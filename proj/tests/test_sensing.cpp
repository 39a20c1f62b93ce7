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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isacsim/rng.hpp"
#include "isacsim/sensing.hpp"

using namespace isacsim;

namespace {

const OfdmConfig kTableOne{120e3, 8.9e-6, 1584, 56, 28e9};

OfdmConfig small_cfg(int n, int m) { return {120e3, 8.9e-6, n, m, 28e9}; }

// literal double-sum transform of the map definition
Eigen::MatrixXd naive_periodogram(const CMat& h, int n_per, int m_per, int n, int m) {
    Eigen::MatrixXd out(n_per, m_per);
    for (int nn = 0; nn < n_per; ++nn) {
        for (int mm = 0; mm < m_per; ++mm) {
            cxd acc = 0.0;
            for (int k = 0; k < h.rows(); ++k) {
                cxd inner = 0.0;
                for (int l = 0; l < h.cols(); ++l)
                    inner += h(k, l) * std::polar(1.0, -2.0 * M_PI * l * mm / m_per);
                acc += inner * std::polar(1.0, 2.0 * M_PI * k * nn / n_per);
            }
            out(nn, mm) = std::norm(acc) / (static_cast<double>(n) * m);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("pilot ls extraction") {
    const OfdmConfig cfg = small_cfg(16, 8);
    const DmrsPattern pat = dmrs_pattern(cfg, 4, 2);
    Rng rng(3);
    PathSet paths{{{rng.cgauss(), 140e-9, 900.0}, {rng.cgauss(), 40e-9, -500.0}}};
    const ResourceGrid h = gen_cfr(cfg, paths);

    CMat x(16, 8);
    for (Eigen::Index m = 0; m < 8; ++m)
        for (Eigen::Index n = 0; n < 16; ++n)
            x(n, m) = std::polar(1.0, 2.0 * M_PI * rng.uniform());
    const ResourceGrid tx{x, GridRole::TxSymbols};
    const ResourceGrid y = transmit(tx, h, NoiseSpec::off(), 1);

    const CMat ls = ls_pilots(y, tx, pat);
    for (int m = 0; m < pat.n_pilot_sym; ++m)
        for (int n = 0; n < pat.n_pilot_sc; ++n)
            CHECK(std::abs(ls(n, m) -
                           h.data(pat.pilot_subcarriers[n], pat.pilot_symbols[m])) < 1e-12);

    // identity pilots: LS equals the received samples at pilot positions
    ResourceGrid ones{CMat::Ones(16, 8), GridRole::TxSymbols};
    const ResourceGrid y2 = transmit(ones, h, NoiseSpec::at(10.0), 2);
    const CMat ls2 = ls_pilots(y2, ones, pat);
    for (int m = 0; m < pat.n_pilot_sym; ++m)
        for (int n = 0; n < pat.n_pilot_sc; ++n)
            CHECK(std::abs(ls2(n, m) -
                           y2.data(pat.pilot_subcarriers[n], pat.pilot_symbols[m])) < 1e-14);

    // BPSK pilots: sign cancels exactly
    CMat bpsk(16, 8);
    for (Eigen::Index m = 0; m < 8; ++m)
        for (Eigen::Index n = 0; n < 16; ++n) bpsk(n, m) = rng.bit() ? -1.0 : 1.0;
    const ResourceGrid txb{bpsk, GridRole::TxSymbols};
    const ResourceGrid yb = transmit(txb, h, NoiseSpec::off(), 3);
    const CMat lsb = ls_pilots(yb, txb, pat);
    for (int m = 0; m < pat.n_pilot_sym; ++m)
        for (int n = 0; n < pat.n_pilot_sc; ++n)
            CHECK(std::abs(lsb(n, m) -
                           h.data(pat.pilot_subcarriers[n], pat.pilot_symbols[m])) < 1e-12);

    ResourceGrid zero_pilot = tx;
    zero_pilot.data(0, 0) = 0.0;
    CHECK_THROWS_AS(ls_pilots(y, zero_pilot, pat), std::invalid_argument);
}

TEST_CASE("windowing normalization") {
    // rectangular: constant 1/(Np*Mp)
    CMat h = CMat::Ones(4, 6);
    const CMat rect = apply_window(h, WindowKind::Rectangular);
    CHECK((rect.array() - cxd(1.0 / 24.0, 0.0)).abs().maxCoeff() < 1e-15);

    // degenerate 1x1 hamming: passthrough scaled by 1/a(0)^2
    CMat one = CMat::Constant(1, 1, cxd(2.0, -1.0));
    const CMat deg = apply_window(one, WindowKind::Hamming);
    const double a0 = 0.54 - 0.46;  // periodic hamming at index 0
    CHECK(std::abs(deg(0, 0) - cxd(2.0, -1.0) / (a0 * a0)) < 1e-12);

    // 4-point periodic hamming taper profile
    const Eigen::VectorXd w = window_vector(WindowKind::Hamming, 4);
    CHECK(w(0) == doctest::Approx(0.08));
    CHECK(w(1) == doctest::Approx(0.54));
    CHECK(w(2) == doctest::Approx(1.00));
    CHECK(w(3) == doctest::Approx(0.54));

    // column profile of the windowing matrix is proportional to the taper
    CMat h4 = CMat::Ones(4, 3);
    const CMat win = apply_window(h4, WindowKind::Hamming);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 4; ++n)
            CHECK(std::abs(win(n, m) / win(0, m) - w(n) / w(0)) < 1e-12);
}

TEST_CASE("fast periodogram equals the naive double transform") {
    const OfdmConfig cfg = small_cfg(16, 8);
    const DmrsPattern pat = dmrs_pattern(cfg, 2, 2);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 16;
    cfgS.fft_size_time = 8;
    cfgS.window = WindowKind::Rectangular;

    Rng rng(5);
    CMat h(8, 4);
    for (Eigen::Index m = 0; m < 4; ++m)
        for (Eigen::Index n = 0; n < 8; ++n) h(n, m) = rng.cgauss();

    const RdMap fast = periodogram(h, cfg, pat, cfgS);
    const Eigen::MatrixXd naive = naive_periodogram(h, 16, 8, 16, 8);
    const double scale = naive.maxCoeff();
    CHECK(((fast.values - naive).cwiseAbs().maxCoeff() / scale) < 1e-9);

    // non power-of-two transform sizes go through the same path
    SensingConfig odd = cfgS;
    odd.fft_size_freq = 12;
    odd.fft_size_time = 10;
    const RdMap fast_odd = periodogram(h, cfg, pat, odd);
    const Eigen::MatrixXd naive_odd = naive_periodogram(h, 12, 10, 16, 8);
    CHECK(((fast_odd.values - naive_odd).cwiseAbs().maxCoeff() / naive_odd.maxCoeff()) < 1e-9);

    // all-zero input stays all-zero
    const RdMap zero = periodogram(CMat::Zero(8, 4), cfg, pat, cfgS);
    CHECK(zero.values.maxCoeff() == 0.0);
}

TEST_CASE("on-grid path lands on its exact bin") {
    const OfdmConfig cfg = small_cfg(64, 16);
    const DmrsPattern pat = dmrs_pattern(cfg, 4, 2);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 32;
    cfgS.fft_size_time = 16;
    cfgS.window = WindowKind::Rectangular;
    // rectangular sidelobes sit near -13 dB; keep the threshold above them
    cfgS.peak_rel_threshold_db = -10.0;
    cfgS.excl_freq_bins = 2;
    cfgS.excl_time_bins = 2;

    const BinWidths bins = bin_widths(cfg, pat, cfgS);
    const int n_star = 5, m_star = 3;
    PathSet paths{{{1.0, n_star * bins.delay, m_star * bins.doppler}}};
    const CMat h = gen_cfr_at_pilots(cfg, pat, paths);
    const RdMap map = periodogram(h, cfg, pat, cfgS);

    Eigen::Index peak_n, peak_m;
    map.values.maxCoeff(&peak_n, &peak_m);
    CHECK(peak_n == n_star);
    CHECK(peak_m == m_star);

    const SensingEstimate est = detect_peaks(map, cfgS);
    REQUIRE(est.num_paths() == 1);
    CHECK(est.delays[0] == doctest::Approx(n_star * bins.delay).epsilon(1e-12));
    CHECK(est.dopplers[0] == doctest::Approx(m_star * bins.doppler).epsilon(1e-12));

    // negative Doppler wraps into the upper half of the map
    PathSet neg{{{1.0, n_star * bins.delay, -m_star * bins.doppler}}};
    const SensingEstimate est2 =
        detect_peaks(periodogram(gen_cfr_at_pilots(cfg, pat, neg), cfg, pat, cfgS), cfgS);
    REQUIRE(est2.num_paths() == 1);
    CHECK(est2.dopplers[0] == doctest::Approx(-m_star * bins.doppler).epsilon(1e-12));
}

TEST_CASE("peak detection separates or merges paths by spacing") {
    const OfdmConfig cfg = small_cfg(256, 56);
    const DmrsPattern pat = dmrs_pattern(cfg, 8, 8);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 256;
    cfgS.fft_size_time = 256;
    cfgS.slots_combined = 1;
    cfgS.window = WindowKind::Hamming;
    const auto [ef, et] = default_peak_exclusion(cfg, pat, cfgS);
    cfgS.excl_freq_bins = ef;
    cfgS.excl_time_bins = et;

    const Resolutions res = resolutions(cfg, cfgS);

    // separation well beyond the window resolution on both axes
    PathSet separated{{{1.0, 100e-9, 0.0}, {0.7, 100e-9 + 3.0 * res.delay, 3.0 * res.doppler}}};
    const SensingEstimate two = detect_peaks(
        periodogram(apply_window(gen_cfr_at_pilots(cfg, pat, separated), cfgS.window), cfg, pat,
                    cfgS),
        cfgS);
    CHECK(two.num_paths() == 2);

    // closer than the resolution on both axes: merged
    PathSet close{{{1.0, 100e-9, 0.0}, {0.9, 100e-9 + 0.3 * res.delay, 0.3 * res.doppler}}};
    const SensingEstimate one = detect_peaks(
        periodogram(apply_window(gen_cfr_at_pilots(cfg, pat, close), cfgS.window), cfg, pat,
                    cfgS),
        cfgS);
    CHECK(one.num_paths() == 1);
}

TEST_CASE("off-grid path is detected within one bin") {
    const OfdmConfig cfg = small_cfg(256, 56);
    const DmrsPattern pat = dmrs_pattern(cfg, 8, 8);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 256;
    cfgS.fft_size_time = 256;
    cfgS.window = WindowKind::Hamming;
    const auto [ef, et] = default_peak_exclusion(cfg, pat, cfgS);
    cfgS.excl_freq_bins = ef;
    cfgS.excl_time_bins = et;

    const BinWidths bins = bin_widths(cfg, pat, cfgS);
    const double tau = (20.0 + 0.37) * bins.delay;
    const double fd = (7.0 - 0.42) * bins.doppler;
    PathSet paths{{{1.0, tau, fd}}};
    const SensingEstimate est = detect_peaks(
        periodogram(apply_window(gen_cfr_at_pilots(cfg, pat, paths), cfgS.window), cfg, pat,
                    cfgS),
        cfgS);
    REQUIRE(est.num_paths() == 1);
    CHECK(std::abs(est.delays[0] - tau) <= bins.delay);
    CHECK(std::abs(est.dopplers[0] - fd) <= bins.doppler);
}

TEST_CASE("detected parameters stay in the unambiguous ranges") {
    const OfdmConfig cfg = small_cfg(128, 32);
    const DmrsPattern pat = dmrs_pattern(cfg, 4, 4);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 64;
    cfgS.fft_size_time = 32;
    cfgS.window = WindowKind::Hamming;
    cfgS.excl_freq_bins = 2;
    cfgS.excl_time_bins = 2;
    cfgS.peak_rel_threshold_db = -20.0;

    const double tau_limit = 1.0 / (cfg.subcarrier_spacing * pat.sc_interval);
    const double fd_limit = 0.5 / (cfg.symbol_duration * pat.sym_interval);

    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        PathSet paths;
        const int count = 1 + static_cast<int>(rng.next_u64() % 3);
        for (int l = 0; l < count; ++l)
            paths.paths.push_back({rng.cgauss(), rng.uniform(0.0, 0.4 * tau_limit),
                                   rng.uniform(-0.4 * fd_limit, 0.4 * fd_limit)});
        CMat ls = gen_cfr_at_pilots(cfg, pat, paths);
        for (Eigen::Index m = 0; m < ls.cols(); ++m)
            for (Eigen::Index n = 0; n < ls.rows(); ++n) ls(n, m) += 0.05 * rng.cgauss();
        const SensingEstimate est = detect_peaks(
            periodogram(apply_window(ls, cfgS.window), cfg, pat, cfgS), cfgS);
        for (double tau : est.delays) {
            CHECK(tau >= 0.0);
            CHECK(tau < tau_limit);
        }
        for (double fd : est.dopplers) {
            CHECK(fd > -fd_limit);
            CHECK(fd <= fd_limit);
        }
    }
}

TEST_CASE("bin widths") {
    const DmrsPattern pat = dmrs_pattern(kTableOne, 8, 8);
    SensingConfig cfgS;
    cfgS.fft_size_freq = 1024;
    cfgS.fft_size_time = 1024;
    const BinWidths bins = bin_widths(kTableOne, pat, cfgS);
    CHECK(std::abs(bins.delay - 1.02e-9) < 0.03e-9);
    CHECK(std::abs(bins.doppler - 13.70) < 0.03);

    SensingConfig doubled = cfgS;
    doubled.fft_size_freq = 2048;
    CHECK(bin_widths(kTableOne, pat, doubled).delay ==
          doctest::Approx(bins.delay / 2.0).epsilon(1e-12));

    const OfdmConfig lte{15e3, 71.4e-6, 256, 14, 2e9};
    const DmrsPattern dense = dmrs_pattern(lte, 1, 1);
    SensingConfig s2;
    s2.fft_size_freq = 256;
    s2.fft_size_time = 16;
    CHECK(bin_widths(lte, dense, s2).delay == doctest::Approx(1.0 / 3.84e6).epsilon(1e-9));
}

TEST_CASE("windowed resolutions") {
    SensingConfig cfgS;
    cfgS.slots_combined = 10;
    cfgS.window = WindowKind::Hamming;
    const Resolutions res = resolutions(kTableOne, cfgS);
    CHECK(res.delay == doctest::Approx(9.52e-9).epsilon(0.001));
    CHECK(res.doppler == doctest::Approx(363.2).epsilon(0.001));

    SensingConfig twice = cfgS;
    twice.slots_combined = 20;
    CHECK(resolutions(kTableOne, twice).doppler ==
          doctest::Approx(res.doppler / 2.0).epsilon(1e-12));

    SensingConfig rect = cfgS;
    rect.window = WindowKind::Rectangular;
    CHECK(resolutions(kTableOne, rect).delay ==
          doctest::Approx(1.0 / (1584.0 * 120e3)).epsilon(1e-12));
}

TEST_CASE("crlb formulas and dominance of the quantization error") {
    const DmrsPattern pat = dmrs_pattern(kTableOne, 8, 8);
    const CrlbBounds tiny = crlb(kTableOne, pat, 0.0);
    CHECK(tiny.var_delay == 0.0);
    CHECK(tiny.var_doppler == 0.0);

    // independent re-evaluation at 20 dB
    const double sigma_sq = 1e-2;
    const CrlbBounds b = crlb(kTableOne, pat, sigma_sq);
    const double n_p = 198, m_p = 7;
    const double expect_tau = 6.0 * sigma_sq / ((n_p * n_p - 1.0) * n_p * m_p) *
                              std::pow(1.0 / (2.0 * M_PI * 8.0 * 120e3), 2);
    const double expect_fd = 6.0 * sigma_sq / ((m_p * m_p - 1.0) * n_p * m_p) *
                             std::pow(1.0 / (2.0 * M_PI * 8.0 * 8.9e-6), 2);
    CHECK(b.var_delay == doctest::Approx(expect_tau).epsilon(1e-12));
    CHECK(b.var_doppler == doctest::Approx(expect_fd).epsilon(1e-12));

    // denser pilots tighten the bound
    const DmrsPattern denser = dmrs_pattern(kTableOne, 4, 4);
    const CrlbBounds b2 = crlb(kTableOne, denser, sigma_sq);
    CHECK(b2.var_delay < b.var_delay);
    CHECK(b2.var_doppler < b.var_doppler);

    // CRLB stddev below half a bin at SNR >= 0 dB: quantization dominates.
    // The Doppler bound applies to the sensing aperture, i.e. the S-slot
    // combined pilot symbol count.
    SensingConfig cfgS;
    cfgS.fft_size_freq = 1024;
    cfgS.fft_size_time = 1024;
    cfgS.slots_combined = 10;
    const BinWidths bins = bin_widths(kTableOne, pat, cfgS);
    const CrlbBounds snr0 = crlb(kTableOne, pat, 1.0);
    CHECK(std::sqrt(snr0.var_delay) < bins.delay / 2.0);
    OfdmConfig combined = kTableOne;
    combined.num_symbols = kTableOne.num_symbols * cfgS.slots_combined;
    const DmrsPattern pat_comb = dmrs_pattern(combined, 8, 8);
    const CrlbBounds snr0c = crlb(kTableOne, pat_comb, 1.0);
    CHECK(std::sqrt(snr0c.var_doppler) < bins.doppler / 2.0);
}

TEST_CASE("sensing window concatenates slots along symbols") {
    SensingWindow win(3);
    CHECK_THROWS_AS(win.combined(), std::invalid_argument);
    win.push(CMat::Constant(2, 2, cxd(1.0, 0.0)));
    CHECK_FALSE(win.full());
    win.push(CMat::Constant(2, 2, cxd(2.0, 0.0)));
    win.push(CMat::Constant(2, 2, cxd(3.0, 0.0)));
    CHECK(win.full());
    CMat all = win.combined();
    CHECK(all.cols() == 6);
    CHECK(all(0, 0) == cxd(1.0, 0.0));
    CHECK(all(0, 4) == cxd(3.0, 0.0));

    // capacity keeps only the latest slots
    win.push(CMat::Constant(2, 2, cxd(4.0, 0.0)));
    all = win.combined();
    CHECK(all(0, 0) == cxd(2.0, 0.0));
    CHECK(all(0, 4) == cxd(4.0, 0.0));
}
