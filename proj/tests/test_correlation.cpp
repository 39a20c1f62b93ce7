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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>

#include "isacsim/correlation.hpp"
#include "isacsim/rng.hpp"

using namespace isacsim;

namespace {

using boost::math::quadrature::gauss_kronrod;

const OfdmConfig kCfg{120e3, 8.9e-6, 256, 56, 28e9};

// quadrature of a complex integrand over [a, b]
cxd integrate_c(const std::function<cxd(double)>& f, double a, double b) {
    const double re = gauss_kronrod<double, 31>::integrate(
        [&](double x) { return f(x).real(); }, a, b, 12, 1e-13);
    const double im = gauss_kronrod<double, 31>::integrate(
        [&](double x) { return f(x).imag(); }, a, b, 12, 1e-13);
    return {re, im};
}

// mixture of uniform-interval phase integrals, the oracle for the closed forms
cxd corr_freq_oracle(int k, const OfdmConfig& cfg, const SensingEstimate& est,
                     const ToleranceRecord& tol) {
    cxd sum = 0.0;
    for (int l = 0; l < est.num_paths(); ++l) {
        const double c = tol.c_freq[l];
        const double lo = est.delays[l] - 0.5 * c, hi = est.delays[l] + 0.5 * c;
        sum += integrate_c(
            [&](double tau) {
                return std::polar(1.0 / c, -2.0 * M_PI * k * cfg.subcarrier_spacing * tau);
            },
            lo, hi);
    }
    return sum / static_cast<double>(est.num_paths());
}

cxd corr_time_oracle(int k, const OfdmConfig& cfg, const SensingEstimate& est,
                     const ToleranceRecord& tol) {
    cxd sum = 0.0;
    for (int l = 0; l < est.num_paths(); ++l) {
        const double c = tol.c_time[l];
        const double lo = est.dopplers[l] - 0.5 * c, hi = est.dopplers[l] + 0.5 * c;
        sum += integrate_c(
            [&](double fd) {
                return std::polar(1.0 / c, 2.0 * M_PI * k * cfg.symbol_duration * fd);
            },
            lo, hi);
    }
    return sum / static_cast<double>(est.num_paths());
}

// genuinely nested 2D quadrature per path
cxd corr_2d_oracle(int dn, int dm, const OfdmConfig& cfg, const SensingEstimate& est,
                   const ToleranceRecord& tol) {
    cxd sum = 0.0;
    for (int l = 0; l < est.num_paths(); ++l) {
        const double cf = tol.c_freq[l], ct = tol.c_time[l];
        sum += integrate_c(
            [&](double tau) {
                const cxd inner = integrate_c(
                    [&](double fd) {
                        return std::polar(1.0 / (cf * ct),
                                          2.0 * M_PI * dm * cfg.symbol_duration * fd);
                    },
                    est.dopplers[l] - 0.5 * ct, est.dopplers[l] + 0.5 * ct);
                return inner * std::polar(1.0, -2.0 * M_PI * dn * cfg.subcarrier_spacing * tau);
            },
            est.delays[l] - 0.5 * cf, est.delays[l] + 0.5 * cf);
    }
    return sum / static_cast<double>(est.num_paths());
}

SensingEstimate random_estimate(Rng& rng, int count) {
    SensingEstimate est;
    for (int l = 0; l < count; ++l) {
        est.delays.push_back(rng.uniform(10e-9, 450e-9));
        est.dopplers.push_back(rng.uniform(-4e3, 4e3));
        est.peak_powers.push_back(1.0);
    }
    return est;
}

ToleranceRecord random_tolerance(Rng& rng, const SensingEstimate& est) {
    std::vector<double> cf, ct;
    for (int l = 0; l < est.num_paths(); ++l) {
        cf.push_back(rng.uniform(2e-9, 40e-9));
        ct.push_back(rng.uniform(50.0, 600.0));
    }
    return make_tolerance(est, cf, ct);
}

}  // namespace

TEST_CASE("interval sets merge and answer membership") {
    const IntervalSet set = IntervalSet::unite({{3.0, 4.0}, {0.0, 1.0}, {0.5, 2.0}});
    CHECK(set.intervals().size() == 2);
    CHECK(set.total_length() == doctest::Approx(3.0));
    CHECK(set.contains(1.5));
    CHECK(set.contains(2.0));  // closed boundary
    CHECK_FALSE(set.contains(2.5));
    CHECK(set.contains(3.0));
}

TEST_CASE("lag correlations against the quadrature oracle") {
    Rng rng(11);
    for (int rep = 0; rep < 12; ++rep) {
        const SensingEstimate est = random_estimate(rng, 1 + rep % 3);
        const ToleranceRecord tol = random_tolerance(rng, est);
        for (int k : {-7, -1, 0, 1, 3, 19}) {
            CHECK(std::abs(corr_freq(k, kCfg, est, tol) - corr_freq_oracle(k, kCfg, est, tol)) <
                  1e-10);
            CHECK(std::abs(corr_time(k, kCfg, est, tol) - corr_time_oracle(k, kCfg, est, tol)) <
                  1e-10);
        }
    }
}

TEST_CASE("lag correlation fixed points") {
    Rng rng(12);
    const SensingEstimate est = random_estimate(rng, 3);
    const ToleranceRecord tol = random_tolerance(rng, est);

    CHECK(std::abs(corr_freq(0, kCfg, est, tol) - cxd(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(corr_time(0, kCfg, est, tol) - cxd(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(corr_2d(0, 0, kCfg, est, tol) - cxd(1.0, 0.0)) < 1e-15);

    // narrow tolerances approach the point-mass phase mixture
    const ToleranceRecord narrow = uniform_tolerance(est, 1e-18, 1e-9);
    for (int k : {1, 5, -3}) {
        cxd expect = 0.0;
        for (double tau : est.delays)
            expect += std::polar(1.0 / 3.0, -2.0 * M_PI * k * kCfg.subcarrier_spacing * tau);
        CHECK(std::abs(corr_freq(k, kCfg, est, narrow) - expect) < 1e-9);
    }
}

TEST_CASE("joint correlation: factorization and the nested oracle") {
    Rng rng(13);
    const SensingEstimate single = random_estimate(rng, 1);
    const ToleranceRecord tol1 = random_tolerance(rng, single);
    for (int dn : {-3, 0, 2})
        for (int dm : {-1, 0, 4})
            CHECK(std::abs(corr_2d(dn, dm, kCfg, single, tol1) -
                           corr_freq(dn, kCfg, single, tol1) *
                               corr_time(dm, kCfg, single, tol1)) < 1e-12);

    const SensingEstimate est = random_estimate(rng, 3);
    const ToleranceRecord tol = random_tolerance(rng, est);
    for (int dn : {-5, 1})
        for (int dm : {2, -3})
            CHECK(std::abs(corr_2d(dn, dm, kCfg, est, tol) -
                           corr_2d_oracle(dn, dm, kCfg, est, tol)) < 1e-9);
}

TEST_CASE("hermitian symmetry and contraction") {
    Rng rng(14);
    for (int rep = 0; rep < 8; ++rep) {
        const SensingEstimate est = random_estimate(rng, 1 + rep % 4);
        const ToleranceRecord tol = random_tolerance(rng, est);
        for (int k : {1, 2, 9, 33}) {
            CHECK(std::abs(corr_freq(-k, kCfg, est, tol) -
                           std::conj(corr_freq(k, kCfg, est, tol))) < 1e-14);
            CHECK(std::abs(corr_time(-k, kCfg, est, tol) -
                           std::conj(corr_time(k, kCfg, est, tol))) < 1e-14);
            CHECK(std::abs(corr_2d(-k, -2 * k, kCfg, est, tol) -
                           std::conj(corr_2d(k, 2 * k, kCfg, est, tol))) < 1e-14);
            CHECK(std::abs(corr_freq(k, kCfg, est, tol)) <= 1.0 + 1e-12);
            CHECK(std::abs(corr_time(k, kCfg, est, tol)) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("monotone widening shrinks the single-path correlation") {
    SensingEstimate est;
    est.delays = {150e-9};
    est.dopplers = {900.0};
    est.peak_powers = {1.0};
    const int k = 3;
    double prev = 1.0;
    for (double c : {2e-9, 8e-9, 20e-9, 60e-9}) {
        // stay on the first sinc lobe: k * df * c < 1
        REQUIRE(k * kCfg.subcarrier_spacing * c < 1.0);
        const double mag = std::abs(corr_freq(k, kCfg, est, uniform_tolerance(est, c, 100.0)));
        CHECK(mag < prev);
        prev = mag;
    }
}

TEST_CASE("separable matrices match the scalar evaluations") {
    const OfdmConfig cfg{120e3, 8.9e-6, 4, 4, 28e9};
    const DmrsPattern pat = dmrs_pattern(cfg, 2, 2);
    Rng rng(15);
    const SensingEstimate est = random_estimate(rng, 2);
    const ToleranceRecord tol = random_tolerance(rng, est);

    const CorrSet set = build_separable(cfg, pat, est, tol);
    CHECK(set.grid_rows == 4);
    for (int i = 0; i < pat.n_pilot_sc; ++i)
        CHECK(std::abs(set.freq_pilot(i, i) - cxd(1.0, 0.0)) < 1e-14);

    for (int n = 0; n < 4; ++n)
        for (int j = 0; j < pat.n_pilot_sc; ++j)
            CHECK(std::abs(set.freq_cross(n, j) -
                           corr_freq(n - pat.pilot_subcarriers[j], cfg, est, tol)) < 1e-14);
    for (int i = 0; i < pat.n_pilot_sc; ++i)
        for (int j = 0; j < pat.n_pilot_sc; ++j)
            CHECK(std::abs(set.freq_pilot(i, j) -
                           corr_freq(pat.pilot_subcarriers[i] - pat.pilot_subcarriers[j], cfg,
                                     est, tol)) < 1e-14);

    // uniform pilot spacing makes the pilot matrix Toeplitz
    const OfdmConfig big{120e3, 8.9e-6, 64, 8, 28e9};
    const DmrsPattern bigpat = dmrs_pattern(big, 8, 2);
    const CorrSet bigset = build_separable(big, bigpat, est, tol);
    for (int i = 1; i < bigpat.n_pilot_sc; ++i)
        for (int j = 1; j < bigpat.n_pilot_sc; ++j)
            CHECK(std::abs(bigset.freq_pilot(i, j) - bigset.freq_pilot(i - 1, j - 1)) < 1e-14);
}

TEST_CASE("full 2d matrices: kronecker oracle and entry-wise checks") {
    const OfdmConfig cfg{120e3, 8.9e-6, 8, 4, 28e9};
    const DmrsPattern pat = dmrs_pattern(cfg, 2, 2);
    Rng rng(16);

    // single path: full matrices equal time (x) freq kronecker products
    const SensingEstimate single = random_estimate(rng, 1);
    const ToleranceRecord tol1 = random_tolerance(rng, single);
    const CorrSet both = build_full_2d(cfg, pat, single, tol1);
    CMat kron_cross(both.full_cross.rows(), both.full_cross.cols());
    for (int tm = 0; tm < cfg.num_symbols; ++tm)
        for (int tp = 0; tp < pat.n_pilot_sym; ++tp)
            kron_cross.block(tm * cfg.num_subcarriers, tp * pat.n_pilot_sc,
                             cfg.num_subcarriers, pat.n_pilot_sc) =
                both.time_cross(tm, tp) * both.freq_cross;
    CHECK((both.full_cross - kron_cross).cwiseAbs().maxCoeff() < 1e-12);

    CMat kron_pilot(both.full_pilot.rows(), both.full_pilot.cols());
    for (int tm = 0; tm < pat.n_pilot_sym; ++tm)
        for (int tp = 0; tp < pat.n_pilot_sym; ++tp)
            kron_pilot.block(tm * pat.n_pilot_sc, tp * pat.n_pilot_sc, pat.n_pilot_sc,
                             pat.n_pilot_sc) = both.time_pilot(tm, tp) * both.freq_pilot;
    CHECK((both.full_pilot - kron_pilot).cwiseAbs().maxCoeff() < 1e-12);

    // two paths: entries equal direct joint-correlation calls
    const SensingEstimate est = random_estimate(rng, 2);
    const ToleranceRecord tol = random_tolerance(rng, est);
    const CorrSet set = build_full_2d(cfg, pat, est, tol);
    for (int mc = 0; mc < pat.n_pilot_sym; ++mc)
        for (int nc = 0; nc < pat.n_pilot_sc; ++nc)
            for (int mr = 0; mr < cfg.num_symbols; ++mr)
                for (int nr = 0; nr < cfg.num_subcarriers; ++nr) {
                    const cxd expect =
                        corr_2d(nr - pat.pilot_subcarriers[nc], mr - pat.pilot_symbols[mc], cfg,
                                est, tol);
                    CHECK(std::abs(set.full_cross(mr * cfg.num_subcarriers + nr,
                                                  mc * pat.n_pilot_sc + nc) -
                                   expect) < 1e-13);
                }

    // pilot matrix is Hermitian and positive semidefinite
    CHECK((set.full_pilot - set.full_pilot.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<CMat> eig(set.full_pilot);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9 * eig.eigenvalues().maxCoeff());

    // memory guard refuses oversized requests
    CHECK_THROWS_AS(build_full_2d(cfg, pat, est, tol, {}, 16), std::length_error);
}

TEST_CASE("pilot matrices stay positive semidefinite under random priors") {
    const OfdmConfig cfg{120e3, 8.9e-6, 64, 16, 28e9};
    const DmrsPattern pat = dmrs_pattern(cfg, 8, 4);
    Rng rng(17);
    for (int rep = 0; rep < 15; ++rep) {
        const SensingEstimate est = random_estimate(rng, 1 + rep % 4);
        const ToleranceRecord tol = random_tolerance(rng, est);
        const CorrSet set = build_separable(cfg, pat, est, tol);
        Eigen::SelfAdjointEigenSolver<CMat> ef(set.freq_pilot);
        Eigen::SelfAdjointEigenSolver<CMat> et(set.time_pilot);
        CHECK(ef.eigenvalues().minCoeff() > -1e-9 * ef.eigenvalues().maxCoeff());
        CHECK(et.eigenvalues().minCoeff() > -1e-9 * et.eigenvalues().maxCoeff());
        // normalized trace identity
        CHECK(set.freq_pilot.trace().real() ==
              doctest::Approx(static_cast<double>(pat.n_pilot_sc)).epsilon(1e-12));
    }
}

TEST_CASE("default and uniform tolerances") {
    SensingEstimate est;
    est.delays = {100e-9, 105e-9};
    est.dopplers = {0.0, 2000.0};
    est.peak_powers = {1.0, 0.5};

    const Resolutions res{9.52e-9, 363.2};
    const ToleranceRecord tol = default_tolerance(est, res);
    CHECK(tol.c_freq[0] == doctest::Approx(9.52e-9));
    CHECK(tol.c_freq[1] == doctest::Approx(9.52e-9));
    CHECK(tol.c_time[0] == doctest::Approx(363.2));

    // overlapping delay intervals merge into one
    CHECK(tol.delay_set.intervals().size() == 1);
    CHECK(tol.doppler_set.intervals().size() == 2);

    CHECK_THROWS_AS(uniform_tolerance(est, 0.0, 100.0), std::invalid_argument);
}

TEST_CASE("update check semantics") {
    SensingEstimate est;
    est.delays = {100e-9, 300e-9};
    est.dopplers = {500.0, -1500.0};
    est.peak_powers = {1.0, 1.0};
    const double cf = 20e-9, ct = 200.0;
    const ToleranceRecord rec = uniform_tolerance(est, cf, ct);

    CHECK_FALSE(update_check(rec, est));

    SensingEstimate shifted = est;
    shifted.delays[0] += 2.0 * cf;
    CHECK(update_check(rec, shifted));

    SensingEstimate inside = est;
    inside.delays[0] += cf / 4.0;
    inside.dopplers[1] -= ct / 4.0;
    CHECK_FALSE(update_check(rec, inside));

    SensingEstimate fewer = est;
    fewer.delays.pop_back();
    fewer.dopplers.pop_back();
    fewer.peak_powers.pop_back();
    CHECK(update_check(rec, fewer));
}

TEST_CASE("coverage soundness: truth inside intervals never triggers") {
    Rng rng(18);
    for (int rep = 0; rep < 10; ++rep) {
        const SensingEstimate est = random_estimate(rng, 2);
        const ToleranceRecord tol = random_tolerance(rng, est);
        SensingEstimate truth = est;
        for (int l = 0; l < 2; ++l) {
            truth.delays[l] += rng.uniform(-0.5, 0.5) * tol.c_freq[l];
            truth.dopplers[l] += rng.uniform(-0.5, 0.5) * tol.c_time[l];
        }
        CHECK_FALSE(update_check(tol, truth));
    }
}

TEST_CASE("robust correlations") {
    const OfdmConfig cfg{120e3, 8.9e-6, 32, 8, 28e9};
    const DmrsPattern pat = dmrs_pattern(cfg, 4, 2);
    const double tau_max = 400e-9, fd_max = 3.73e3;
    const CorrSet set = robust_correlations(tau_max, fd_max, cfg, pat);

    CHECK(std::abs(set.freq_pilot(0, 0) - cxd(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(set.time_pilot(0, 0) - cxd(1.0, 0.0)) < 1e-14);

    // time correlation real and even in the lag
    for (int i = 0; i < pat.n_pilot_sym; ++i)
        for (int j = 0; j < pat.n_pilot_sym; ++j) {
            CHECK(std::abs(set.time_pilot(i, j).imag()) < 1e-14);
            CHECK(std::abs(set.time_pilot(i, j) - set.time_pilot(j, i)) < 1e-14);
        }

    // quadrature over the uniform supports
    for (int k : {1, 3, 7}) {
        const cxd rf_expect = integrate_c(
            [&](double tau) {
                return std::polar(1.0 / tau_max, -2.0 * M_PI * k * cfg.subcarrier_spacing * tau);
            },
            0.0, tau_max);
        const cxd rt_expect = integrate_c(
            [&](double fd) {
                return std::polar(1.0 / (2.0 * fd_max), 2.0 * M_PI * k * cfg.symbol_duration * fd);
            },
            -fd_max, fd_max);
        // lag k appears between grid row k and pilot 0
        CHECK(std::abs(set.freq_cross(k, 0) - rf_expect) < 1e-10);
        CHECK(std::abs(set.time_cross(k, 0) - rt_expect) < 1e-10);
    }
}

TEST_CASE("exact point-mass correlation matches a direct expectation") {
    const OfdmConfig cfg{120e3, 8.9e-6, 16, 8, 28e9};
    const DmrsPattern pat = dmrs_pattern(cfg, 4, 2);
    const std::vector<double> delays{120e-9, 310e-9};
    const std::vector<double> dopplers{800.0, -2300.0};
    const std::vector<double> powers{1.0, 0.4};

    const CMat r = exact_pilot_correlation(cfg, pat, delays, dopplers, powers);
    const double total = 1.4;
    for (int mc = 0; mc < pat.n_pilot_sym; ++mc)
        for (int nc = 0; nc < pat.n_pilot_sc; ++nc)
            for (int mr = 0; mr < pat.n_pilot_sym; ++mr)
                for (int nr = 0; nr < pat.n_pilot_sc; ++nr) {
                    cxd expect = 0.0;
                    for (size_t l = 0; l < delays.size(); ++l) {
                        const double dn = pat.pilot_subcarriers[nr] - pat.pilot_subcarriers[nc];
                        const double dm = pat.pilot_symbols[mr] - pat.pilot_symbols[mc];
                        expect += powers[l] / total *
                                  std::polar(1.0, -2.0 * M_PI * cfg.subcarrier_spacing *
                                                      delays[l] * dn) *
                                  std::polar(1.0, 2.0 * M_PI * cfg.symbol_duration * dopplers[l] *
                                                      dm);
                    }
                    CHECK(std::abs(r(mr * pat.n_pilot_sc + nr, mc * pat.n_pilot_sc + nc) -
                                   expect) < 1e-12);
                }

    // unit diagonal after power normalization
    CHECK(r.diagonal().real().minCoeff() == doctest::Approx(1.0).epsilon(1e-12));

    const FullCorr full = exact_full_correlation(cfg, pat, delays, dopplers, powers);
    CHECK(full.r_grid.rows() == 16 * 8);
    CHECK(full.r_grid.diagonal().real().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((full.r_pilot - r).cwiseAbs().maxCoeff() < 1e-13);
}
