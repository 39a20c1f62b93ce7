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

#include "isacsim/sensing.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace isacsim {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void SensingConfig::validate(const DmrsPattern& pat) const {
    require(fft_size_freq >= pat.n_pilot_sc, "fft_size_freq smaller than pilot subcarrier count");
    require(fft_size_time >= slots_combined * pat.n_pilot_sym,
            "fft_size_time smaller than combined pilot symbol count");
    require(slots_combined >= 1, "slots_combined must be >= 1");
    require(peak_rel_threshold_db < 0.0, "peak threshold must be below 0 dB");
    require(excl_freq_bins >= 0 && excl_time_bins >= 0, "exclusion radii must be >= 0");
}

CMat ls_pilots(const ResourceGrid& y, const ResourceGrid& x, const DmrsPattern& pat) {
    require(y.data.rows() == x.data.rows() && y.data.cols() == x.data.cols(),
            "ls_pilots: grid dimensions mismatch");
    CMat h(pat.n_pilot_sc, pat.n_pilot_sym);
    for (int m = 0; m < pat.n_pilot_sym; ++m) {
        const int col = pat.pilot_symbols[m];
        for (int n = 0; n < pat.n_pilot_sc; ++n) {
            const int row = pat.pilot_subcarriers[n];
            const cxd pilot = x.data(row, col);
            if (std::abs(pilot) == 0.0)
                throw std::invalid_argument("ls_pilots: zero pilot symbol on the grid");
            h(n, m) = y.data(row, col) / pilot;
        }
    }
    return h;
}

Eigen::VectorXd window_vector(WindowKind kind, int len) {
    require(len >= 1, "window length must be >= 1");
    Eigen::VectorXd w(len);
    switch (kind) {
        case WindowKind::Rectangular:
            w.setOnes();
            break;
        case WindowKind::Hamming:
            for (int i = 0; i < len; ++i) w(i) = 0.54 - 0.46 * std::cos(kTwoPi * i / len);
            break;
        case WindowKind::Hanning:
            for (int i = 0; i < len; ++i) w(i) = 0.5 - 0.5 * std::cos(kTwoPi * i / len);
            break;
    }
    return w;
}

CMat apply_window(const CMat& h_ls, WindowKind kind) {
    const Eigen::VectorXd a_f = window_vector(kind, static_cast<int>(h_ls.rows()));
    const Eigen::VectorXd a_t = window_vector(kind, static_cast<int>(h_ls.cols()));
    const double norm = a_f.squaredNorm() * a_t.squaredNorm();
    const Eigen::MatrixXd a = (a_f * a_t.transpose()) / norm;
    return a.cast<cxd>().cwiseProduct(h_ls);
}

RdMap periodogram(const CMat& h_win, const OfdmConfig& cfg, const DmrsPattern& pat,
                  const SensingConfig& cfgS) {
    const int n_per = cfgS.fft_size_freq;
    const int m_per = cfgS.fft_size_time;
    require(n_per >= h_win.rows() && m_per >= h_win.cols(), "FFT sizes smaller than input");

    // Row-major [k][l] buffer, zero padded.
    std::vector<fftw_complex> in(static_cast<size_t>(n_per) * m_per);
    std::vector<fftw_complex> out(static_cast<size_t>(n_per) * m_per);
    for (auto& c : in) c[0] = c[1] = 0.0;
    for (Eigen::Index k = 0; k < h_win.rows(); ++k) {
        for (Eigen::Index l = 0; l < h_win.cols(); ++l) {
            fftw_complex& c = in[static_cast<size_t>(k) * m_per + l];
            c[0] = h_win(k, l).real();
            c[1] = h_win(k, l).imag();
        }
    }

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_2d(n_per, m_per, in.data(), out.data(), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }

    // The map applies the inverse-sign transform along the subcarrier axis:
    // Per(n,m) picks the forward-FFT bin ((N_per - n) mod N_per, m).
    RdMap map;
    map.values.resize(n_per, m_per);
    const double scale = 1.0 / (static_cast<double>(cfg.num_subcarriers) * cfg.num_symbols);
    for (int n = 0; n < n_per; ++n) {
        const int src = (n_per - n) % n_per;
        for (int m = 0; m < m_per; ++m) {
            const fftw_complex& c = out[static_cast<size_t>(src) * m_per + m];
            map.values(n, m) = scale * (c[0] * c[0] + c[1] * c[1]);
        }
    }
    const BinWidths bins = bin_widths(cfg, pat, cfgS);
    map.bin_delay = bins.delay;
    map.bin_doppler = bins.doppler;
    return map;
}

SensingEstimate detect_peaks(const RdMap& map, const SensingConfig& cfgS) {
    const Eigen::Index rows = map.values.rows();
    const Eigen::Index cols = map.values.cols();
    require(rows > 0 && cols > 0, "detect_peaks: empty map");

    const double peak_max = map.values.maxCoeff();
    SensingEstimate est;
    if (!(peak_max > 0.0)) return est;  // silent map, nothing to detect

    const double threshold = peak_max * std::pow(10.0, cfgS.peak_rel_threshold_db / 10.0);
    const int excl_f = std::max(1, cfgS.excl_freq_bins);
    const int excl_t = std::max(1, cfgS.excl_time_bins);

    // candidate local maxima over the circular 8-neighborhood
    struct Candidate {
        double value;
        int n, m;
    };
    std::vector<Candidate> cands;
    for (Eigen::Index n = 0; n < rows; ++n) {
        for (Eigen::Index m = 0; m < cols; ++m) {
            const double v = map.values(n, m);
            if (v < threshold) continue;
            bool is_peak = true;
            for (int dn = -1; dn <= 1 && is_peak; ++dn) {
                for (int dm = -1; dm <= 1; ++dm) {
                    if (dn == 0 && dm == 0) continue;
                    const Eigen::Index nn = (n + dn + rows) % rows;
                    const Eigen::Index mm = (m + dm + cols) % cols;
                    if (map.values(nn, mm) > v) {
                        is_peak = false;
                        break;
                    }
                }
            }
            if (is_peak) cands.push_back({v, static_cast<int>(n), static_cast<int>(m)});
        }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

    auto circ_dist = [](int a, int b, int size) {
        const int d = std::abs(a - b);
        return std::min(d, size - d);
    };

    std::vector<Candidate> accepted;
    for (const Candidate& c : cands) {
        bool excluded = false;
        for (const Candidate& a : accepted) {
            if (circ_dist(c.n, a.n, static_cast<int>(rows)) <= excl_f &&
                circ_dist(c.m, a.m, static_cast<int>(cols)) <= excl_t) {
                excluded = true;
                break;
            }
        }
        if (!excluded) accepted.push_back(c);
    }

    for (const Candidate& a : accepted) {
        est.delays.push_back(a.n * map.bin_delay);
        const int m_wrapped = (a.m <= static_cast<int>(cols) / 2) ? a.m : a.m - static_cast<int>(cols);
        est.dopplers.push_back(m_wrapped * map.bin_doppler);
        est.peak_powers.push_back(a.value);
    }
    return est;
}

BinWidths bin_widths(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingConfig& cfgS) {
    return {1.0 / (cfg.subcarrier_spacing * cfgS.fft_size_freq * pat.sc_interval),
            1.0 / (cfg.symbol_duration * cfgS.fft_size_time * pat.sym_interval)};
}

Resolutions resolutions(const OfdmConfig& cfg, const SensingConfig& cfgS) {
    double factor = 1.0;
    switch (cfgS.window) {
        case WindowKind::Rectangular: factor = 1.0; break;
        case WindowKind::Hamming: factor = 1.81; break;
        case WindowKind::Hanning: factor = 2.00; break;
    }
    return {factor / (cfg.num_subcarriers * cfg.subcarrier_spacing),
            factor / (cfgS.slots_combined * cfg.num_symbols * cfg.symbol_duration)};
}

CrlbBounds crlb(const OfdmConfig& cfg, const DmrsPattern& pat, double noise_variance) {
    const double n_p = pat.n_pilot_sc;
    const double m_p = pat.n_pilot_sym;
    require(n_p >= 2 && m_p >= 2, "crlb needs at least 2 pilots per axis");
    const double common = 6.0 * noise_variance / (n_p * m_p);
    const double ftau = 1.0 / (kTwoPi * pat.sc_interval * cfg.subcarrier_spacing);
    const double ffd = 1.0 / (kTwoPi * pat.sym_interval * cfg.symbol_duration);
    return {common / (n_p * n_p - 1.0) * ftau * ftau, common / (m_p * m_p - 1.0) * ffd * ffd};
}

std::pair<int, int> default_peak_exclusion(const OfdmConfig& cfg, const DmrsPattern& pat,
                                           const SensingConfig& cfgS) {
    const BinWidths bins = bin_widths(cfg, pat, cfgS);
    const Resolutions res = resolutions(cfg, cfgS);
    return {std::max(1, static_cast<int>(std::ceil(res.delay / bins.delay))),
            std::max(1, static_cast<int>(std::ceil(res.doppler / bins.doppler)))};
}

void SensingWindow::push(CMat h_ls_slot) {
    if (!slots_.empty()) {
        require(h_ls_slot.rows() == slots_.front().rows() &&
                    h_ls_slot.cols() == slots_.front().cols(),
                "sensing window: slot dimensions changed");
    }
    slots_.push_back(std::move(h_ls_slot));
    while (static_cast<int>(slots_.size()) > capacity_) slots_.pop_front();
}

CMat SensingWindow::combined() const {
    require(!slots_.empty(), "sensing window is empty");
    const Eigen::Index rows = slots_.front().rows();
    const Eigen::Index per_slot = slots_.front().cols();
    CMat all(rows, per_slot * static_cast<Eigen::Index>(slots_.size()));
    Eigen::Index col = 0;
    for (const CMat& s : slots_) {
        all.middleCols(col, per_slot) = s;
        col += per_slot;
    }
    return all;
}

}  // namespace isacsim
