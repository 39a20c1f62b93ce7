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

#include "isacsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "isacsim/rng.hpp"

namespace isacsim {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kZfEpsilon = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void OfdmConfig::validate() const {
    require(subcarrier_spacing > 0.0, "subcarrier_spacing must be positive");
    require(symbol_duration > 0.0, "symbol_duration must be positive");
    require(num_subcarriers >= 2, "num_subcarriers must be >= 2");
    require(num_symbols >= 2, "num_symbols must be >= 2");
    require(carrier_freq > 0.0, "carrier_freq must be positive");
    // CP-inclusive duration cannot be shorter than the useful symbol
    require(symbol_duration * subcarrier_spacing >= 1.0 - 1e-12,
            "symbol_duration shorter than 1/subcarrier_spacing");
}

DmrsPattern dmrs_pattern(const OfdmConfig& cfg, int sc_interval, int sym_interval) {
    cfg.validate();
    require(sc_interval >= 1 && sym_interval >= 1, "pilot intervals must be >= 1");
    require(cfg.num_subcarriers % sc_interval == 0,
            "sc_interval does not divide the subcarrier count");
    require(cfg.num_symbols % sym_interval == 0,
            "sym_interval does not divide the symbol count");

    DmrsPattern pat;
    pat.sc_interval = sc_interval;
    pat.sym_interval = sym_interval;
    pat.n_pilot_sc = cfg.num_subcarriers / sc_interval;
    pat.n_pilot_sym = cfg.num_symbols / sym_interval;
    pat.pilot_subcarriers.resize(pat.n_pilot_sc);
    pat.pilot_symbols.resize(pat.n_pilot_sym);
    for (int n = 0; n < pat.n_pilot_sc; ++n) pat.pilot_subcarriers[n] = n * sc_interval;
    for (int m = 0; m < pat.n_pilot_sym; ++m) pat.pilot_symbols[m] = m * sym_interval;
    return pat;
}

bool alias_free(const PathSet& paths, const OfdmConfig& cfg, const DmrsPattern& pat) {
    double tau_max = 0.0, fd_max = 0.0;
    for (const Path& p : paths.paths) {
        tau_max = std::max(tau_max, std::abs(p.delay));
        fd_max = std::max(fd_max, std::abs(p.doppler));
    }
    return tau_max * pat.sc_interval * cfg.subcarrier_spacing < 0.5 &&
           fd_max * pat.sym_interval * cfg.symbol_duration < 0.5;
}

namespace {

// Per-path phase ramps; grid positions are 1-based in the exponents.
CVec freq_ramp(const OfdmConfig& cfg, double delay, int count) {
    CVec v(count);
    const double step = -kTwoPi * cfg.subcarrier_spacing * delay;
    for (int i = 0; i < count; ++i) v(i) = std::polar(1.0, step * (i + 1));
    return v;
}

CVec time_ramp(const OfdmConfig& cfg, double doppler, int count, long symbol_offset) {
    CVec v(count);
    const double step = kTwoPi * cfg.symbol_duration * doppler;
    for (int i = 0; i < count; ++i)
        v(i) = std::polar(1.0, step * static_cast<double>(symbol_offset + i + 1));
    return v;
}

}  // namespace

ResourceGrid gen_cfr(const OfdmConfig& cfg, const PathSet& paths, long symbol_offset) {
    cfg.validate();
    require(paths.count() >= 1, "path set is empty");
    CMat h = CMat::Zero(cfg.num_subcarriers, cfg.num_symbols);
    for (const Path& p : paths.paths) {
        require(p.delay >= 0.0, "path delay must be non-negative");
        h.noalias() += p.gain * freq_ramp(cfg, p.delay, cfg.num_subcarriers) *
                       time_ramp(cfg, p.doppler, cfg.num_symbols, symbol_offset).transpose();
    }
    return {std::move(h), GridRole::Cfr};
}

CMat gen_cfr_at_pilots(const OfdmConfig& cfg, const DmrsPattern& pat, const PathSet& paths,
                       long symbol_offset) {
    cfg.validate();
    require(paths.count() >= 1, "path set is empty");
    CMat h = CMat::Zero(pat.n_pilot_sc, pat.n_pilot_sym);
    for (const Path& p : paths.paths) {
        CVec f(pat.n_pilot_sc), t(pat.n_pilot_sym);
        const double fstep = -kTwoPi * cfg.subcarrier_spacing * p.delay;
        const double tstep = kTwoPi * cfg.symbol_duration * p.doppler;
        for (int i = 0; i < pat.n_pilot_sc; ++i)
            f(i) = std::polar(1.0, fstep * (pat.pilot_subcarriers[i] + 1));
        for (int j = 0; j < pat.n_pilot_sym; ++j)
            t(j) = std::polar(1.0,
                              tstep * static_cast<double>(symbol_offset + pat.pilot_symbols[j] + 1));
        h.noalias() += p.gain * f * t.transpose();
    }
    return h;
}

PathSet gen_random_paths(const std::vector<double>& relative_powers_db,
                         const std::vector<double>& delays,
                         const std::vector<double>& dopplers, uint64_t rng_seed) {
    const size_t count = relative_powers_db.size();
    require(count >= 1, "empty path list");
    require(delays.size() == count && dopplers.size() == count,
            "powers/delays/dopplers must have equal length");

    std::vector<double> var(count);
    double total = 0.0;
    for (size_t l = 0; l < count; ++l) {
        var[l] = std::pow(10.0, relative_powers_db[l] / 10.0);
        total += var[l];
    }

    Rng rng(rng_seed);
    PathSet set;
    set.paths.resize(count);
    for (size_t l = 0; l < count; ++l) {
        require(delays[l] >= 0.0, "path delay must be non-negative");
        set.paths[l].gain = std::sqrt(var[l] / total) * rng.cgauss();
        set.paths[l].delay = delays[l];
        set.paths[l].doppler = dopplers[l];
    }
    return set;
}

double NoiseSpec::variance() const {
    return enabled ? std::pow(10.0, -snr_db / 10.0) : 0.0;
}

ResourceGrid transmit(const ResourceGrid& x, const ResourceGrid& h, const NoiseSpec& noise,
                      uint64_t rng_seed) {
    require(x.data.rows() == h.data.rows() && x.data.cols() == h.data.cols(),
            "transmit: grid dimensions mismatch");
    ResourceGrid y{x.data.cwiseProduct(h.data), GridRole::RxSymbols};
    if (noise.enabled) {
        const double sigma = std::sqrt(noise.variance());
        Rng rng(rng_seed);
        for (Eigen::Index c = 0; c < y.data.cols(); ++c)
            for (Eigen::Index r = 0; r < y.data.rows(); ++r) y.data(r, c) += sigma * rng.cgauss();
    }
    return y;
}

namespace {

int qam_side(int order) {
    switch (order) {
        case 4: return 2;
        case 64: return 8;
        case 1024: return 32;
        default: throw std::invalid_argument("unsupported QAM order " + std::to_string(order));
    }
}

int gray_decode(int v) {
    int i = v;
    for (int shift = 1; shift < 16; shift <<= 1) i ^= i >> shift;
    return i;
}

// amplitude of axis index i for an L-level axis, before normalization
inline double axis_level(int i, int side) { return static_cast<double>(side - 1 - 2 * i); }

double qam_scale(int order) {
    const int side = qam_side(order);
    // E{|s|^2} = 2(L^2-1)/3 for unnormalized levels
    return std::sqrt(2.0 * (side * side - 1) / 3.0);
}

}  // namespace

int qam_bits_per_symbol(int order) {
    const int side = qam_side(order);
    int b = 0;
    while ((1 << b) < side) ++b;
    return 2 * b;
}

CVec qam_modulate(const std::vector<uint8_t>& bits, int order) {
    const int bps = qam_bits_per_symbol(order);
    const int half = bps / 2;
    if (bits.size() % static_cast<size_t>(bps) != 0)
        throw std::invalid_argument("bit count not divisible by bits-per-symbol");
    const double scale = qam_scale(order);

    CVec out(bits.size() / bps);
    for (Eigen::Index s = 0; s < out.size(); ++s) {
        int vi = 0, vq = 0;
        for (int b = 0; b < half; ++b) vi = (vi << 1) | bits[s * bps + b];
        for (int b = 0; b < half; ++b) vq = (vq << 1) | bits[s * bps + half + b];
        const int side = qam_side(order);
        out(s) = cxd(axis_level(gray_decode(vi), side), axis_level(gray_decode(vq), side)) / scale;
    }
    return out;
}

std::vector<uint8_t> qam_demodulate(const CVec& symbols, int order) {
    const int bps = qam_bits_per_symbol(order);
    const int half = bps / 2;
    const int side = qam_side(order);
    const double scale = qam_scale(order);

    std::vector<uint8_t> bits(symbols.size() * bps);
    for (Eigen::Index s = 0; s < symbols.size(); ++s) {
        auto nearest = [&](double v) {
            // axis_level is decreasing in the index; invert and clamp
            int i = static_cast<int>(std::lround((side - 1 - v * scale) / 2.0));
            return std::clamp(i, 0, side - 1);
        };
        const int ii = nearest(symbols(s).real());
        const int iq = nearest(symbols(s).imag());
        const int gi = ii ^ (ii >> 1);
        const int gq = iq ^ (iq >> 1);
        for (int b = 0; b < half; ++b) {
            bits[s * bps + b] = static_cast<uint8_t>((gi >> (half - 1 - b)) & 1);
            bits[s * bps + half + b] = static_cast<uint8_t>((gq >> (half - 1 - b)) & 1);
        }
    }
    return bits;
}

EqualizedGrid zf_equalize(const ResourceGrid& y, const ResourceGrid& h_hat) {
    require(y.data.rows() == h_hat.data.rows() && y.data.cols() == h_hat.data.cols(),
            "zf_equalize: grid dimensions mismatch");
    EqualizedGrid out;
    out.data.resize(y.data.rows(), y.data.cols());
    out.erased = BoolGrid::Constant(y.data.rows(), y.data.cols(), false);
    for (Eigen::Index c = 0; c < y.data.cols(); ++c) {
        for (Eigen::Index r = 0; r < y.data.rows(); ++r) {
            const cxd h = h_hat.data(r, c);
            if (std::abs(h) < kZfEpsilon) {
                out.data(r, c) = 0.0;
                out.erased(r, c) = true;
            } else {
                out.data(r, c) = y.data(r, c) / h;
            }
        }
    }
    return out;
}

}  // namespace isacsim
