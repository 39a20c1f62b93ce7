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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace isacsim {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// OFDM numerology. symbol_duration is CP-inclusive.
struct OfdmConfig {
    double subcarrier_spacing = 0.0;  // Hz
    double symbol_duration = 0.0;     // s
    int num_subcarriers = 0;          // N
    int num_symbols = 0;              // M, per slot
    double carrier_freq = 0.0;        // Hz

    double bandwidth() const { return subcarrier_spacing * num_subcarriers; }
    void validate() const;  // throws std::invalid_argument
};

/// Scattered DMRS placement. Indices are stored 0-based; phase conventions
/// across the library use the 1-based grid position (stored index + 1), so
/// pilot n sits on subcarrier (n-1)*sc_interval+1 in 1-based terms.
struct DmrsPattern {
    int sc_interval = 1;   // pilot subcarrier interval
    int sym_interval = 1;  // pilot symbol interval
    std::vector<int> pilot_subcarriers;  // 0-based, strictly increasing
    std::vector<int> pilot_symbols;      // 0-based, strictly increasing
    int n_pilot_sc = 0;   // N_p
    int n_pilot_sym = 0;  // M_p

    int pilot_density() const { return sc_interval * sym_interval; }
};

/// Builds the uniform DMRS pattern; intervals must divide the grid dims.
DmrsPattern dmrs_pattern(const OfdmConfig& cfg, int sc_interval, int sym_interval);

struct Path {
    cxd gain;
    double delay = 0.0;    // s, non-negative
    double doppler = 0.0;  // Hz
};

struct PathSet {
    std::vector<Path> paths;
    int count() const { return static_cast<int>(paths.size()); }
};

/// True iff pilot sampling cannot fold the delay/Doppler content:
/// tau_max*dsc*df < 1/2 and |fd|_max*dsym*To < 1/2. Advisory, not an error.
bool alias_free(const PathSet& paths, const OfdmConfig& cfg, const DmrsPattern& pat);

enum class GridRole { TxSymbols, Cfr, RxSymbols, Noise };

struct ResourceGrid {
    CMat data;  // N x M
    GridRole role = GridRole::Cfr;
};

/// Doubly-selective CFR: H(n,m) = sum_l a_l e^{-j2pi n df tau_l} e^{+j2pi m To fd_l}
/// with n,m counted from 1. symbol_offset shifts the slot in time; slot s of a
/// longer burst uses symbol_offset = s*M.
ResourceGrid gen_cfr(const OfdmConfig& cfg, const PathSet& paths, long symbol_offset = 0);

/// Same CFR sampled at pilot positions only (N_p x M_p).
CMat gen_cfr_at_pilots(const OfdmConfig& cfg, const DmrsPattern& pat, const PathSet& paths,
                       long symbol_offset = 0);

/// Gains drawn CN(0, v_l) with v_l = 10^(p_l/10) normalized to sum 1;
/// deterministic for a fixed seed.
PathSet gen_random_paths(const std::vector<double>& relative_powers_db,
                         const std::vector<double>& delays,
                         const std::vector<double>& dopplers, uint64_t rng_seed);

/// AWGN control. Disabled noise is an explicit state, not an infinite SNR.
struct NoiseSpec {
    bool enabled = true;
    double snr_db = 0.0;

    static NoiseSpec off() { return {false, 0.0}; }
    static NoiseSpec at(double snr_db) { return {true, snr_db}; }
    double variance() const;  // per-entry complex noise variance, 0 when disabled
};

/// Y = X .* H + W, W i.i.d. CN(0, sigma_w^2); deterministic for a fixed seed.
ResourceGrid transmit(const ResourceGrid& x, const ResourceGrid& h, const NoiseSpec& noise,
                      uint64_t rng_seed);

/// Gray-mapped square QAM, unit average energy. Supported orders: 4, 64, 1024.
/// Bit mapping (documented contract): a symbol carries log2(order) bits, the
/// first half selecting I and the second half Q; within an axis the MSB-first
/// bit group v picks level index i = gray_decode(v) and amplitude
/// (L-1-2i)/norm, L = sqrt(order). Bits 00 map to (1+j)/sqrt(2) for order 4.
int qam_bits_per_symbol(int order);
CVec qam_modulate(const std::vector<uint8_t>& bits, int order);
std::vector<uint8_t> qam_demodulate(const CVec& symbols, int order);

struct EqualizedGrid {
    CMat data;
    BoolGrid erased;  // entries where |h_hat| fell below epsilon
};

/// X_hat = Y ./ H_hat; sub-epsilon divisors are flagged, never propagated.
EqualizedGrid zf_equalize(const ResourceGrid& y, const ResourceGrid& h_hat);

}  // namespace isacsim
