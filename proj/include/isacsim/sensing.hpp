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

#include <deque>
#include <utility>

#include "isacsim/grid.hpp"

namespace isacsim {

enum class WindowKind { Rectangular, Hamming, Hanning };

struct SensingConfig {
    int fft_size_freq = 256;  // N_Per, >= N_p
    int fft_size_time = 256;  // M_Per, >= S*M_p
    int slots_combined = 1;   // S
    WindowKind window = WindowKind::Hamming;
    double peak_rel_threshold_db = -25.0;  // relative to the strongest peak
    int excl_freq_bins = 0;                // 0 selects the resolution-sized default
    int excl_time_bins = 0;

    void validate(const DmrsPattern& pat) const;
};

/// Range-Doppler map: non-negative power per (delay bin, Doppler bin).
struct RdMap {
    Eigen::MatrixXd values;    // N_Per x M_Per
    double bin_delay = 0.0;    // s per delay bin
    double bin_doppler = 0.0;  // Hz per Doppler bin
};

struct SensingEstimate {
    std::vector<double> delays;       // s, in [0, 1/(df*dsc))
    std::vector<double> dopplers;     // Hz, in (-1/(2*To*dsym), +1/(2*To*dsym)]
    std::vector<double> peak_powers;  // raw map values; unused downstream

    int num_paths() const { return static_cast<int>(delays.size()); }
};

/// Element-wise LS at DMRS positions: H_ls(n,m) = Y(p(n),q(m)) / X(p(n),q(m)).
CMat ls_pilots(const ResourceGrid& y, const ResourceGrid& x, const DmrsPattern& pat);

/// Periodic (DFT-even) window values. Hamming uses 0.54 - 0.46 cos, Hanning
/// 0.5 - 0.5 cos.
Eigen::VectorXd window_vector(WindowKind kind, int len);

/// A .* h_ls with A = a_F a_T^T / (|a_F|^2 |a_T|^2).
CMat apply_window(const CMat& h_ls, WindowKind kind);

/// Per(n,m) = |IDFT_rows(DFT_cols(h))|^2 / (N*M): forward transform along the
/// symbol axis, inverse-sign transform along the subcarrier axis, zero padded
/// to the configured sizes.
RdMap periodogram(const CMat& h_win, const OfdmConfig& cfg, const DmrsPattern& pat,
                  const SensingConfig& cfgS);

/// Local maxima within the relative threshold, greedily accepted strongest
/// first with a circular exclusion neighborhood. Doppler bins above M_Per/2
/// wrap to negative frequencies.
SensingEstimate detect_peaks(const RdMap& map, const SensingConfig& cfgS);

struct BinWidths {
    double delay;    // 1/(df*NPer*dsc)
    double doppler;  // 1/(To*MPer*dsym)
};
BinWidths bin_widths(const OfdmConfig& cfg, const DmrsPattern& pat, const SensingConfig& cfgS);

/// 6-dB main-lobe resolution of the windowed transform. Window factors:
/// rectangular 1.0 (fundamental), Hamming 1.81, Hanning 2.00.
struct Resolutions {
    double delay;    // factor/(N*df)
    double doppler;  // factor/(S*M*To)
};
Resolutions resolutions(const OfdmConfig& cfg, const SensingConfig& cfgS);

/// Averaged CRLBs for delay/Doppler variance at the given noise power.
struct CrlbBounds {
    double var_delay;    // s^2
    double var_doppler;  // Hz^2
};
CrlbBounds crlb(const OfdmConfig& cfg, const DmrsPattern& pat, double noise_variance);

/// ceil(resolution / bin width) per axis, at least 1.
std::pair<int, int> default_peak_exclusion(const OfdmConfig& cfg, const DmrsPattern& pat,
                                           const SensingConfig& cfgS);

/// Rolling buffer of per-slot pilot LS matrices; slots are concatenated along
/// the symbol axis (pilot spacing stays uniform across slot boundaries).
class SensingWindow {
  public:
    explicit SensingWindow(int slots_combined) : capacity_(slots_combined) {}

    void push(CMat h_ls_slot);
    bool full() const { return static_cast<int>(slots_.size()) == capacity_; }
    int size() const { return static_cast<int>(slots_.size()); }
    CMat combined() const;  // N_p x (size()*M_p)

  private:
    int capacity_;
    std::deque<CMat> slots_;
};

}  // namespace isacsim
