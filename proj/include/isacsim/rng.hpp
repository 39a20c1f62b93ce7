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

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace isacsim {

// splitmix64 step, used to derive independent substream seeds
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapses (seed, ids...) into one substream seed. Trials, slots and
// purposes get their own streams so execution order never matters.
inline uint64_t mix_seed(std::initializer_list<uint64_t> ids) {
    uint64_t state = 0x6a09e667f3bcc908ULL;
    uint64_t h = 0;
    for (uint64_t id : ids) {
        state ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h = splitmix64(state);
    }
    return h;
}

// Deterministic generator: mt19937_64 raw words (standardized sequence)
// with explicit uniform/Box-Muller conversions, so results do not depend
// on the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // (0, 1] for the log argument
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // circularly-symmetric complex Gaussian, unit variance
    std::complex<double> cgauss() {
        const double re = gauss();
        const double im = gauss();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

    bool bit() { return (next_u64() >> 63) != 0; }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace isacsim
