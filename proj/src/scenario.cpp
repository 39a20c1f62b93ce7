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

#include "isacsim/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace isacsim {

using nlohmann::json;

namespace {

void fail(const std::string& msg) { throw std::invalid_argument("scenario: " + msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& ctx) {
    if (!obj.is_object()) fail(ctx + " must be an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) fail("unknown key '" + item.key() + "' in " + ctx);
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key)) fail("missing key '" + std::string(key) + "' in " + ctx);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail("key '" + std::string(key) + "' in " + ctx + " has the wrong type");
    }
    return T{};
}

template <typename T>
T get_optional(const json& obj, const char* key, const std::string& ctx, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail("key '" + std::string(key) + "' in " + ctx + " has the wrong type");
    }
    return fallback;
}

WindowKind window_from_name(const std::string& name) {
    if (name == "rectangular") return WindowKind::Rectangular;
    if (name == "hamming") return WindowKind::Hamming;
    if (name == "hanning") return WindowKind::Hanning;
    fail("unknown window '" + name + "'");
    return WindowKind::Hamming;
}

std::string window_name(WindowKind kind) {
    switch (kind) {
        case WindowKind::Rectangular: return "rectangular";
        case WindowKind::Hamming: return "hamming";
        case WindowKind::Hanning: return "hanning";
    }
    return "hamming";
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "proposed_separable") return EstimatorKind::ProposedSeparable;
    if (name == "proposed_full2d") return EstimatorKind::ProposedFull2d;
    if (name == "ls_spline") return EstimatorKind::LsSpline;
    if (name == "robust") return EstimatorKind::RobustLmmse;
    if (name == "parametric") return EstimatorKind::Parametric;
    if (name == "perfect") return EstimatorKind::PerfectCfr;
    fail("unknown estimator type '" + name + "'");
    return EstimatorKind::ProposedSeparable;
}

void fill_paths_from_preset(Scenario& scn, const std::string& preset) {
    if (preset == "three_path") {
        scn.powers_db = {0.0, -5.0, -8.0};
        scn.delays = {100e-9, 200e-9, 400e-9};
        scn.dopplers = {0.0, -1.87e3, 3.73e3};
    } else if (preset == "seven_path") {
        scn.powers_db = {0.0, -1.2, -2.2, -3.0, -3.2, -3.4, -4.0};
        scn.delays = {0.0, 251e-9, 90e-9, 311e-9, 176e-9, 312e-9, 181e-9};
        scn.dopplers = {0.0, 1.9e3, -3.7e3, 4.7e3, -5.6e3, 4.5e3, -1.9e3};
    } else {
        fail("unknown path preset '" + preset + "'");
    }
}

}  // namespace

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::ProposedSeparable: return "proposed_separable";
        case EstimatorKind::ProposedFull2d: return "proposed_full2d";
        case EstimatorKind::LsSpline: return "ls_spline";
        case EstimatorKind::RobustLmmse: return "robust";
        case EstimatorKind::Parametric: return "parametric";
        case EstimatorKind::PerfectCfr: return "perfect";
    }
    return "unknown";
}

DmrsPattern Scenario::pattern() const {
    return dmrs_pattern(ofdm, dmrs_sc_interval, dmrs_sym_interval);
}

SensingConfig Scenario::resolved_sensing() const {
    SensingConfig out = sensing;
    const DmrsPattern pat = pattern();
    if (out.excl_freq_bins == 0 || out.excl_time_bins == 0) {
        const auto [ef, et] = default_peak_exclusion(ofdm, pat, out);
        if (out.excl_freq_bins == 0) out.excl_freq_bins = ef;
        if (out.excl_time_bins == 0) out.excl_time_bins = et;
    }
    out.validate(pat);
    return out;
}

std::vector<double> Scenario::powers_linear() const {
    std::vector<double> out(powers_db.size());
    for (size_t i = 0; i < powers_db.size(); ++i) out[i] = std::pow(10.0, powers_db[i] / 10.0);
    return out;
}

void Scenario::validate() const {
    ofdm.validate();
    const DmrsPattern pat = pattern();
    sensing.validate(pat);
    if (powers_db.empty() || powers_db.size() != delays.size() ||
        powers_db.size() != dopplers.size())
        fail("path powers/delays/dopplers must be non-empty and equally sized");
    if (estimators.empty() && snr_grid_db.empty()) return;  // header-only sweeps allowed
    if (trials < 1) fail("trials must be >= 1");
    if (slots < 1) fail("slots must be >= 1");
    if (modulation_order != 0) qam_bits_per_symbol(modulation_order);
    if (sigma_hat_sq <= 0.0) fail("sigma_hat_sq must be positive");
}

Scenario scenario_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    check_keys(doc,
               {"name", "ofdm", "dmrs", "sensing", "paths", "estimators", "snr_grid_db", "trials",
                "seed", "slots", "modulation_order", "injected_sensing_error",
                "tolerance_override", "sigma_hat_sq"},
               "scenario");

    Scenario scn;
    scn.id = get_optional<std::string>(doc, "name", "scenario", "scenario");

    const json& ofdm = doc.at("ofdm");
    check_keys(ofdm,
               {"subcarrier_spacing_hz", "symbol_duration_s", "num_subcarriers", "num_symbols",
                "carrier_freq_hz"},
               "ofdm");
    scn.ofdm.subcarrier_spacing = get_required<double>(ofdm, "subcarrier_spacing_hz", "ofdm");
    scn.ofdm.symbol_duration = get_required<double>(ofdm, "symbol_duration_s", "ofdm");
    scn.ofdm.num_subcarriers = get_required<int>(ofdm, "num_subcarriers", "ofdm");
    scn.ofdm.num_symbols = get_required<int>(ofdm, "num_symbols", "ofdm");
    scn.ofdm.carrier_freq = get_required<double>(ofdm, "carrier_freq_hz", "ofdm");

    const json& dmrs = doc.at("dmrs");
    check_keys(dmrs, {"sc_interval", "sym_interval"}, "dmrs");
    scn.dmrs_sc_interval = get_required<int>(dmrs, "sc_interval", "dmrs");
    scn.dmrs_sym_interval = get_required<int>(dmrs, "sym_interval", "dmrs");

    if (doc.contains("sensing")) {
        const json& sn = doc.at("sensing");
        check_keys(sn,
                   {"fft_size_freq", "fft_size_time", "slots_combined", "window",
                    "peak_rel_threshold_db", "peak_exclusion_freq_bins",
                    "peak_exclusion_time_bins"},
                   "sensing");
        scn.sensing.fft_size_freq = get_required<int>(sn, "fft_size_freq", "sensing");
        scn.sensing.fft_size_time = get_required<int>(sn, "fft_size_time", "sensing");
        scn.sensing.slots_combined = get_optional<int>(sn, "slots_combined", "sensing", 1);
        scn.sensing.window =
            window_from_name(get_optional<std::string>(sn, "window", "sensing", "hamming"));
        scn.sensing.peak_rel_threshold_db =
            get_optional<double>(sn, "peak_rel_threshold_db", "sensing", -25.0);
        scn.sensing.excl_freq_bins =
            get_optional<int>(sn, "peak_exclusion_freq_bins", "sensing", 0);
        scn.sensing.excl_time_bins =
            get_optional<int>(sn, "peak_exclusion_time_bins", "sensing", 0);
    }

    const json& paths = doc.at("paths");
    if (paths.contains("preset")) {
        check_keys(paths, {"preset"}, "paths");
        fill_paths_from_preset(scn, get_required<std::string>(paths, "preset", "paths"));
    } else {
        check_keys(paths, {"powers_db", "delays_s", "dopplers_hz"}, "paths");
        scn.powers_db = get_required<std::vector<double>>(paths, "powers_db", "paths");
        scn.delays = get_required<std::vector<double>>(paths, "delays_s", "paths");
        scn.dopplers = get_required<std::vector<double>>(paths, "dopplers_hz", "paths");
    }

    if (doc.contains("estimators")) {
        if (!doc.at("estimators").is_array()) fail("estimators must be an array");
        for (const json& e : doc.at("estimators")) {
            check_keys(e,
                       {"type", "delay_max_s", "doppler_max_hz", "sigma_hat_sq", "perfect_gain"},
                       "estimator");
            EstimatorSpec spec;
            spec.kind = estimator_from_name(get_required<std::string>(e, "type", "estimator"));
            if (e.contains("delay_max_s"))
                spec.delay_max = get_required<double>(e, "delay_max_s", "estimator");
            if (e.contains("doppler_max_hz"))
                spec.doppler_max = get_required<double>(e, "doppler_max_hz", "estimator");
            if (e.contains("sigma_hat_sq"))
                spec.sigma_hat_sq = get_required<double>(e, "sigma_hat_sq", "estimator");
            spec.perfect_gain = get_optional<bool>(e, "perfect_gain", "estimator", false);
            scn.estimators.push_back(spec);
        }
    }

    scn.snr_grid_db = get_optional<std::vector<double>>(doc, "snr_grid_db", "scenario", {});
    scn.trials = get_optional<int>(doc, "trials", "scenario", 1);
    scn.seed = get_optional<uint64_t>(doc, "seed", "scenario", 1);
    scn.slots = get_optional<int>(doc, "slots", "scenario", 2);
    scn.modulation_order = get_optional<int>(doc, "modulation_order", "scenario", 0);
    scn.sigma_hat_sq = get_optional<double>(doc, "sigma_hat_sq", "scenario", kDefaultSigmaHatSq);

    if (doc.contains("injected_sensing_error")) {
        const json& ie = doc.at("injected_sensing_error");
        check_keys(ie, {"delay_bins", "doppler_bins"}, "injected_sensing_error");
        scn.injected_error = InjectedError{
            get_optional<double>(ie, "delay_bins", "injected_sensing_error", 0.0),
            get_optional<double>(ie, "doppler_bins", "injected_sensing_error", 0.0)};
    }
    if (doc.contains("tolerance_override")) {
        const json& to = doc.at("tolerance_override");
        check_keys(to, {"delay_bins", "doppler_bins"}, "tolerance_override");
        scn.tolerance_override =
            ToleranceOverride{get_required<double>(to, "delay_bins", "tolerance_override"),
                              get_required<double>(to, "doppler_bins", "tolerance_override")};
    }

    scn.validate();
    return scn;
}

Scenario scenario_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

std::string scenario_to_json_text(const Scenario& scn) {
    json doc;
    doc["name"] = scn.id;
    doc["ofdm"] = {{"subcarrier_spacing_hz", scn.ofdm.subcarrier_spacing},
                   {"symbol_duration_s", scn.ofdm.symbol_duration},
                   {"num_subcarriers", scn.ofdm.num_subcarriers},
                   {"num_symbols", scn.ofdm.num_symbols},
                   {"carrier_freq_hz", scn.ofdm.carrier_freq}};
    doc["dmrs"] = {{"sc_interval", scn.dmrs_sc_interval}, {"sym_interval", scn.dmrs_sym_interval}};
    doc["sensing"] = {{"fft_size_freq", scn.sensing.fft_size_freq},
                      {"fft_size_time", scn.sensing.fft_size_time},
                      {"slots_combined", scn.sensing.slots_combined},
                      {"window", window_name(scn.sensing.window)},
                      {"peak_rel_threshold_db", scn.sensing.peak_rel_threshold_db},
                      {"peak_exclusion_freq_bins", scn.sensing.excl_freq_bins},
                      {"peak_exclusion_time_bins", scn.sensing.excl_time_bins}};
    doc["paths"] = {{"powers_db", scn.powers_db},
                    {"delays_s", scn.delays},
                    {"dopplers_hz", scn.dopplers}};
    doc["estimators"] = json::array();
    for (const EstimatorSpec& e : scn.estimators) {
        json je = {{"type", estimator_name(e.kind)}};
        if (e.delay_max) je["delay_max_s"] = *e.delay_max;
        if (e.doppler_max) je["doppler_max_hz"] = *e.doppler_max;
        if (e.sigma_hat_sq) je["sigma_hat_sq"] = *e.sigma_hat_sq;
        if (e.perfect_gain) je["perfect_gain"] = true;
        doc["estimators"].push_back(je);
    }
    doc["snr_grid_db"] = scn.snr_grid_db;
    doc["trials"] = scn.trials;
    doc["seed"] = scn.seed;
    doc["slots"] = scn.slots;
    if (scn.modulation_order != 0) doc["modulation_order"] = scn.modulation_order;
    if (scn.injected_error)
        doc["injected_sensing_error"] = {{"delay_bins", scn.injected_error->delay_bins},
                                         {"doppler_bins", scn.injected_error->doppler_bins}};
    if (scn.tolerance_override)
        doc["tolerance_override"] = {{"delay_bins", scn.tolerance_override->delay_bins},
                                     {"doppler_bins", scn.tolerance_override->doppler_bins}};
    doc["sigma_hat_sq"] = scn.sigma_hat_sq;
    return doc.dump(2) + "\n";
}

std::vector<std::string> preset_names() { return {"three_path", "seven_path"}; }

Scenario preset_scenario(const std::string& name) {
    Scenario scn;
    scn.id = name;
    scn.ofdm = {120e3, 8.9e-6, 1584, 56, 28e9};
    scn.dmrs_sc_interval = 8;
    scn.dmrs_sym_interval = 8;
    scn.sensing.fft_size_freq = 1024;
    scn.sensing.fft_size_time = 1024;
    scn.sensing.slots_combined = 10;
    scn.sensing.window = WindowKind::Hamming;
    fill_paths_from_preset(scn, name);
    scn.estimators = {{EstimatorKind::ProposedSeparable, {}, {}, {}, false},
                      {EstimatorKind::ProposedFull2d, {}, {}, {}, false},
                      {EstimatorKind::RobustLmmse, {}, {}, {}, false},
                      {EstimatorKind::LsSpline, {}, {}, {}, false},
                      {EstimatorKind::Parametric, {}, {}, {}, false},
                      {EstimatorKind::PerfectCfr, {}, {}, {}, false}};
    scn.snr_grid_db = {0, 10, 20, 30, 40};
    scn.trials = 50;
    scn.seed = 20260810;
    scn.slots = 2;
    return scn;
}

void apply_scale(Scenario& scn, const std::string& scale) {
    if (scale == "small") {
        scn.ofdm.num_subcarriers = 256;
        scn.sensing.fft_size_freq = 256;
        scn.sensing.fft_size_time = 256;
    } else if (scale == "full") {
        scn.ofdm.num_subcarriers = 1584;
        scn.sensing.fft_size_freq = 1024;
        scn.sensing.fft_size_time = 1024;
    } else {
        fail("unknown scale '" + scale + "' (use small or full)");
    }
    scn.validate();
}

}  // namespace isacsim
