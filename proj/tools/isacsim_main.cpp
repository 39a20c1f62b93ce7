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

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "isacsim/harness.hpp"

namespace {

std::filesystem::path output_dir() {
    if (const char* env = std::getenv("ISACSIM_OUTDIR")) return env;
    return ".";
}

isacsim::Scenario load_scenario(const std::string& file, const std::string& scale) {
    isacsim::Scenario scn = isacsim::scenario_from_file(file);
    if (!scale.empty()) isacsim::apply_scale(scn, scale);
    return scn;
}

std::ofstream open_output(const std::string& name, std::string* path_out) {
    const std::filesystem::path path = output_dir() / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    *path_out = path.string();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensing-assisted LMMSE channel estimation simulator for bistatic OFDM links"};
    app.require_subcommand(1);

    std::string scenario_file, scale, snr_override, preset_dump;
    int threads = 0;
    double rdmap_snr = 30.0;
    int rdmap_trial = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("scenario", scenario_file, "scenario JSON file")->required();
        cmd->add_option("--scale", scale, "grid scale override: small or full");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run the Monte-Carlo sweep and write CSV");
    add_common(sim);
    sim->add_option("--threads", threads, "worker threads (default: ISACSIM_THREADS or cores)");

    CLI::App* rdmap = app.add_subcommand("rdmap", "dump one trial's range-Doppler map as CSV");
    add_common(rdmap);
    rdmap->add_option("--snr", rdmap_snr, "SNR in dB (default 30)");
    rdmap->add_option("--trial", rdmap_trial, "trial index (default 0)");

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form NMSE predictions CSV");
    add_common(analyze);

    CLI::App* complexity =
        app.add_subcommand("complexity", "print the operation-count table for the scenario");
    add_common(complexity);

    CLI::App* presets = app.add_subcommand("presets", "list built-in scenarios");
    presets->add_option("--dump", preset_dump, "print the named preset as scenario JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const isacsim::Scenario scn = load_scenario(scenario_file, scale);
            const std::vector<isacsim::ResultRow> rows = isacsim::sweep(scn, threads);
            std::string path;
            std::ofstream out = open_output(scn.id + "_results.csv", &path);
            isacsim::write_results_csv(rows, out);
            std::cout << "wrote " << rows.size() << " rows to " << path << "\n";
        } else if (rdmap->parsed()) {
            const isacsim::Scenario scn = load_scenario(scenario_file, scale);
            const isacsim::RdMap map = isacsim::compute_rdmap(scn, rdmap_snr, rdmap_trial);
            std::string path;
            std::ofstream out = open_output(scn.id + "_rdmap.csv", &path);
            isacsim::write_rdmap_csv(map, out);
            std::cout << "wrote " << map.values.size() << " bins to " << path << "\n";
        } else if (analyze->parsed()) {
            const isacsim::Scenario scn = load_scenario(scenario_file, scale);
            const std::vector<isacsim::AnalysisRow> rows = isacsim::analyze(scn);
            std::string path;
            std::ofstream out = open_output(scn.id + "_analysis.csv", &path);
            isacsim::write_analysis_csv(rows, out);
            std::cout << "wrote " << rows.size() << " rows to " << path << "\n";
        } else if (complexity->parsed()) {
            const isacsim::Scenario scn = load_scenario(scenario_file, scale);
            const isacsim::DmrsPattern pat = scn.pattern();
            const isacsim::ComplexityBreakdown c = isacsim::complexity_model(
                scn.ofdm.num_subcarriers, scn.ofdm.num_symbols, pat.n_pilot_sc, pat.n_pilot_sym,
                scn.sensing.fft_size_freq, scn.sensing.fft_size_time);
            std::cout << "stage,complex_multiplications\n"
                      << "full2d_build," << c.full2d_build << "\n"
                      << "full2d_apply," << c.full2d_apply << "\n"
                      << "full2d_total," << c.full2d_total << "\n"
                      << "separable_paper_total," << c.separable_paper_total << "\n"
                      << "separable_build," << c.separable_build << "\n"
                      << "separable_apply," << c.separable_apply << "\n"
                      << "separable_total," << c.separable_total << "\n"
                      << "sensing_window," << c.sensing_window << "\n"
                      << "sensing_fft," << c.sensing_fft << "\n";
        } else if (presets->parsed()) {
            if (!preset_dump.empty()) {
                std::cout << isacsim::scenario_to_json_text(
                    isacsim::preset_scenario(preset_dump));
            } else {
                for (const std::string& name : isacsim::preset_names()) {
                    const isacsim::Scenario scn = isacsim::preset_scenario(name);
                    std::cout << name << ": " << scn.powers_db.size() << " paths, N="
                              << scn.ofdm.num_subcarriers << ", M=" << scn.ofdm.num_symbols
                              << ", S=" << scn.sensing.slots_combined
                              << " (use --dump " << name << " for the full JSON)\n";
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
