#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fourd/fiber.hpp"

namespace fourd {

inline constexpr const char* kVersion = "fourd 0.1.0";

enum class Scale { ci, desk, full };

inline Scale scale_from_string(const std::string& s) {
    if (s == "ci") return Scale::ci;
    if (s == "desk") return Scale::desk;
    if (s == "full") return Scale::full;
    throw std::invalid_argument("unknown scale: " + s + " (expected ci|desk|full)");
}

inline const char* to_string(Scale s) {
    switch (s) {
        case Scale::ci: return "ci";
        case Scale::desk: return "desk";
        default: return "full";
    }
}

/// Fully resolved experiment parameters. The scale profile supplies every
/// default; a config file overrides field by field; --seed overrides the
/// seed.
struct RunConfig {
    std::vector<std::string> formats = {"pdm8qamstar", "2a8psk", "64prs", "rs64"};
    std::uint64_t seed = 1;

    // gmi-vs-snr
    std::vector<double> snr_grid_db;
    std::size_t gmi_n_samples = 0;

    // ring-opt
    std::vector<double> ring_opt_snrs_db;
    double ratio_lo = 0.40, ratio_hi = 0.60;
    double ring_opt_tol = 1e-3;
    std::size_t ring_opt_n_samples = 0;

    // imbalance-grid
    double imb_snr_db = 8.0;
    double theta_dev_max_deg = 15.0;
    double gain_db_max = 1.7;
    double theta_step_deg = 1.0;
    double gain_step_db = 0.1;
    std::size_t imb_n_samples = 0;

    // dac-sweep
    std::vector<unsigned> dac_bits;
    double dac_target_gmi = 5.0;
    std::size_t dac_n_symbols = 0;
    unsigned dac_noise_draws = 4;
    double dac_tol_db = 0.01;

    // fiber
    LinkConfig link;
    WdmConfig wdm;
    std::vector<double> powers_dbm;
    std::vector<unsigned> span_counts;
    unsigned n_seeds = 1;
    double ber_threshold = 0.04;
    unsigned phase_window_symbols = 64;
    std::size_t margin_ref_n_samples = 200000;
};

inline RunConfig default_config(Scale scale) {
    RunConfig c;
    switch (scale) {
        case Scale::ci:
            c.snr_grid_db = {4, 6, 8, 10, 12};
            c.gmi_n_samples = 20000;
            c.ring_opt_snrs_db = {8};
            c.ring_opt_n_samples = 20000;
            c.theta_step_deg = 5.0;
            c.gain_step_db = 0.85;
            c.imb_n_samples = 10000;
            c.dac_bits = {8, 4, 3};
            c.dac_n_symbols = 4096;
            c.dac_noise_draws = 2;
            c.link.n_spans = 2;
            c.wdm.n_channels = 3;
            c.wdm.baud_gbaud = 32.0;
            c.wdm.spacing_ghz = 50.0;
            c.wdm.samples_per_symbol = 6;
            c.wdm.n_symbols = 2048;
            c.powers_dbm = {0.0, 2.0};
            c.span_counts = {1, 2};
            c.n_seeds = 1;
            c.margin_ref_n_samples = 50000;
            break;
        case Scale::desk:
            c.snr_grid_db = {4, 5, 6, 7, 8, 9, 10, 11, 12};
            c.gmi_n_samples = 1000000;
            c.ring_opt_snrs_db = {4, 6, 8, 10, 12};
            c.ring_opt_n_samples = 200000;
            c.imb_n_samples = 10000;
            c.dac_bits = {8, 7, 6, 5, 4, 3};
            c.dac_n_symbols = 16384;
            c.dac_noise_draws = 6;
            c.link.n_spans = 10;
            c.wdm.n_channels = 3;
            c.wdm.baud_gbaud = 32.0;
            c.wdm.spacing_ghz = 50.0;
            c.wdm.samples_per_symbol = 6;
            c.wdm.n_symbols = 16384;
            c.powers_dbm = {-2, -1, 0, 1, 2, 3};
            c.span_counts = {2, 4, 6, 8, 10};
            c.n_seeds = 3;
            break;
        case Scale::full:
            // the 11 x 90 GBd x 100 GHz experiment; documented, compute-bound
            c.snr_grid_db = {4, 4.5, 5, 5.5, 6, 6.5, 7, 7.5, 8, 8.5, 9, 9.5, 10, 11, 12};
            c.gmi_n_samples = 1000000;
            c.ring_opt_snrs_db = {4, 5, 6, 7, 8, 9, 10, 11, 12};
            c.ring_opt_n_samples = 1000000;
            c.imb_n_samples = 100000;
            c.dac_bits = {8, 7, 6, 5, 4, 3};
            c.dac_n_symbols = 65536;
            c.dac_noise_draws = 16;
            c.link.n_spans = 20;
            c.wdm.n_channels = 11;
            c.wdm.baud_gbaud = 90.0;
            c.wdm.spacing_ghz = 100.0;
            c.wdm.samples_per_symbol = 15;
            c.wdm.n_symbols = 65536;
            c.powers_dbm = {-1, 0, 1, 2, 3, 4, 5};
            c.span_counts = {20, 25, 30, 35, 40, 45, 47, 50};
            c.n_seeds = 3;
            break;
    }
    return c;
}

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

/// Field-by-field override of the scale defaults from a JSON config file with
/// one section per module. Unknown keys raise with their path.
inline RunConfig load_config(Scale scale, const std::string& path, std::uint64_t seed) {
    RunConfig c = default_config(scale);
    c.seed = seed;
    c.wdm.seed = seed;
    if (path.empty()) return c;
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    static const char* known_sections[] = {"formats", "gmi", "ring_opt", "imbalance",
                                           "dac", "link", "wdm", "fiber_sweep"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known_sections) ok = ok || it.key() == k;
        if (!ok) throw std::runtime_error("unknown config field: /" + it.key());
    }
    detail::maybe(j, "formats", c.formats);
    if (j.contains("gmi")) {
        const auto& g = j["gmi"];
        detail::maybe(g, "snr_grid_db", c.snr_grid_db);
        detail::maybe(g, "n_samples", c.gmi_n_samples);
    }
    if (j.contains("ring_opt")) {
        const auto& g = j["ring_opt"];
        detail::maybe(g, "snr_grid_db", c.ring_opt_snrs_db);
        detail::maybe(g, "ratio_lo", c.ratio_lo);
        detail::maybe(g, "ratio_hi", c.ratio_hi);
        detail::maybe(g, "tol", c.ring_opt_tol);
        detail::maybe(g, "n_samples", c.ring_opt_n_samples);
    }
    if (j.contains("imbalance")) {
        const auto& g = j["imbalance"];
        detail::maybe(g, "snr_db", c.imb_snr_db);
        detail::maybe(g, "theta_dev_max_deg", c.theta_dev_max_deg);
        detail::maybe(g, "gain_db_max", c.gain_db_max);
        detail::maybe(g, "theta_step_deg", c.theta_step_deg);
        detail::maybe(g, "gain_step_db", c.gain_step_db);
        detail::maybe(g, "n_samples", c.imb_n_samples);
    }
    if (j.contains("dac")) {
        const auto& g = j["dac"];
        detail::maybe(g, "bits", c.dac_bits);
        detail::maybe(g, "target_gmi", c.dac_target_gmi);
        detail::maybe(g, "n_symbols", c.dac_n_symbols);
        detail::maybe(g, "noise_draws", c.dac_noise_draws);
        detail::maybe(g, "tol_db", c.dac_tol_db);
    }
    if (j.contains("link")) {
        const auto& g = j["link"];
        detail::maybe(g, "span_length_km", c.link.span_length_km);
        detail::maybe(g, "n_spans", c.link.n_spans);
        detail::maybe(g, "dispersion_ps_nm_km", c.link.dispersion_ps_nm_km);
        detail::maybe(g, "gamma_w_km", c.link.gamma_w_km);
        detail::maybe(g, "alpha_db_km", c.link.alpha_db_km);
        detail::maybe(g, "pmd_coeff_ps_sqrt_km", c.link.pmd_coeff_ps_sqrt_km);
        detail::maybe(g, "n_waveplates_per_span", c.link.n_waveplates_per_span);
        detail::maybe(g, "edfa_nf_db", c.link.edfa_nf_db);
        detail::maybe(g, "center_wavelength_nm", c.link.center_wavelength_nm);
        detail::maybe(g, "steps_per_waveplate", c.link.steps_per_waveplate);
        detail::maybe(g, "ase_enabled", c.link.ase_enabled);
        detail::maybe(g, "gaussian_dgd", c.link.gaussian_dgd);
    }
    if (j.contains("wdm")) {
        const auto& g = j["wdm"];
        detail::maybe(g, "n_channels", c.wdm.n_channels);
        detail::maybe(g, "baud_gbaud", c.wdm.baud_gbaud);
        detail::maybe(g, "spacing_ghz", c.wdm.spacing_ghz);
        detail::maybe(g, "rolloff", c.wdm.rolloff);
        detail::maybe(g, "launch_power_dbm_per_channel", c.wdm.launch_power_dbm_per_channel);
        detail::maybe(g, "samples_per_symbol", c.wdm.samples_per_symbol);
        detail::maybe(g, "n_symbols", c.wdm.n_symbols);
        detail::maybe(g, "rrc_span_symbols", c.wdm.rrc_span_symbols);
    }
    if (j.contains("fiber_sweep")) {
        const auto& g = j["fiber_sweep"];
        detail::maybe(g, "powers_dbm", c.powers_dbm);
        detail::maybe(g, "span_counts", c.span_counts);
        detail::maybe(g, "n_seeds", c.n_seeds);
        detail::maybe(g, "ber_threshold", c.ber_threshold);
        detail::maybe(g, "phase_window_symbols", c.phase_window_symbols);
        detail::maybe(g, "margin_ref_n_samples", c.margin_ref_n_samples);
    }
    return c;
}

/// JSON image of the resolved configuration (for the provenance sidecar).
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["formats"] = c.formats;
    j["seed"] = c.seed;
    j["gmi"] = {{"snr_grid_db", c.snr_grid_db}, {"n_samples", c.gmi_n_samples}};
    j["ring_opt"] = {{"snr_grid_db", c.ring_opt_snrs_db}, {"ratio_lo", c.ratio_lo},
                     {"ratio_hi", c.ratio_hi}, {"tol", c.ring_opt_tol},
                     {"n_samples", c.ring_opt_n_samples}};
    j["imbalance"] = {{"snr_db", c.imb_snr_db}, {"theta_dev_max_deg", c.theta_dev_max_deg},
                      {"gain_db_max", c.gain_db_max}, {"theta_step_deg", c.theta_step_deg},
                      {"gain_step_db", c.gain_step_db}, {"n_samples", c.imb_n_samples}};
    j["dac"] = {{"bits", c.dac_bits}, {"target_gmi", c.dac_target_gmi},
                {"n_symbols", c.dac_n_symbols}, {"noise_draws", c.dac_noise_draws},
                {"tol_db", c.dac_tol_db}};
    j["link"] = {{"span_length_km", c.link.span_length_km}, {"n_spans", c.link.n_spans},
                 {"dispersion_ps_nm_km", c.link.dispersion_ps_nm_km},
                 {"gamma_w_km", c.link.gamma_w_km}, {"alpha_db_km", c.link.alpha_db_km},
                 {"pmd_coeff_ps_sqrt_km", c.link.pmd_coeff_ps_sqrt_km},
                 {"n_waveplates_per_span", c.link.n_waveplates_per_span},
                 {"edfa_nf_db", c.link.edfa_nf_db},
                 {"center_wavelength_nm", c.link.center_wavelength_nm},
                 {"steps_per_waveplate", c.link.steps_per_waveplate},
                 {"ase_enabled", c.link.ase_enabled}, {"gaussian_dgd", c.link.gaussian_dgd}};
    j["wdm"] = {{"n_channels", c.wdm.n_channels}, {"baud_gbaud", c.wdm.baud_gbaud},
                {"spacing_ghz", c.wdm.spacing_ghz}, {"rolloff", c.wdm.rolloff},
                {"launch_power_dbm_per_channel", c.wdm.launch_power_dbm_per_channel},
                {"samples_per_symbol", c.wdm.samples_per_symbol},
                {"n_symbols", c.wdm.n_symbols}, {"rrc_span_symbols", c.wdm.rrc_span_symbols}};
    j["fiber_sweep"] = {{"powers_dbm", c.powers_dbm}, {"span_counts", c.span_counts},
                        {"n_seeds", c.n_seeds}, {"ber_threshold", c.ber_threshold},
                        {"phase_window_symbols", c.phase_window_symbols},
                        {"margin_ref_n_samples", c.margin_ref_n_samples}};
    return j;
}

} // namespace fourd
