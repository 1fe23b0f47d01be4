#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include "fourd/config.hpp"
#include "fourd/csv.hpp"
#include "fourd/impairments.hpp"
#include "fourd/optimizer.hpp"
#include "fourd/parallel.hpp"

namespace fourd {

namespace detail {

inline void ci_budget_check(Scale scale, double units, double cap, const char* what) {
    if (scale == Scale::ci && units > cap)
        throw std::runtime_error(std::string("compute budget exceeded for scale=ci: ") + what);
}

} // namespace detail

/// Table-2-style geometry summary for every format.
inline CsvTable run_table2(const RunConfig& cfg, Scale) {
    CsvTable t({"format", "msed", "n_d", "papr", "constant_modulus", "gray_at_msed", "dh1_list"});
    for (const auto& name : cfg.formats) {
        Constellation4D c = build_named(name);
        GeometryMetrics m = geometry_metrics(c);
        SedHistogram h = sed_histogram(c);
        std::string dh1;
        for (const auto& e : h.entries) {
            if (e.count_dh1 == 0) continue;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g:%zu;", e.d2, e.count_dh1);
            dh1 += buf;
        }
        t.new_row().add(name).add(m.msed).add(m.kissing).add(m.papr)
            .add(m.constant_modulus).add(m.gray_at_msed).add(dh1);
    }
    return t;
}

inline CsvTable run_gmi_vs_snr(const RunConfig& cfg, Scale scale) {
    detail::ci_budget_check(scale, double(cfg.gmi_n_samples) * double(cfg.snr_grid_db.size()),
                            5e6, "gmi-vs-snr samples");
    CsvTable t({"snr_db", "gmi", "mi", "std_err", "n_samples", "format", "seed"});
    for (const auto& name : cfg.formats) {
        Constellation4D c = build_named(name);
        auto pts = gmi_sweep(c, cfg.snr_grid_db, cfg.gmi_n_samples, cfg.seed);
        for (const auto& p : pts)
            t.new_row().add(p.snr_db).add(p.gmi).add(*p.mi).add(p.std_err)
                .add(p.n_samples).add(name).add(cfg.seed);
    }
    return t;
}

inline CsvTable run_ring_opt(const RunConfig& cfg, Scale scale) {
    detail::ci_budget_check(scale,
                            double(cfg.ring_opt_n_samples) * double(cfg.ring_opt_snrs_db.size()),
                            2e6, "ring-opt samples");
    CsvTable t({"format", "snr_db", "ring_ratio", "gmi", "std_err", "is_best"});
    for (double snr : cfg.ring_opt_snrs_db) {
        auto res = optimize_ring_ratio(
            [](double r) { return build_rs64(r, kRs64DefaultRotationRad); }, snr, cfg.ratio_lo,
            cfg.ratio_hi, cfg.ring_opt_tol, cfg.ring_opt_n_samples, cfg.seed);
        for (const auto& tr : res.trace) {
            const bool best = tr.params == res.best_params && tr.gmi == res.best_gmi;
            t.new_row().add("rs64").add(snr).add(tr.params[0]).add(tr.gmi).add(tr.std_err).add(best);
        }
    }
    return t;
}

inline CsvTable run_imbalance_grid(const RunConfig& cfg, Scale scale) {
    std::vector<double> devs, gains;
    for (double d = 0.0; d <= cfg.theta_dev_max_deg + 1e-9; d += cfg.theta_step_deg)
        devs.push_back(d);
    for (double g = 0.0; g <= cfg.gain_db_max + 1e-9; g += cfg.gain_step_db) gains.push_back(g);
    detail::ci_budget_check(scale,
                            double(devs.size() * gains.size()) * double(cfg.imb_n_samples) *
                                double(cfg.formats.size()),
                            2e8, "imbalance grid cells");
    CsvTable t({"format", "theta_dev_deg", "gain_db", "gmi"});
    for (const auto& name : cfg.formats) {
        Constellation4D c = build_named(name);
        auto rows = imbalance_heatmap(c, cfg.imb_snr_db, devs, gains, cfg.imb_n_samples, cfg.seed);
        for (const auto& r : rows)
            t.new_row().add(name).add(r.theta_dev_deg).add(r.gain_db).add(r.gmi);
    }
    return t;
}

inline CsvTable run_dac_sweep(const RunConfig& cfg, Scale scale) {
    detail::ci_budget_check(scale, double(cfg.dac_n_symbols) * double(cfg.dac_noise_draws) *
                                       double(cfg.dac_bits.size() + 1) * double(cfg.formats.size()),
                            4e8, "dac sweep work");
    CsvTable t({"format", "bits", "required_snr_db", "penalty_db"});
    for (const auto& name : cfg.formats) {
        Constellation4D c = build_named(name);
        DacConfig dc;
        auto base = dac_required_snr(c, dc, cfg.dac_target_gmi, cfg.dac_tol_db, cfg.dac_n_symbols,
                                     cfg.dac_noise_draws, cfg.seed, /*enable_quantizer=*/false);
        t.new_row().add(name).add(0u).add(base.snr_db).add(0.0);  // bits=0 row: unquantized baseline
        for (unsigned bits : cfg.dac_bits) {
            dc.bits = bits;
            auto rq = dac_required_snr(c, dc, cfg.dac_target_gmi, cfg.dac_tol_db, cfg.dac_n_symbols,
                                       cfg.dac_noise_draws, cfg.seed);
            t.new_row().add(name).add(bits).add(rq.snr_db).add(rq.snr_db - base.snr_db);
        }
    }
    return t;
}

namespace detail {

inline void fiber_budget(const RunConfig& cfg, Scale scale, std::size_t runs) {
    const double work = double(cfg.wdm.n_symbols) * cfg.wdm.samples_per_symbol *
                        double(cfg.link.n_spans) * cfg.link.n_waveplates_per_span *
                        cfg.link.steps_per_waveplate * double(runs);
    ci_budget_check(scale, work, 1.5e10, "fiber propagation work");
}

struct FiberRun {
    std::string format;
    double power_dbm;
    unsigned n_spans;
    std::uint64_t seed;
    RxResult rx;
};

/// One propagation per (format, power, seed); receives at every requested
/// span count via snapshots. Runs execute concurrently; output order is fixed
/// by the task list.
inline std::vector<FiberRun> fiber_matrix(const RunConfig& cfg,
                                          std::span<const unsigned> span_counts) {
    struct Task { std::string format; double power; std::uint64_t seed; };
    std::vector<Task> tasks;
    for (const auto& name : cfg.formats)
        for (double p : cfg.powers_dbm)
            for (unsigned s = 0; s < cfg.n_seeds; ++s)
                tasks.push_back({name, p, cfg.seed + s});

    std::vector<std::vector<FiberRun>> results(tasks.size());
    std::vector<double> margin_ref(cfg.formats.size());
    for (std::size_t f = 0; f < cfg.formats.size(); ++f) {
        Constellation4D c = build_named(cfg.formats[f]);
        margin_ref[f] = required_snr_for_ber(c, cfg.ber_threshold, cfg.margin_ref_n_samples,
                                             cfg.seed);
    }
    parallel_for(tasks.size(), [&](std::size_t ti) {
        const Task& task = tasks[ti];
        std::size_t f = 0;
        while (cfg.formats[f] != task.format) ++f;
        Constellation4D c = build_named(task.format);
        WdmConfig w = cfg.wdm;
        w.launch_power_dbm_per_channel = task.power;
        w.seed = task.seed;
        LinkConfig link = cfg.link;
        link.n_spans = span_counts.back();
        WdmSignal sig = wdm_transmit(c, w);
        auto prop = ssfm_propagate(sig.field, link, task.seed, span_counts);
        std::vector<FiberRun> rows;
        for (std::size_t k = 0; k < span_counts.size(); ++k) {
            LinkRecord sub;
            sub.beta2_ns2_km = prop.record.beta2_ns2_km;
            sub.total_length_km = link.span_length_km * span_counts[k];
            sub.spans.assign(prop.record.spans.begin(),
                             prop.record.spans.begin() + span_counts[k]);
            RxResult rx = receive_center_channel(prop.snapshots[k], sub, w, c,
                                                 sig.center_tx_indices,
                                                 cfg.phase_window_symbols, margin_ref[f]);
            rows.push_back({task.format, task.power, span_counts[k], task.seed, rx});
        }
        results[ti] = std::move(rows);
    });
    std::vector<FiberRun> flat;
    for (auto& r : results)
        for (auto& row : r) flat.push_back(row);
    return flat;
}

} // namespace detail

inline CsvTable run_fiber_power_sweep(const RunConfig& cfg, Scale scale) {
    detail::fiber_budget(cfg, scale, cfg.formats.size() * cfg.powers_dbm.size() * cfg.n_seeds);
    const unsigned spans[1] = {cfg.link.n_spans};
    auto rows = detail::fiber_matrix(cfg, spans);
    CsvTable t({"format", "baud", "n_channels", "n_spans", "power_dbm", "snr_elec_db", "gmi",
                "ber", "margin_db", "seed"});
    for (const auto& r : rows)
        t.new_row().add(r.format).add(cfg.wdm.baud_gbaud).add(cfg.wdm.n_channels)
            .add(r.n_spans).add(r.power_dbm).add(r.rx.snr_elec_db).add(r.rx.gmi)
            .add(r.rx.pre_fec_ber).add(r.rx.system_margin_db).add(r.seed);
    return t;
}

/// Per span count: sweep launch power and keep the per-format maximum GMI.
inline CsvTable run_fiber_distance_sweep(const RunConfig& cfg, Scale scale) {
    detail::fiber_budget(cfg, scale, cfg.formats.size() * cfg.powers_dbm.size() * cfg.n_seeds);
    auto rows = detail::fiber_matrix(cfg, cfg.span_counts);
    CsvTable t({"format", "baud", "n_channels", "n_spans", "power_dbm", "snr_elec_db", "gmi",
                "ber", "margin_db", "seed"});
    for (const auto& name : cfg.formats)
        for (unsigned ns : cfg.span_counts)
            for (unsigned s = 0; s < cfg.n_seeds; ++s) {
                const detail::FiberRun* best = nullptr;
                for (const auto& r : rows)
                    if (r.format == name && r.n_spans == ns && r.seed == cfg.seed + s &&
                        (!best || r.rx.gmi > best->rx.gmi))
                        best = &r;
                if (!best) continue;
                t.new_row().add(best->format).add(cfg.wdm.baud_gbaud).add(cfg.wdm.n_channels)
                    .add(best->n_spans).add(best->power_dbm).add(best->rx.snr_elec_db)
                    .add(best->rx.gmi).add(best->rx.pre_fec_ber)
                    .add(best->rx.system_margin_db).add(best->seed);
            }
    return t;
}

struct ExperimentOutput {
    std::string results_csv;
    std::string provenance_json;
};

/// Dispatch a named experiment; results are deterministic for a fixed
/// (config, seed). The provenance sidecar records the resolved config, seed,
/// code version and wall time.
inline ExperimentOutput run_experiment(const std::string& name, const RunConfig& cfg, Scale scale) {
    const auto t0 = std::chrono::steady_clock::now();
    CsvTable table({"x"});
    if (name == "table2") table = run_table2(cfg, scale);
    else if (name == "gmi-vs-snr") table = run_gmi_vs_snr(cfg, scale);
    else if (name == "ring-opt") table = run_ring_opt(cfg, scale);
    else if (name == "imbalance-grid") table = run_imbalance_grid(cfg, scale);
    else if (name == "dac-sweep") table = run_dac_sweep(cfg, scale);
    else if (name == "fiber-power-sweep") table = run_fiber_power_sweep(cfg, scale);
    else if (name == "fiber-distance-sweep") table = run_fiber_distance_sweep(cfg, scale);
    else throw std::invalid_argument("unknown experiment: " + name);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json prov;
    prov["experiment"] = name;
    prov["scale"] = to_string(scale);
    prov["seed"] = cfg.seed;
    prov["code_version"] = kVersion;
    prov["wall_time_s"] = wall;
    prov["config"] = config_to_json(cfg);
    return {table.to_string(), prov.dump(2) + "\n"};
}

inline void write_experiment_output(const ExperimentOutput& out, const std::string& out_dir,
                                    const std::string& experiment) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir + "/" + experiment + ".csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot write results CSV");
        os << out.results_csv;
    }
    {
        std::ofstream os(out_dir + "/" + experiment + ".provenance.json", std::ios::binary);
        os << out.provenance_json;
    }
}

} // namespace fourd
