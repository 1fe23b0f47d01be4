#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fourd/constellation.hpp"
#include "fourd/infometrics.hpp"
#include "fourd/parallel.hpp"
#include "fourd/waveform.hpp"

namespace fourd {

/// I-Q modulator gain/quadrature settings, one pair per polarization.
/// Nominal: theta = 90 degrees, alpha = 0 dB. The gain disparity acts on the
/// quadrature rail as a field factor alpha = 10^(-db/20) <= 1.
struct MzmImbalance {
    double theta_x_deg = 90.0;
    double theta_y_deg = 90.0;
    double alpha_x_db = 0.0;
    double alpha_y_db = 0.0;
};

/// E = I + alpha * exp(j theta) * Q per polarization; labels unchanged, no
/// re-normalization (the distortion is a transmitter effect).
inline Constellation4D apply_mzm(const Constellation4D& c, const MzmImbalance& imb) {
    Constellation4D out = c;
    const double ax = std::pow(10.0, -imb.alpha_x_db / 20.0);
    const double ay = std::pow(10.0, -imb.alpha_y_db / 20.0);
    const cdouble ex = ax * cdouble{std::cos(imb.theta_x_deg * kPi / 180.0),
                                    std::sin(imb.theta_x_deg * kPi / 180.0)};
    const cdouble ey = ay * cdouble{std::cos(imb.theta_y_deg * kPi / 180.0),
                                    std::sin(imb.theta_y_deg * kPi / 180.0)};
    for (auto& p : out.points) {
        p.x = p.x.real() + ex * p.x.imag();
        p.y = p.y.real() + ey * p.y.imag();
    }
    out.rebuild_index();
    return out;
}

struct WorstCaseResult {
    double min_gmi = 0.0;
    MzmImbalance argmin;
    std::size_t cells_evaluated = 0;
};

/// Exhaustive grid search over theta in 90 +- [0, theta_dev_max] (both
/// polarizations independently) and gain imbalance in [0, gain_db_max].
/// The joint sign symmetry along the I and Q axes is exploited: only
/// non-negative X quadrature deviations are evaluated (with the full Y range),
/// which halves the grid. Ties resolve to the lexicographically smallest
/// (theta_x, alpha_x, theta_y, alpha_y).
inline WorstCaseResult worst_case_gmi(const Constellation4D& c, double snr_db,
                                      double theta_dev_max_deg, double gain_db_max,
                                      double theta_step_deg, double gain_step_db,
                                      std::size_t n_samples, std::uint64_t seed,
                                      std::size_t refine_top = 32,
                                      std::size_t n_samples_refine = 200000) {
    if (theta_step_deg <= 0.0 || gain_step_db <= 0.0)
        throw std::invalid_argument("worst_case_gmi: steps must be positive");
    std::vector<double> devs_x, devs_y, gains;
    for (double d = 0.0; d <= theta_dev_max_deg + 1e-9; d += theta_step_deg) devs_x.push_back(d);
    for (double d = -theta_dev_max_deg; d <= theta_dev_max_deg + 1e-9; d += theta_step_deg)
        devs_y.push_back(d);
    for (double g = 0.0; g <= gain_db_max + 1e-9; g += gain_step_db) gains.push_back(g);

    struct Cell { MzmImbalance imb; double gmi; };
    std::vector<MzmImbalance> cells;
    for (double dx : devs_x)
        for (double dy : devs_y) {
            if (dx == 0.0 && dy < 0.0) continue;  // symmetry representative
            for (double gx : gains)
                for (double gy : gains)
                    cells.push_back({90.0 + dx, 90.0 + dy, gx, gy});
        }

    std::vector<double> gmi(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        Constellation4D d = apply_mzm(c, cells[i]);
        detail::DemapContext ctx(d);
        const auto m = detail::run_awgn_mc(ctx, snr_db, n_samples, seed);  // common random numbers
        gmi[i] = 6.0 - m.sum_bit / double(m.n);
    });

    auto lex_less = [](const MzmImbalance& a, const MzmImbalance& b) {
        if (a.theta_x_deg != b.theta_x_deg) return a.theta_x_deg < b.theta_x_deg;
        if (a.alpha_x_db != b.alpha_x_db) return a.alpha_x_db < b.alpha_x_db;
        if (a.theta_y_deg != b.theta_y_deg) return a.theta_y_deg < b.theta_y_deg;
        return a.alpha_y_db < b.alpha_y_db;
    };

    // re-evaluate the lowest cells at higher precision with a fresh stream
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (gmi[a] != gmi[b]) return gmi[a] < gmi[b];
        return lex_less(cells[a], cells[b]);
    });
    const std::size_t top = std::min(refine_top, order.size());
    std::vector<double> refined(top);
    parallel_for(top, [&](std::size_t k) {
        Constellation4D d = apply_mzm(c, cells[order[k]]);
        detail::DemapContext ctx(d);
        const auto m = detail::run_awgn_mc(ctx, snr_db, n_samples_refine, seed ^ 0x5eedULL);
        refined[k] = 6.0 - m.sum_bit / double(m.n);
    });
    WorstCaseResult res;
    res.cells_evaluated = cells.size();
    res.min_gmi = 1e300;
    for (std::size_t k = 0; k < top; ++k) {
        const auto& imb = cells[order[k]];
        if (refined[k] < res.min_gmi ||
            (refined[k] == res.min_gmi && lex_less(imb, res.argmin))) {
            res.min_gmi = refined[k];
            res.argmin = imb;
        }
    }
    return res;
}

/// Fig.-3(a)-style table: theta deviation and gain imbalance co-varied on
/// both polarizations.
struct ImbalanceGridRow {
    double theta_dev_deg;
    double gain_db;
    double gmi;
};

inline std::vector<ImbalanceGridRow> imbalance_heatmap(const Constellation4D& c, double snr_db,
                                                       std::span<const double> theta_devs_deg,
                                                       std::span<const double> gains_db,
                                                       std::size_t n_samples, std::uint64_t seed) {
    std::vector<ImbalanceGridRow> rows(theta_devs_deg.size() * gains_db.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        const double dev = theta_devs_deg[i / gains_db.size()];
        const double g = gains_db[i % gains_db.size()];
        Constellation4D d = apply_mzm(c, {90.0 + dev, 90.0 + dev, g, g});
        detail::DemapContext ctx(d);
        const auto m = detail::run_awgn_mc(ctx, snr_db, n_samples, seed);
        rows[i] = {dev, g, 6.0 - m.sum_bit / double(m.n)};
    });
    return rows;
}

/// DAC model: vertical resolution and the RRC shaping context it acts in.
struct DacConfig {
    unsigned bits = 8;
    unsigned samples_per_symbol = 2;
    double rolloff = 0.1;
    unsigned span_symbols = 64;
};

/// Uniform per-rail quantization: each of the four real rails is mapped to
/// the nearest of 2^bits equally spaced levels spanning [-max|rail|,
/// +max|rail|] of that rail. Frequency independent.
inline SampledWaveform dac_quantize(const SampledWaveform& w, const DacConfig& cfg) {
    if (cfg.bits < 1) throw std::invalid_argument("dac_quantize: bits must be >= 1");
    const std::size_t levels = std::size_t(1) << cfg.bits;
    SampledWaveform out = w;
    auto quantize_rail = [&](auto get, auto set, std::vector<cdouble>& rail) {
        double m = 0.0;
        for (const auto& v : rail) m = std::max(m, std::abs(get(v)));
        if (m == 0.0) throw std::invalid_argument("dac_quantize: all-zero rail");
        const double step = 2.0 * m / double(levels - 1);
        for (auto& v : rail) {
            double idx = std::round((get(v) + m) / step);
            idx = std::min(std::max(idx, 0.0), double(levels - 1));
            set(v, -m + idx * step);
        }
    };
    auto re = [](const cdouble& v) { return v.real(); };
    auto im = [](const cdouble& v) { return v.imag(); };
    auto set_re = [](cdouble& v, double r) { v = {r, v.imag()}; };
    auto set_im = [](cdouble& v, double i) { v = {v.real(), i}; };
    quantize_rail(re, set_re, out.x_rail);
    quantize_rail(im, set_im, out.x_rail);
    quantize_rail(re, set_re, out.y_rail);
    quantize_rail(im, set_im, out.y_rail);
    return out;
}

/// Back-to-back quantized-transmitter chain: shape, quantize, matched-filter,
/// decimate. Returns the symbol-rate decision-point stream together with the
/// transmitted indices (the channel is memoryless, so AWGN is applied at
/// symbol rate by the caller).
struct QuantizedChain {
    std::vector<std::size_t> tx_indices;
    std::vector<Point4D> rx_symbols;
};

inline QuantizedChain quantized_chain(const Constellation4D& c, const DacConfig& cfg,
                                      std::size_t n_symbols, std::uint64_t seed,
                                      bool enable_quantizer = true) {
    Rng rng = Rng::stream(seed, 0);
    QuantizedChain out;
    out.tx_indices.resize(n_symbols);
    std::vector<Point4D> symbols(n_symbols);
    for (std::size_t i = 0; i < n_symbols; ++i) {
        out.tx_indices[i] = std::size_t(rng.below(64));
        symbols[i] = c.points[out.tx_indices[i]];
    }
    SampledWaveform w = rrc_shape(symbols, cfg.samples_per_symbol, cfg.rolloff, cfg.span_symbols);
    if (enable_quantizer) w = dac_quantize(w, cfg);
    out.rx_symbols = rrc_matched_to_symbols(w, cfg.samples_per_symbol, cfg.rolloff, cfg.span_symbols);
    return out;
}

/// Required SNR to reach `target_gmi` through the quantized chain (bisection
/// with common random numbers; AWGN added at symbol rate, demapping against
/// the clean constellation).
inline RequiredSnr dac_required_snr(const Constellation4D& c, const DacConfig& cfg,
                                    double target_gmi, double tol_db, std::size_t n_symbols,
                                    unsigned noise_draws, std::uint64_t seed,
                                    bool enable_quantizer = true,
                                    double lo_db = 0.0, double hi_db = 20.0) {
    const QuantizedChain chain = quantized_chain(c, cfg, n_symbols, seed, enable_quantizer);
    detail::DemapContext ctx(c);
    const double e4 = c.mean_energy_4d();

    auto gmi_at = [&](double snr_db) {
        const double sigma2 = e4 / (4.0 * std::pow(10.0, snr_db / 10.0));
        const double sigma = std::sqrt(sigma2);
        const double inv2s2 = 1.0 / (2.0 * sigma2);
        const std::size_t blocks = noise_draws;
        std::vector<double> partial(blocks, 0.0);
        parallel_for(blocks, [&](std::size_t d) {
            Rng rng = Rng::stream(seed ^ 0xdacULL, d);
            double s = 0.0;
            for (std::size_t i = 0; i < n_symbols; ++i) {
                const auto& r = chain.rx_symbols[i];
                s += detail::demap_sample(ctx, r.x.real() + sigma * rng.gaussian(),
                                          r.x.imag() + sigma * rng.gaussian(),
                                          r.y.real() + sigma * rng.gaussian(),
                                          r.y.imag() + sigma * rng.gaussian(),
                                          chain.tx_indices[i], inv2s2)
                         .bit_loss;
            }
            partial[d] = s;
        });
        double total = 0.0;
        for (double p : partial) total += p;
        return 6.0 - total / double(n_symbols * blocks);
    };

    double lo = lo_db, hi = hi_db;
    if (gmi_at(lo) >= target_gmi) return {lo, false};
    if (gmi_at(hi) < target_gmi) return {hi, false};
    while (hi - lo > tol_db) {
        const double mid = 0.5 * (lo + hi);
        if (gmi_at(mid) < target_gmi) lo = mid;
        else hi = mid;
    }
    return {0.5 * (lo + hi), true};
}

} // namespace fourd
