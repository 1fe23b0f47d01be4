#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fourd/constellation.hpp"
#include "fourd/fft.hpp"
#include "fourd/infometrics.hpp"
#include "fourd/rng.hpp"
#include "fourd/waveform.hpp"

namespace fourd {

/// Homogeneous multi-span link. Distances in km, powers in W internally.
struct LinkConfig {
    double span_length_km = 80.0;
    unsigned n_spans = 10;
    double dispersion_ps_nm_km = 17.0;
    double gamma_w_km = 1.32;            // nonlinearity, 1/(W km)
    double alpha_db_km = 0.2;
    double pmd_coeff_ps_sqrt_km = 0.04;
    unsigned n_waveplates_per_span = 50;
    double edfa_nf_db = 5.0;
    double center_wavelength_nm = 1550.0;
    unsigned steps_per_waveplate = 4;
    bool ase_enabled = true;
    bool gaussian_dgd = false;           // per-waveplate DGD: fixed magnitude or Gaussian-drawn
    double max_nl_phase_per_step = 0.05; // rad; accuracy guard

    double beta2_ns2_km() const {
        const double c_m_s = 299792458.0;
        const double lambda_m = center_wavelength_nm * 1e-9;
        const double d_s_m2 = dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
        const double beta2_s2_m = -d_s_m2 * lambda_m * lambda_m / (2.0 * kPi * c_m_s);
        return beta2_s2_m * 1e21;  // s^2/m -> ns^2/km
    }
    double alpha_nepers_km() const { return alpha_db_km * std::log(10.0) / 10.0; }
    double span_power_gain() const { return std::exp(alpha_nepers_km() * span_length_km); }
    /// Per-waveplate DGD magnitude in ns chosen so the span-mean DGD matches
    /// pmd_coeff * sqrt(span_length) (Maxwellian random-walk scaling).
    double waveplate_dgd_ns() const {
        const double mean_span_dgd_ps = pmd_coeff_ps_sqrt_km * std::sqrt(span_length_km);
        const double c = std::sqrt(8.0 / (3.0 * kPi));
        return mean_span_dgd_ps / (c * std::sqrt(double(n_waveplates_per_span))) * 1e-3;
    }
};

struct WdmConfig {
    unsigned n_channels = 3;
    double baud_gbaud = 32.0;
    double spacing_ghz = 50.0;
    double rolloff = 0.1;
    double launch_power_dbm_per_channel = 0.0;
    unsigned samples_per_symbol = 6;
    std::size_t n_symbols = 16384;
    unsigned rrc_span_symbols = 64;
    std::uint64_t seed = 1;

    double sample_rate_ghz() const { return baud_gbaud * samples_per_symbol; }
};

namespace detail {

struct Mat2 {
    cdouble a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};

    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 adjoint() const {
        return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)};
    }
};

/// Haar-random SU(2) element (normalized quaternion).
inline Mat2 random_su2(Rng& rng) {
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& v : q) { v = rng.gaussian(); n2 += v * v; }
    } while (n2 < 1e-12);
    const double s = 1.0 / std::sqrt(n2);
    for (double& v : q) v *= s;
    return {{q[0], q[1]}, {q[2], q[3]}, {-q[2], q[3]}, {q[0], -q[1]}};
}

} // namespace detail

struct Waveplate {
    detail::Mat2 rotation;
    double dgd_ns = 0.0;
};

/// Everything the genie receiver needs to invert the linear channel.
struct LinkRecord {
    std::vector<std::vector<Waveplate>> spans;  // [span][waveplate]
    double total_length_km = 0.0;
    double beta2_ns2_km = 0.0;

    bool empty() const { return spans.empty() && total_length_km == 0.0; }
};

struct WdmSignal {
    SampledWaveform field;
    std::vector<std::size_t> center_tx_indices;  // data on the channel under test
};

/// Build the WDM composite: per channel, seeded random symbols are RRC-shaped
/// (cyclic), shifted to the channel's grid slot and scaled to the configured
/// launch power. The center channel sits at zero offset.
inline WdmSignal wdm_transmit(const Constellation4D& format, const WdmConfig& wdm) {
    const double fs = wdm.sample_rate_ghz();
    const std::size_t n = wdm.n_symbols * wdm.samples_per_symbol;
    const double band_edge =
        (double(wdm.n_channels - 1) / 2.0) * wdm.spacing_ghz + wdm.baud_gbaud * (1.0 + wdm.rolloff) / 2.0;
    if (fs < 1.2 * 2.0 * band_edge)
        throw std::invalid_argument("wdm_transmit: sample rate does not cover the WDM band with 20% guard");
    if (wdm.spacing_ghz < wdm.baud_gbaud * (1.0 + wdm.rolloff))
        throw std::invalid_argument("wdm_transmit: channel spacing below occupied bandwidth");

    WdmSignal out;
    out.field.sample_rate_ghz = fs;
    out.field.x_rail.assign(n, 0.0);
    out.field.y_rail.assign(n, 0.0);

    const double p_launch_w = 1e-3 * std::pow(10.0, wdm.launch_power_dbm_per_channel / 10.0);
    const int center = int(wdm.n_channels - 1) / 2;

    for (unsigned ch = 0; ch < wdm.n_channels; ++ch) {
        const double offset_ghz = (double(ch) - double(wdm.n_channels - 1) / 2.0) * wdm.spacing_ghz;
        const double bin_f = offset_ghz / fs * double(n);
        const long bin = std::lround(bin_f);
        if (std::abs(bin_f - double(bin)) > 1e-6)
            throw std::invalid_argument("wdm_transmit: channel offset not representable on the cyclic grid");

        Rng rng = Rng::stream(wdm.seed, 1000 + ch);
        std::vector<std::size_t> idx(wdm.n_symbols);
        std::vector<Point4D> syms(wdm.n_symbols);
        for (std::size_t i = 0; i < wdm.n_symbols; ++i) {
            idx[i] = std::size_t(rng.below(64));
            syms[i] = format.points[idx[i]];
        }
        if (int(ch) == center) out.center_tx_indices = idx;

        SampledWaveform w =
            rrc_shape(syms, wdm.samples_per_symbol, wdm.rolloff, wdm.rrc_span_symbols, wdm.baud_gbaud);
        const double scale = std::sqrt(p_launch_w / w.mean_power());
        const long bin_mod = ((bin % long(n)) + long(n)) % long(n);
        for (std::size_t i = 0; i < n; ++i) {
            // exact cyclic phase: 2*pi*((bin*i) mod n)/n
            const long m = long((std::int64_t(bin_mod) * std::int64_t(i)) % std::int64_t(n));
            const cdouble ph = std::polar(1.0, 2.0 * kPi * double(m) / double(n));
            out.field.x_rail[i] += w.x_rail[i] * scale * ph;
            out.field.y_rail[i] += w.y_rail[i] * scale * ph;
        }
    }
    return out;
}

struct PropagationResult {
    SampledWaveform field;                      // after the last span's EDFA
    std::vector<SampledWaveform> snapshots;     // at requested span counts, same order
    LinkRecord record;
};

/// Split-step Fourier integration of the Manakov equation
///   dA/dz = -alpha/2 A - j beta2/2 d^2A/dt^2 + j (8/9) gamma (|Ax|^2+|Ay|^2) A
/// with `n_waveplates_per_span` lumped polarization elements per span (Haar
/// rotation followed by a DGD element) and an EDFA per span that exactly
/// restores the span loss and injects ASE per its noise figure.
/// The symmetric scheme uses `steps_per_waveplate` nonlinear steps per
/// waveplate segment. Randomness derives from (seed, span index), so a longer
/// link is an extension of a shorter one with the same seed.
inline PropagationResult ssfm_propagate(const SampledWaveform& input, const LinkConfig& link,
                                        std::uint64_t seed,
                                        std::span<const unsigned> snapshot_spans = {}) {
    const std::size_t n = input.size();
    if (n == 0) throw std::invalid_argument("ssfm_propagate: empty waveform");
    const double fs_ghz = input.sample_rate_ghz;

    PropagationResult res;
    res.record.beta2_ns2_km = link.beta2_ns2_km();
    res.record.total_length_km = link.span_length_km * link.n_spans;

    std::vector<cdouble> ex = input.x_rail, ey = input.y_rail;
    Fft fft(n);

    // angular frequency grid, rad/ns
    std::vector<double> omega(n);
    for (std::size_t k = 0; k < n; ++k)
        omega[k] = 2.0 * kPi * bin_frequency(k, n) * fs_ghz;

    const double seg_km = link.span_length_km / double(link.n_waveplates_per_span);
    const double h_km = seg_km / double(link.steps_per_waveplate);
    const double beta2 = res.record.beta2_ns2_km;
    const double alpha = link.alpha_nepers_km();
    const double gamma_eff = (8.0 / 9.0) * link.gamma_w_km;
    const double nl_len = alpha > 0.0 ? 2.0 * std::sinh(alpha * h_km / 2.0) / alpha : h_km;

    // linear half/full step phases (CD) and field loss factors
    std::vector<cdouble> lin_full(n), lin_half(n);
    const double loss_half = std::exp(-alpha * h_km / 4.0);
    const double loss_full = std::exp(-alpha * h_km / 2.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double ph = 0.5 * beta2 * omega[k] * omega[k];
        lin_full[k] = std::polar(loss_full, ph * h_km);
        lin_half[k] = std::polar(loss_half, ph * h_km / 2.0);
    }

    const double dgd_mag = link.waveplate_dgd_ns();
    const double nu_hz = 299792458.0 / (link.center_wavelength_nm * 1e-9);
    const double h_planck = 6.62607015e-34;
    const double nf_lin = std::pow(10.0, link.edfa_nf_db / 10.0);
    const double n_sp = nf_lin / 2.0;
    const double gain = link.span_power_gain();
    const double ase_var_complex = n_sp * h_planck * nu_hz * (gain - 1.0) * (fs_ghz * 1e9);
    const double ase_sigma = std::sqrt(ase_var_complex / 2.0);  // per real dim per pol

    auto nonlinear_step = [&](double& max_phi) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::norm(ex[i]) + std::norm(ey[i]);
            const double phi = gamma_eff * p * nl_len;
            if (phi > max_phi) max_phi = phi;
            const cdouble rot = std::polar(1.0, phi);
            ex[i] *= rot;
            ey[i] *= rot;
        }
    };

    std::size_t snap_cursor = 0;
    auto maybe_snapshot = [&](unsigned spans_done) {
        while (snap_cursor < snapshot_spans.size() && snapshot_spans[snap_cursor] == spans_done) {
            SampledWaveform s;
            s.sample_rate_ghz = fs_ghz;
            s.x_rail = ex;
            s.y_rail = ey;
            res.snapshots.push_back(std::move(s));
            ++snap_cursor;
        }
    };
    maybe_snapshot(0);

    double max_phi = 0.0;
    for (unsigned span = 0; span < link.n_spans; ++span) {
        Rng rng = Rng::stream(seed, span);
        res.record.spans.emplace_back();
        auto& plates = res.record.spans.back();
        plates.reserve(link.n_waveplates_per_span);

        for (unsigned wp = 0; wp < link.n_waveplates_per_span; ++wp) {
            Waveplate plate;
            plate.rotation = detail::random_su2(rng);
            plate.dgd_ns = link.gaussian_dgd ? dgd_mag * rng.gaussian() : dgd_mag;
            plates.push_back(plate);

            // segment: L(h/2) [N L(h)]*(k-1) N L(h/2)+waveplate
            fft.forward(ex.data());
            fft.forward(ey.data());
            for (std::size_t i = 0; i < n; ++i) { ex[i] *= lin_half[i]; ey[i] *= lin_half[i]; }
            fft.inverse(ex.data());
            fft.inverse(ey.data());
            for (unsigned s = 0; s < link.steps_per_waveplate; ++s) {
                nonlinear_step(max_phi);
                fft.forward(ex.data());
                fft.forward(ey.data());
                const bool last = s + 1 == link.steps_per_waveplate;
                const auto& lin = last ? lin_half : lin_full;
                const auto& r = plate.rotation;
                for (std::size_t i = 0; i < n; ++i) {
                    cdouble vx = ex[i] * lin[i];
                    cdouble vy = ey[i] * lin[i];
                    if (last) {
                        // rotation then DGD in the rotated axes
                        const cdouble rx = r.a * vx + r.b * vy;
                        const cdouble ry = r.c * vx + r.d * vy;
                        const cdouble dplus = std::polar(1.0, 0.5 * omega[i] * plate.dgd_ns);
                        vx = rx * dplus;
                        vy = ry * std::conj(dplus);
                    }
                    ex[i] = vx;
                    ey[i] = vy;
                }
                fft.inverse(ex.data());
                fft.inverse(ey.data());
            }
        }

        // EDFA: exact loss recovery plus ASE
        const double g_field = std::sqrt(gain);
        Rng ase_rng = Rng::stream(seed ^ 0xa5eULL, span);
        for (std::size_t i = 0; i < n; ++i) {
            ex[i] *= g_field;
            ey[i] *= g_field;
            if (link.ase_enabled) {
                ex[i] += cdouble{ase_sigma * ase_rng.gaussian(), ase_sigma * ase_rng.gaussian()};
                ey[i] += cdouble{ase_sigma * ase_rng.gaussian(), ase_sigma * ase_rng.gaussian()};
            }
        }
        maybe_snapshot(span + 1);
    }

    if (max_phi > link.max_nl_phase_per_step)
        throw std::runtime_error("ssfm_propagate: nonlinear phase per step exceeds accuracy threshold");

    res.field.sample_rate_ghz = fs_ghz;
    res.field.x_rail = std::move(ex);
    res.field.y_rail = std::move(ey);
    maybe_snapshot(link.n_spans);  // allow requesting the final state explicitly
    return res;
}

struct RxResult {
    double snr_elec_db = 0.0;
    double gmi = 0.0;
    double pre_fec_ber = 0.0;
    double system_margin_db = 0.0;
};

namespace detail {

/// Polarization transfer matrix of the recorded plates at one frequency
/// (order of application preserved; CD and loss are scalar and handled
/// separately).
inline Mat2 channel_matrix(const LinkRecord& rec, double omega, unsigned n_spans) {
    Mat2 h;  // identity
    for (unsigned s = 0; s < n_spans && s < rec.spans.size(); ++s) {
        for (const auto& plate : rec.spans[s]) {
            const auto& r = plate.rotation;
            // v' = D(omega) R v applied to accumulated h
            Mat2 m;
            const cdouble dplus = std::polar(1.0, 0.5 * omega * plate.dgd_ns);
            m.a = r.a * dplus;
            m.b = r.b * dplus;
            m.c = r.c * std::conj(dplus);
            m.d = r.d * std::conj(dplus);
            h = m.mul(h);
        }
    }
    return h;
}

} // namespace detail

/// Genie-aided coherent receiver for the center channel: matched RRC filter,
/// ideal CD compensation, MMSE equalizer built from the recorded linear
/// response (regularized 2x2 inversion, floor 1e-9), genie phase estimation
/// over a sliding window of known symbols, then symbol-rate metrics.
/// `required_snr_for_margin_db` is the SNR_elec needed at the target pre-FEC
/// BER (see required_snr_for_ber); margin = SNR_elec - required.
inline RxResult receive_center_channel(const SampledWaveform& rx, const LinkRecord& record,
                                       const WdmConfig& wdm, const Constellation4D& format,
                                       std::span<const std::size_t> tx_indices,
                                       unsigned phase_window_symbols,
                                       double required_snr_for_margin_db) {
    if (record.total_length_km > 0.0 && record.spans.empty())
        throw std::invalid_argument("receive_center_channel: missing genie record");
    if (tx_indices.size() != wdm.n_symbols)
        throw std::invalid_argument("receive_center_channel: tx data size mismatch");
    const std::size_t n = rx.size();
    const double fs = rx.sample_rate_ghz;

    std::vector<cdouble> ex = rx.x_rail, ey = rx.y_rail;
    Fft fft(n);
    fft.forward(ex.data());
    fft.forward(ey.data());

    const double band_hz = wdm.baud_gbaud * (1.0 + wdm.rolloff) / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = bin_frequency(k, n) * fs;  // GHz
        if (std::abs(f) > band_hz * 1.25) {  // coarse channel select; matched filter refines
            ex[k] = 0.0;
            ey[k] = 0.0;
            continue;
        }
        const double omega = 2.0 * kPi * f;
        // CD compensation
        const cdouble cdcomp =
            std::polar(1.0, -0.5 * record.beta2_ns2_km * omega * omega * record.total_length_km);
        cdouble vx = ex[k] * cdcomp;
        cdouble vy = ey[k] * cdcomp;
        // MMSE inversion of the recorded polarization response
        const detail::Mat2 h = detail::channel_matrix(record, omega, unsigned(record.spans.size()));
        const detail::Mat2 hh = h.adjoint();
        // (H^H H + eps I)^{-1} H^H, written out for 2x2
        const cdouble g11 = hh.a * h.a + hh.b * h.c;
        const cdouble g12 = hh.a * h.b + hh.b * h.d;
        const cdouble g21 = hh.c * h.a + hh.d * h.c;
        const cdouble g22 = hh.c * h.b + hh.d * h.d;
        const double eps = 1e-9;
        const cdouble a = g11 + eps, b = g12, c = g21, d = g22 + eps;
        const cdouble det = a * d - b * c;
        const cdouble i11 = d / det, i12 = -b / det, i21 = -c / det, i22 = a / det;
        const cdouble w11 = i11 * hh.a + i12 * hh.c;
        const cdouble w12 = i11 * hh.b + i12 * hh.d;
        const cdouble w21 = i21 * hh.a + i22 * hh.c;
        const cdouble w22 = i21 * hh.b + i22 * hh.d;
        ex[k] = w11 * vx + w12 * vy;
        ey[k] = w21 * vx + w22 * vy;
    }
    fft.inverse(ex.data());
    fft.inverse(ey.data());

    SampledWaveform eq;
    eq.sample_rate_ghz = fs;
    eq.x_rail = std::move(ex);
    eq.y_rail = std::move(ey);
    std::vector<Point4D> sym =
        rrc_matched_to_symbols(eq, wdm.samples_per_symbol, wdm.rolloff, wdm.rrc_span_symbols);

    // genie phase estimation: remove modulation with the known symbols and
    // average the residual phasor over a sliding window (cyclic)
    const std::size_t ns = sym.size();
    std::vector<cdouble> resid(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const Point4D& a = format.points[tx_indices[i]];
        resid[i] = sym[i].x * std::conj(a.x) + sym[i].y * std::conj(a.y);
    }
    const long w = std::max(1L, long(phase_window_symbols));
    const long half = w / 2;
    cdouble acc = 0.0;
    for (long j = -half; j < w - half; ++j) acc += resid[std::size_t((j + long(ns)) % long(ns))];
    std::vector<cdouble> derot(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const double ph = std::arg(acc);
        derot[i] = std::polar(1.0, -ph);
        // slide window
        const long drop = long(i) - half;
        const long add = long(i) + (w - half);
        acc -= resid[std::size_t(((drop % long(ns)) + long(ns)) % long(ns))];
        acc += resid[std::size_t(((add % long(ns)) + long(ns)) % long(ns))];
    }
    for (std::size_t i = 0; i < ns; ++i) {
        sym[i].x *= derot[i];
        sym[i].y *= derot[i];
    }

    // data-aided complex gain fit, then decision-point metrics
    cdouble num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        const Point4D& a = format.points[tx_indices[i]];
        num += sym[i].x * std::conj(a.x) + sym[i].y * std::conj(a.y);
        den += energy4(a);
    }
    const cdouble hgain = num / den;
    double sig = 0.0, err = 0.0;
    std::vector<Point4D> scaled(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const Point4D& a = format.points[tx_indices[i]];
        scaled[i] = {sym[i].x / hgain, sym[i].y / hgain};
        sig += energy4(a);
        err += std::norm(scaled[i].x - a.x) + std::norm(scaled[i].y - a.y);
    }
    RxResult out;
    out.snr_elec_db = 10.0 * std::log10(sig / err);
    const double sigma2 = err / (4.0 * double(ns));  // per real dimension
    out.gmi = gmi_from_samples(format, tx_indices, scaled, sigma2);
    out.pre_fec_ber =
        double(count_bit_errors(format, tx_indices, scaled)) / (6.0 * double(ns));
    out.system_margin_db = out.snr_elec_db - required_snr_for_margin_db;
    return out;
}

/// SNR_elec needed for the min-distance hard decision to reach `ber_target`
/// over AWGN (bisection, common random numbers).
inline double required_snr_for_ber(const Constellation4D& c, double ber_target,
                                   std::size_t n_samples, std::uint64_t seed,
                                   double lo_db = 0.0, double hi_db = 20.0, double tol_db = 0.01) {
    detail::DemapContext ctx(c);
    const double e4 = c.mean_energy_4d();
    auto ber_at = [&](double snr_db) {
        const double sigma = std::sqrt(e4 / (4.0 * std::pow(10.0, snr_db / 10.0)));
        Rng rng = Rng::stream(seed, 77);
        std::size_t errs = 0;
        std::vector<std::size_t> tx(n_samples);
        std::vector<Point4D> rxp(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            tx[i] = std::size_t(rng.below(64));
            rxp[i] = {c.points[tx[i]].x + cdouble{sigma * rng.gaussian(), sigma * rng.gaussian()},
                      c.points[tx[i]].y + cdouble{sigma * rng.gaussian(), sigma * rng.gaussian()}};
        }
        errs = count_bit_errors(c, tx, rxp);
        return double(errs) / (6.0 * double(n_samples));
    };
    double lo = lo_db, hi = hi_db;
    while (hi - lo > tol_db) {
        const double mid = 0.5 * (lo + hi);
        if (ber_at(mid) > ber_target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace fourd
