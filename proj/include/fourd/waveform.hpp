#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fourd/constellation.hpp"
#include "fourd/fft.hpp"

namespace fourd {

/// Dual-polarization complex baseband sample stream.
struct SampledWaveform {
    std::vector<cdouble> x_rail;
    std::vector<cdouble> y_rail;
    double sample_rate_ghz = 0.0;
    double center_freq_offset_ghz = 0.0;

    std::size_t size() const { return x_rail.size(); }
    double mean_power() const {
        double s = 0.0;
        for (std::size_t i = 0; i < x_rail.size(); ++i)
            s += std::norm(x_rail[i]) + std::norm(y_rail[i]);
        return s / double(x_rail.size());
    }
};

/// Unit-energy root-raised-cosine taps, length span*sps + 1 (span even).
inline std::vector<double> rrc_taps(unsigned sps, double rolloff, unsigned span_symbols) {
    if (sps < 2) throw std::invalid_argument("rrc_taps: sps must be >= 2");
    if (span_symbols % 2 != 0) throw std::invalid_argument("rrc_taps: span must be even");
    if (!(rolloff > 0.0) || rolloff >= 1.0) throw std::invalid_argument("rrc_taps: rolloff in (0,1)");
    const std::size_t n = std::size_t(span_symbols) * sps;
    std::vector<double> h(n + 1);
    const double b = rolloff;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = (double(i) - double(n) / 2.0) / double(sps);  // in symbols
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - b + 4.0 * b / kPi;
        } else if (std::abs(std::abs(4.0 * b * t) - 1.0) < 1e-9) {
            v = (b / std::sqrt(2.0)) * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                                        (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            v = (std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b))) /
                (kPi * t * (1.0 - 16.0 * b * b * t * t));
        }
        h[i] = v;
    }
    double e = 0.0;
    for (double v : h) e += v * v;
    const double s = 1.0 / std::sqrt(e);
    for (double& v : h) v *= s;
    return h;
}

namespace detail {

/// Cyclic convolution of `signal` (complex) with real taps via FFT, then
/// advanced by the filter group delay so the result is aligned with the
/// input grid.
inline void cyclic_filter_aligned(std::vector<cdouble>& signal, std::span<const double> taps,
                                  const Fft& fft) {
    const std::size_t n = signal.size();
    if (taps.size() > n) throw std::invalid_argument("taps longer than signal");
    std::vector<cdouble> h(n, 0.0);
    for (std::size_t i = 0; i < taps.size(); ++i) h[i] = taps[i];
    fft.forward(signal.data());
    fft.forward(h.data());
    for (std::size_t i = 0; i < n; ++i) signal[i] *= h[i];
    fft.inverse(signal.data());
    // group delay of a length-(2m+1) symmetric FIR is m samples
    const std::size_t delay = (taps.size() - 1) / 2;
    std::vector<cdouble> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = signal[(i + delay) % n];
    signal.swap(out);
}

} // namespace detail

/// Upsample a 4D symbol stream by `sps` and pulse-shape both rails with a
/// unit-energy RRC (cyclic boundary). Sample rate metadata is filled from
/// `symbol_rate_gbaud`.
inline SampledWaveform rrc_shape(std::span<const Point4D> symbols, unsigned sps, double rolloff,
                                 unsigned span_symbols, double symbol_rate_gbaud = 1.0) {
    const auto taps = rrc_taps(sps, rolloff, span_symbols);
    const std::size_t n = symbols.size() * sps;
    SampledWaveform w;
    w.sample_rate_ghz = symbol_rate_gbaud * sps;
    w.x_rail.assign(n, 0.0);
    w.y_rail.assign(n, 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        w.x_rail[i * sps] = symbols[i].x;
        w.y_rail[i * sps] = symbols[i].y;
    }
    Fft fft(n);
    detail::cyclic_filter_aligned(w.x_rail, taps, fft);
    detail::cyclic_filter_aligned(w.y_rail, taps, fft);
    return w;
}

/// Matched RRC filter followed by symbol-rate decimation (cyclic boundary,
/// group delay compensated).
inline std::vector<Point4D> rrc_matched_to_symbols(const SampledWaveform& w, unsigned sps,
                                                   double rolloff, unsigned span_symbols) {
    const auto taps = rrc_taps(sps, rolloff, span_symbols);
    std::vector<cdouble> x = w.x_rail, y = w.y_rail;
    Fft fft(x.size());
    detail::cyclic_filter_aligned(x, taps, fft);
    detail::cyclic_filter_aligned(y, taps, fft);
    std::vector<Point4D> out(x.size() / sps);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {x[i * sps], y[i * sps]};
    return out;
}

/// Binary waveform snapshot: text header line then little-endian float64
/// samples interleaved (Re_x, Im_x, Re_y, Im_y).
inline void write_waveform(const SampledWaveform& w, std::ostream& os) {
    os << "fourd-waveform sample_rate_ghz=" << w.sample_rate_ghz
       << " center_freq_offset_ghz=" << w.center_freq_offset_ghz << " length=" << w.size() << "\n";
    for (std::size_t i = 0; i < w.size(); ++i) {
        double vals[4] = {w.x_rail[i].real(), w.x_rail[i].imag(), w.y_rail[i].real(),
                          w.y_rail[i].imag()};
        os.write(reinterpret_cast<const char*>(vals), sizeof vals);
    }
}

inline SampledWaveform read_waveform(std::istream& is) {
    std::string header;
    std::getline(is, header);
    SampledWaveform w;
    std::size_t length = 0;
    auto grab = [&](const std::string& key) -> std::string {
        auto pos = header.find(key + "=");
        if (pos == std::string::npos) throw std::runtime_error("waveform header missing " + key);
        auto end = header.find(' ', pos);
        return header.substr(pos + key.size() + 1, end - pos - key.size() - 1);
    };
    w.sample_rate_ghz = std::stod(grab("sample_rate_ghz"));
    w.center_freq_offset_ghz = std::stod(grab("center_freq_offset_ghz"));
    length = std::stoul(grab("length"));
    w.x_rail.resize(length);
    w.y_rail.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        double vals[4];
        is.read(reinterpret_cast<char*>(vals), sizeof vals);
        if (!is) throw std::runtime_error("waveform truncated");
        w.x_rail[i] = {vals[0], vals[1]};
        w.y_rail[i] = {vals[2], vals[3]};
    }
    return w;
}

} // namespace fourd
