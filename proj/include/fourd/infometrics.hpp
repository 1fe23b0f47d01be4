#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fourd/constellation.hpp"
#include "fourd/parallel.hpp"
#include "fourd/rng.hpp"

namespace fourd {

struct SnrPoint {
    double snr_db = 0.0;
    double gmi = 0.0;                 // bit / 4D symbol
    std::optional<double> mi;         // bit / 4D symbol
    std::size_t n_samples = 0;
    double std_err = 0.0;
};

namespace detail {

/// Demapper tables that do not change across samples.
struct DemapContext {
    std::array<double, 64> xr, xi, yr, yi;
    std::array<std::uint8_t, 64> labels;
    double mean_energy = 0.0;

    explicit DemapContext(const Constellation4D& c) {
        if (c.points.size() != 64) throw std::invalid_argument("demapper expects 64 points");
        for (std::size_t i = 0; i < 64; ++i) {
            xr[i] = c.points[i].x.real();
            xi[i] = c.points[i].x.imag();
            yr[i] = c.points[i].y.real();
            yi[i] = c.points[i].y.imag();
            labels[i] = c.labels[i];
        }
        mean_energy = c.mean_energy_4d();
    }
};

/// Per-sample bit losses: sum over the 6 bit positions of
/// log2(1 + exp(-sign * LLR)), plus the symbol-wise information loss.
/// Uses exact log-sum-exp over all 64 points.
struct SampleLoss {
    double bit_loss;   // sum over bits
    double sym_loss;   // log2( sum_a exp(m_a) / exp(m_tx) )
};

inline SampleLoss demap_sample(const DemapContext& ctx, double rx_xr, double rx_xi,
                               double rx_yr, double rx_yi, std::size_t tx_index,
                               double inv_two_sigma2) {
    double metric[64];
    double mmax = -1e300;
    for (std::size_t a = 0; a < 64; ++a) {
        const double dxr = rx_xr - ctx.xr[a];
        const double dxi = rx_xi - ctx.xi[a];
        const double dyr = rx_yr - ctx.yr[a];
        const double dyi = rx_yi - ctx.yi[a];
        const double m = -(dxr * dxr + dxi * dxi + dyr * dyr + dyi * dyi) * inv_two_sigma2;
        metric[a] = m;
        if (m > mmax) mmax = m;
    }
    double ex[64];
    double total = 0.0;
    double sum1[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t a = 0; a < 64; ++a) {
        const double e = std::exp(metric[a] - mmax);
        ex[a] = e;
        total += e;
        const std::uint8_t lab = ctx.labels[a];
        if (lab & 32) sum1[0] += e;
        if (lab & 16) sum1[1] += e;
        if (lab & 8) sum1[2] += e;
        if (lab & 4) sum1[3] += e;
        if (lab & 2) sum1[4] += e;
        if (lab & 1) sum1[5] += e;
    }
    const std::uint8_t tx_lab = ctx.labels[tx_index];
    double bit_loss = 0.0;
    constexpr double kLn2 = 0.6931471805599453094172321214581766;
    for (int b = 0; b < 6; ++b) {
        const double s1 = sum1[b];
        const double s0 = total - s1;
        // LLR = log(s0) - log(s1); loss = log2(1 + exp(-+LLR))
        const double llr = std::log(s0) - std::log(s1);
        const bool bit = (tx_lab >> (5 - b)) & 1;
        const double z = bit ? llr : -llr;
        bit_loss += (z > 700.0) ? z / kLn2 : std::log1p(std::exp(z)) / kLn2;
    }
    const double sym_loss = (std::log(total) - (metric[tx_index] - mmax)) / kLn2;
    return {bit_loss, sym_loss};
}

struct McMoments {
    double sum_bit = 0.0, sumsq_bit = 0.0;
    double sum_sym = 0.0;
    std::size_t n = 0;
};

/// Batched Monte Carlo over AWGN; deterministic for (seed, n) regardless of
/// thread count (per-batch substreams, reduction in batch order).
inline McMoments run_awgn_mc(const DemapContext& ctx, double snr_db, std::size_t n_samples,
                             std::uint64_t seed) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    const double sigma2 = ctx.mean_energy / (4.0 * snr);  // per real dimension
    const double sigma = std::sqrt(sigma2);
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma2);

    const std::size_t batch = 8192;
    const std::size_t n_batches = (n_samples + batch - 1) / batch;
    std::vector<McMoments> partial(n_batches);
    parallel_for(n_batches, [&](std::size_t bi) {
        Rng rng = Rng::stream(seed, bi);
        const std::size_t lo = bi * batch;
        const std::size_t hi = std::min(n_samples, lo + batch);
        McMoments m;
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t tx = std::size_t(rng.below(64));
            const double rx_xr = ctx.xr[tx] + sigma * rng.gaussian();
            const double rx_xi = ctx.xi[tx] + sigma * rng.gaussian();
            const double rx_yr = ctx.yr[tx] + sigma * rng.gaussian();
            const double rx_yi = ctx.yi[tx] + sigma * rng.gaussian();
            const SampleLoss s = demap_sample(ctx, rx_xr, rx_xi, rx_yr, rx_yi, tx, inv_two_sigma2);
            m.sum_bit += s.bit_loss;
            m.sumsq_bit += s.bit_loss * s.bit_loss;
            m.sum_sym += s.sym_loss;
            ++m.n;
        }
        partial[bi] = m;
    });
    McMoments total;
    for (const auto& m : partial) {
        total.sum_bit += m.sum_bit;
        total.sumsq_bit += m.sumsq_bit;
        total.sum_sym += m.sum_sym;
        total.n += m.n;
    }
    return total;
}

} // namespace detail

/// Bit-wise achievable rate over the memoryless circular-Gaussian channel.
/// SNR is Es/N0 per 4D symbol; noise variance per real dimension is
/// mean_energy/(4 * 10^(snr_db/10)), referenced to the constellation handed
/// in (equals 2 for the normalized formats). Exact log-sum-exp demapping.
inline SnrPoint gmi_estimate(const Constellation4D& c, double snr_db, std::size_t n_samples,
                             std::uint64_t seed) {
    if (n_samples < 10000)
        throw std::invalid_argument("gmi_estimate: n_samples must be >= 1e4");
    detail::DemapContext ctx(c);
    const auto m = detail::run_awgn_mc(ctx, snr_db, n_samples, seed);
    const double mean = m.sum_bit / double(m.n);
    const double var = std::max(0.0, m.sumsq_bit / double(m.n) - mean * mean);
    SnrPoint out;
    out.snr_db = snr_db;
    out.gmi = 6.0 - mean;
    out.mi = 6.0 - m.sum_sym / double(m.n);
    out.n_samples = m.n;
    out.std_err = std::sqrt(var / double(m.n));
    if (!std::isfinite(out.gmi)) throw std::runtime_error("gmi_estimate: non-finite result");
    return out;
}

/// Symbol-wise mutual information (same channel and sampling as gmi_estimate).
inline SnrPoint mi_estimate(const Constellation4D& c, double snr_db, std::size_t n_samples,
                            std::uint64_t seed) {
    SnrPoint p = gmi_estimate(c, snr_db, n_samples, seed);
    std::swap(p.gmi, *p.mi);  // report MI in the primary slot
    return p;
}

struct RequiredSnr {
    double snr_db = 0.0;
    bool bracketed = false;   // false: target not reachable inside [lo, hi]
};

/// Bisection on snr_db until the bracket closes within tol_db. Common random
/// numbers (one seed for every evaluation) keep the objective deterministic
/// and monotone.
inline RequiredSnr required_snr(const Constellation4D& c, double target_gmi, double tol_db,
                                std::size_t n_samples, std::uint64_t seed,
                                double lo_db = -10.0, double hi_db = 30.0) {
    if (!(target_gmi > 0.0) || !(target_gmi < 6.0))
        throw std::invalid_argument("required_snr: target must be in (0, 6)");
    detail::DemapContext ctx(c);
    auto gmi_at = [&](double snr_db) {
        const auto m = detail::run_awgn_mc(ctx, snr_db, n_samples, seed);
        return 6.0 - m.sum_bit / double(m.n);
    };
    double glo = gmi_at(lo_db), ghi = gmi_at(hi_db);
    if (glo >= target_gmi) return {lo_db, false};
    if (ghi < target_gmi) return {hi_db, false};
    double lo = lo_db, hi = hi_db;
    while (hi - lo > tol_db) {
        const double mid = 0.5 * (lo + hi);
        if (gmi_at(mid) < target_gmi) lo = mid;
        else hi = mid;
    }
    return {0.5 * (lo + hi), true};
}

/// gmi_estimate over a grid; each point gets its own substream so results are
/// independent of evaluation order.
inline std::vector<SnrPoint> gmi_sweep(const Constellation4D& c, std::span<const double> snr_grid_db,
                                       std::size_t n_samples, std::uint64_t seed) {
    std::vector<SnrPoint> out(snr_grid_db.size());
    for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
        std::uint64_t sm = seed;
        out[i] = gmi_estimate(c, snr_grid_db[i], n_samples, splitmix64(sm) + i);
    }
    return out;
}

/// GMI of externally produced decision-point samples (fiber or quantized
/// chains): Gaussian decoding metric with the supplied per-real-dimension
/// noise variance, demapped against `ref`.
inline double gmi_from_samples(const Constellation4D& ref, std::span<const std::size_t> tx_indices,
                               std::span<const Point4D> rx, double sigma2_per_dim) {
    if (tx_indices.size() != rx.size()) throw std::invalid_argument("size mismatch");
    detail::DemapContext ctx(ref);
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma2_per_dim);
    const std::size_t n = rx.size();
    const std::size_t batch = 4096;
    const std::size_t n_batches = (n + batch - 1) / batch;
    std::vector<double> partial(n_batches, 0.0);
    parallel_for(n_batches, [&](std::size_t bi) {
        const std::size_t lo = bi * batch, hi = std::min(n, lo + batch);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            s += detail::demap_sample(ctx, rx[i].x.real(), rx[i].x.imag(), rx[i].y.real(),
                                      rx[i].y.imag(), tx_indices[i], inv_two_sigma2)
                     .bit_loss;
        }
        partial[bi] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return 6.0 - total / double(n);
}

/// Hard minimum-distance decisions; returns bit error count over 6n bits.
inline std::size_t count_bit_errors(const Constellation4D& ref, std::span<const std::size_t> tx_indices,
                                    std::span<const Point4D> rx) {
    detail::DemapContext ctx(ref);
    const std::size_t n = rx.size();
    const std::size_t batch = 4096;
    const std::size_t n_batches = (n + batch - 1) / batch;
    std::vector<std::size_t> partial(n_batches, 0);
    parallel_for(n_batches, [&](std::size_t bi) {
        const std::size_t lo = bi * batch, hi = std::min(n, lo + batch);
        std::size_t errs = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            double best = 1e300;
            std::size_t arg = 0;
            for (std::size_t a = 0; a < 64; ++a) {
                const double dxr = rx[i].x.real() - ctx.xr[a];
                const double dxi = rx[i].x.imag() - ctx.xi[a];
                const double dyr = rx[i].y.real() - ctx.yr[a];
                const double dyi = rx[i].y.imag() - ctx.yi[a];
                const double d = dxr * dxr + dxi * dxi + dyr * dyr + dyi * dyi;
                if (d < best) { best = d; arg = a; }
            }
            errs += std::size_t(__builtin_popcount(
                unsigned(ctx.labels[arg] ^ ctx.labels[tx_indices[i]])));
        }
        partial[bi] = errs;
    });
    std::size_t total = 0;
    for (auto e : partial) total += e;
    return total;
}

} // namespace fourd
