#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fourd/constellation.hpp"
#include "fourd/infometrics.hpp"

namespace fourd {

struct OptTracePoint {
    std::vector<double> params;
    double gmi = 0.0;
    double std_err = 0.0;
};

struct OptResult {
    std::vector<double> best_params;
    double best_gmi = 0.0;
    std::vector<OptTracePoint> trace;
};

namespace detail {

/// Objective shared by the search routines: GMI of builder(params) at a fixed
/// SNR with common random numbers, so repeat evaluations at equal params give
/// identical values and the noisy surface behaves deterministically.
class CrnObjective {
public:
    CrnObjective(std::function<Constellation4D(const std::vector<double>&)> builder, double snr_db,
                 std::size_t n_samples, std::uint64_t seed)
        : builder_(std::move(builder)), snr_db_(snr_db), n_samples_(n_samples), seed_(seed) {}

    double operator()(const std::vector<double>& params, OptResult& res) const {
        Constellation4D c = builder_(params);
        DemapContext ctx(c);
        const auto m = run_awgn_mc(ctx, snr_db_, n_samples_, seed_);
        const double mean = m.sum_bit / double(m.n);
        const double var = std::max(0.0, m.sumsq_bit / double(m.n) - mean * mean);
        const double g = 6.0 - mean;
        res.trace.push_back({params, g, std::sqrt(var / double(m.n))});
        return g;
    }

private:
    std::function<Constellation4D(const std::vector<double>&)> builder_;
    double snr_db_;
    std::size_t n_samples_;
    std::uint64_t seed_;
};

} // namespace detail

/// Golden-section maximization of GMI over the ring ratio. Assumes the
/// objective is unimodal on [lo, hi] (checked; falls back to a dense grid if
/// the bracket mis-orders, which flags non-unimodality).
inline OptResult optimize_ring_ratio(
    const std::function<Constellation4D(double)>& format_builder, double snr_db,
    double ratio_lo, double ratio_hi, double tol, std::size_t n_samples, std::uint64_t seed) {
    if (!(ratio_lo > 0.0) || ratio_hi > 1.0 || ratio_lo > ratio_hi)
        throw std::invalid_argument("optimize_ring_ratio: bounds must satisfy 0 < lo <= hi <= 1");
    OptResult res;
    detail::CrnObjective obj([&](const std::vector<double>& p) { return format_builder(p[0]); },
                             snr_db, n_samples, seed);
    if (ratio_hi - ratio_lo < 1e-12) {
        const double g = obj({ratio_lo}, res);
        res.best_params = {ratio_lo};
        res.best_gmi = g;
        return res;
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = ratio_lo, b = ratio_hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = obj({c}, res), fd = obj({d}, res);
    bool fallback = false;
    while (b - a > tol) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj({c}, res);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj({d}, res);
        }
        if (!(a <= c && c <= d && d <= b)) { fallback = true; break; }
    }
    if (fallback) {
        // dense grid over the original interval
        const int n = 41;
        for (int i = 0; i < n; ++i)
            obj({ratio_lo + (ratio_hi - ratio_lo) * double(i) / double(n - 1)}, res);
    }
    const OptTracePoint* best = &res.trace.front();
    for (const auto& t : res.trace)
        if (t.gmi > best->gmi) best = &t;
    res.best_params = best->params;
    res.best_gmi = best->gmi;
    return res;
}

/// Coarse grid over (ratio, angle) followed by local golden-section
/// refinement along each axis in turn.
inline OptResult optimize_params_2d(
    const std::function<Constellation4D(double, double)>& format_builder, double snr_db,
    double ratio_lo, double ratio_hi, double angle_lo, double angle_hi, int grid_n,
    int refine_rounds, double tol, std::size_t n_samples, std::uint64_t seed) {
    if (!(ratio_lo > 0.0) || ratio_hi > 1.0 || ratio_lo > ratio_hi || angle_lo > angle_hi)
        throw std::invalid_argument("optimize_params_2d: invalid bounds");
    OptResult res;
    detail::CrnObjective obj(
        [&](const std::vector<double>& p) { return format_builder(p[0], p[1]); }, snr_db,
        n_samples, seed);

    double best_r = ratio_lo, best_a = angle_lo, best_g = -1e300;
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
            const double r = ratio_lo + (ratio_hi - ratio_lo) * double(i) / double(grid_n - 1);
            const double a = angle_lo + (angle_hi - angle_lo) * double(j) / double(grid_n - 1);
            const double g = obj({r, a}, res);
            if (g > best_g) { best_g = g; best_r = r; best_a = a; }
        }

    double rad_r = (ratio_hi - ratio_lo) / double(grid_n - 1);
    double rad_a = (angle_hi - angle_lo) / double(grid_n - 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int round = 0; round < refine_rounds; ++round) {
        for (int axis = 0; axis < 2; ++axis) {
            double lo = axis == 0 ? std::max(ratio_lo, best_r - rad_r) : std::max(angle_lo, best_a - rad_a);
            double hi = axis == 0 ? std::min(ratio_hi, best_r + rad_r) : std::min(angle_hi, best_a + rad_a);
            auto eval = [&](double v) {
                return axis == 0 ? obj({v, best_a}, res) : obj({best_r, v}, res);
            };
            double a1 = lo, b1 = hi;
            double c1 = b1 - inv_phi * (b1 - a1), d1 = a1 + inv_phi * (b1 - a1);
            double fc = eval(c1), fd = eval(d1);
            while (b1 - a1 > tol) {
                if (fc > fd) { b1 = d1; d1 = c1; fd = fc; c1 = b1 - inv_phi * (b1 - a1); fc = eval(c1); }
                else { a1 = c1; c1 = d1; fc = fd; d1 = a1 + inv_phi * (b1 - a1); fd = eval(d1); }
            }
            const double v = 0.5 * (a1 + b1);
            const double g = eval(v);
            if (g > best_g) {
                best_g = g;
                (axis == 0 ? best_r : best_a) = v;
            }
        }
        rad_r *= inv_phi;
        rad_a *= inv_phi;
    }
    res.best_params = {best_r, best_a};
    res.best_gmi = best_g;
    return res;
}

} // namespace fourd
