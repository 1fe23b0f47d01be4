#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fourd {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// One dual-polarization symbol: complex amplitude on each tributary.
struct Point4D {
    cdouble x{};
    cdouble y{};
};

inline double sed4(const Point4D& a, const Point4D& b) {
    return std::norm(a.x - b.x) + std::norm(a.y - b.y);
}

inline double energy4(const Point4D& p) {
    return std::norm(p.x) + std::norm(p.y);
}

/// 64-point dual-polarization format with a 6-bit labeling.
/// points[i] carries labels[i]; labels are a bijection onto {0..63} with
/// b1 as the most significant bit. Builders normalize to unit mean energy
/// per polarization.
struct Constellation4D {
    std::vector<Point4D> points;          // 64 entries
    std::vector<std::uint8_t> labels;     // 64 six-bit words
    std::string name;
    double ring_ratio = 1.0;
    double rotation = 0.0;

    const Point4D& point_of_label(std::uint8_t lab) const { return points[index_of_label_[lab & 63]]; }
    std::size_t index_of_label(std::uint8_t lab) const { return index_of_label_[lab & 63]; }

    double mean_energy_4d() const {
        double s = 0.0;
        for (const auto& p : points) s += energy4(p);
        return s / double(points.size());
    }

    void rebuild_index() {
        index_of_label_.assign(64, 64);
        for (std::size_t i = 0; i < labels.size(); ++i) index_of_label_[labels[i]] = i;
        for (std::size_t v : index_of_label_)
            if (v >= 64) throw std::runtime_error("labels are not a bijection onto 6-bit words");
    }

    /// Scale each polarization to unit mean energy.
    void normalize_per_polarization() {
        double ex = 0.0, ey = 0.0;
        for (const auto& p : points) { ex += std::norm(p.x); ey += std::norm(p.y); }
        ex /= double(points.size());
        ey /= double(points.size());
        const double sx = 1.0 / std::sqrt(ex), sy = 1.0 / std::sqrt(ey);
        for (auto& p : points) { p.x *= sx; p.y *= sy; }
    }

private:
    std::vector<std::size_t> index_of_label_ = std::vector<std::size_t>(64, 64);
};

namespace detail {

inline cdouble unit_phasor(double deg) {
    double rad = deg * kPi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

// Quadrant index 0..3 (counterclockwise from the +I/+Q quadrant). Angles on a
// main axis belong to the clockwise neighboring quadrant: 0 deg -> Q4,
// 90 -> Q1, 180 -> Q2, 270 -> Q3.
inline int quadrant_of_angle(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d < 0) d += 360.0;
    const double eps = 1e-9;
    if (d < eps || d > 360.0 - eps) return 3;
    if (std::abs(d - 90.0) < eps) return 0;
    if (std::abs(d - 180.0) < eps) return 1;
    if (std::abs(d - 270.0) < eps) return 2;
    return int(d / 90.0);
}

inline constexpr std::uint8_t kQuadrantGray[4] = {0b00, 0b01, 0b11, 0b10};

} // namespace detail

/// Ring-switched 64-point format: a diagonal QPSK on radius R1 paired with an
/// 8-PSK on radius R2 = R1/ring_ratio on the opposite polarization. The
/// X-polarization 8-PSK sits on the pi/4 grid (four of its points on the main
/// axes); the Y-polarization 8-PSK is rotated by `rotation` relative to that
/// grid. Labels: [b1 b2] X quadrant, [b3 b4] Y quadrant (Gray around the
/// circle, on-axis points assigned clockwise), b5 selects which polarization
/// carries the inner ring, b6 indexes the outer-ring point inside its
/// quadrant; the two rings carry complementary index patterns so that every
/// minimum-distance pair differs in exactly one bit.
namespace detail {

/// Position bit of each 8-PSK point inside its quadrant (two points per
/// quadrant, ranked by angle). The X ring uses the same (1, 0) pattern in
/// every quadrant; the Y ring alternates the pattern between quadrants, which
/// keeps all ring-adjacent pairs at Hamming distance one.
inline std::array<int, 8> ring_position_bits(const std::array<double, 8>& angles_deg,
                                             bool alternate_per_quadrant) {
    std::array<int, 8> bits{};
    for (int q = 0; q < 4; ++q) {
        int idx[2];
        double ang[2];
        int found = 0;
        for (int k = 0; k < 8; ++k) {
            if (quadrant_of_angle(angles_deg[k]) != q) continue;
            if (found >= 2) throw std::runtime_error("ring has more than 2 points in a quadrant");
            double a = std::fmod(angles_deg[k], 360.0);
            if (a < 1e-9) a += 360.0;  // 0 deg ranks after 315 inside Q4
            idx[found] = k;
            ang[found] = a;
            ++found;
        }
        if (found != 2) throw std::runtime_error("ring must have 2 points per quadrant");
        if (ang[0] > ang[1]) std::swap(idx[0], idx[1]);
        int first = alternate_per_quadrant ? (q % 2) : 1;
        bits[idx[0]] = first;
        bits[idx[1]] = 1 - first;
    }
    return bits;
}

} // namespace detail

inline Constellation4D build_rs64(double ring_ratio, double rotation) {
    if (!(ring_ratio > 0.0) || ring_ratio > 1.0)
        throw std::invalid_argument("build_rs64: ring_ratio must be in (0, 1]");
    const double r1 = 1.0, r2 = 1.0 / ring_ratio;
    const double rot_deg = rotation * 180.0 / kPi;

    std::array<double, 8> ax_deg, ay_deg;
    for (int k = 0; k < 8; ++k) {
        ax_deg[k] = 45.0 * k;
        ay_deg[k] = 45.0 * k + rot_deg;
    }
    const auto pos_x = detail::ring_position_bits(ax_deg, /*alternate_per_quadrant=*/false);
    const auto pos_y = detail::ring_position_bits(ay_deg, /*alternate_per_quadrant=*/true);

    Constellation4D c;
    c.name = "4D-2A-RS64";
    c.ring_ratio = ring_ratio;
    c.rotation = rotation;
    c.points.reserve(64);
    c.labels.reserve(64);

    auto qpsk_angle = [](int q) { return 45.0 + 90.0 * q; };

    // configuration A (b5 = 0): X inner QPSK, Y outer 8-PSK
    for (int qx = 0; qx < 4; ++qx) {
        for (int k = 0; k < 8; ++k) {
            const int qy = detail::quadrant_of_angle(ay_deg[k]);
            Point4D p{r1 * detail::unit_phasor(qpsk_angle(qx)), r2 * detail::unit_phasor(ay_deg[k])};
            std::uint8_t lab = std::uint8_t((detail::kQuadrantGray[qx] << 4) |
                                            (detail::kQuadrantGray[qy] << 2) | pos_y[k]);
            c.points.push_back(p);
            c.labels.push_back(lab);
        }
    }
    // configuration B (b5 = 1): X outer 8-PSK, Y inner QPSK
    for (int k = 0; k < 8; ++k) {
        for (int qy = 0; qy < 4; ++qy) {
            const int qx = detail::quadrant_of_angle(ax_deg[k]);
            Point4D p{r2 * detail::unit_phasor(ax_deg[k]), r1 * detail::unit_phasor(qpsk_angle(qy))};
            std::uint8_t lab = std::uint8_t((detail::kQuadrantGray[qx] << 4) |
                                            (detail::kQuadrantGray[qy] << 2) | 0b10 | pos_x[k]);
            c.points.push_back(p);
            c.labels.push_back(lab);
        }
    }
    c.normalize_per_polarization();
    c.rebuild_index();
    return c;
}

/// Two nested 8-PSK rings per polarization with complementary ring choice
/// across polarizations. Phases sit on the 22.5 + 45k grid; [b1 b2 b3] Gray-
/// code the X phase, [b4 b5 b6] the Y phase, and the overall 6-bit parity
/// selects which polarization takes the inner ring, so every single bit flip
/// swaps the rings.
inline Constellation4D build_2a8psk(double ring_ratio) {
    if (!(ring_ratio > 0.0) || ring_ratio > 1.0)
        throw std::invalid_argument("build_2a8psk: ring_ratio must be in (0, 1]");
    const double r2 = 1.0, r1 = ring_ratio;

    int inverse_gray[8];
    for (int p = 0; p < 8; ++p) inverse_gray[p ^ (p >> 1)] = p;

    Constellation4D c;
    c.name = "4D-2A-8PSK";
    c.ring_ratio = ring_ratio;
    c.points.reserve(64);
    c.labels.reserve(64);
    for (int lab = 0; lab < 64; ++lab) {
        const int px = inverse_gray[(lab >> 3) & 7];
        const int py = inverse_gray[lab & 7];
        const int parity = __builtin_popcount(unsigned(lab)) & 1;
        const double rx = parity == 0 ? r1 : r2;
        const double ry = parity == 0 ? r2 : r1;
        c.points.push_back({rx * detail::unit_phasor(22.5 + 45.0 * px),
                            ry * detail::unit_phasor(22.5 + 45.0 * py)});
        c.labels.push_back(std::uint8_t(lab));
    }
    c.normalize_per_polarization();
    c.rebuild_index();
    return c;
}

/// Orthant-symmetric polarization-ring-switched format: four first-orthant
/// prototypes (inner ring on the diagonal, outer ring at 45 +- angle) and
/// their sign reflections. [b1..b4] are the sign bits of the four real rails;
/// [b5 b6] Gray-cycle the prototypes so the four cross-configuration
/// neighbors share one distance.
inline Constellation4D build_64prs(double ring_ratio, double angle) {
    if (!(ring_ratio > 0.0) || ring_ratio > 1.0)
        throw std::invalid_argument("build_64prs: ring_ratio must be in (0, 1]");
    const double r2 = 1.0, r1 = ring_ratio;
    const double ang_deg = angle * 180.0 / kPi;

    struct Proto { cdouble x, y; std::uint8_t b56; };
    const Proto protos[4] = {
        {r1 * detail::unit_phasor(45.0), r2 * detail::unit_phasor(45.0 + ang_deg), 0b00},
        {r2 * detail::unit_phasor(45.0 + ang_deg), r1 * detail::unit_phasor(45.0), 0b01},
        {r1 * detail::unit_phasor(45.0), r2 * detail::unit_phasor(45.0 - ang_deg), 0b11},
        {r2 * detail::unit_phasor(45.0 - ang_deg), r1 * detail::unit_phasor(45.0), 0b10},
    };

    Constellation4D c;
    c.name = "4D-64PRS";
    c.ring_ratio = ring_ratio;
    c.rotation = angle;
    c.points.reserve(64);
    c.labels.reserve(64);
    for (int s = 0; s < 16; ++s) {
        const double s1 = (s & 8) ? -1.0 : 1.0;  // b1: sign of Re(x)
        const double s2 = (s & 4) ? -1.0 : 1.0;  // b2: sign of Im(x)
        const double s3 = (s & 2) ? -1.0 : 1.0;  // b3: sign of Re(y)
        const double s4 = (s & 1) ? -1.0 : 1.0;  // b4: sign of Im(y)
        for (const auto& pr : protos) {
            Point4D p{{s1 * std::abs(pr.x.real()), s2 * std::abs(pr.x.imag())},
                      {s3 * std::abs(pr.y.real()), s4 * std::abs(pr.y.imag())}};
            c.points.push_back(p);
            c.labels.push_back(std::uint8_t((s << 2) | pr.b56));
        }
    }
    c.normalize_per_polarization();
    c.rebuild_index();
    return c;
}

/// Per-polarization 8QAM-star (inner square ring, outer axis ring with
/// amplitude ratio (1+sqrt(3))/sqrt(2)), labeled with an interleaved 3-bit
/// map in angular order; the 4D format is the Cartesian product of the two
/// tributaries.
inline Constellation4D build_pdm8qamstar() {
    const double ri = std::sqrt(2.0);
    const double ro = 1.0 + std::sqrt(3.0);
    // per-pol labels by angular position k*45 deg; even k = outer ring
    static constexpr std::uint8_t kLab8[8] = {0b010, 0b000, 0b100, 0b001, 0b101, 0b011, 0b111, 0b110};
    cdouble pol[8];
    for (int k = 0; k < 8; ++k)
        pol[k] = ((k % 2 == 0) ? ro : ri) * detail::unit_phasor(45.0 * k);

    Constellation4D c;
    c.name = "PDM-8QAM-star";
    c.ring_ratio = ri / ro;
    c.points.reserve(64);
    c.labels.reserve(64);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            c.points.push_back({pol[i], pol[j]});
            c.labels.push_back(std::uint8_t((kLab8[i] << 3) | kLab8[j]));
        }
    c.normalize_per_polarization();
    c.rebuild_index();
    return c;
}

/// 8 dB-optimal shaping parameters recovered with the optimizer module and
/// pinned as library constants (the GMI optimum is flat at the 1e-3-bit level
/// around these values).
inline constexpr double kRingRatio2A8Psk8dB = 0.65;
inline constexpr double kRingRatio64Prs8dB = 0.54;
inline constexpr double kAngle64Prs8dBRad = 25.5 * kPi / 180.0;
inline constexpr double kRs64DefaultRingRatio = 0.5;
inline constexpr double kRs64DefaultRotationRad = kPi / 8.0;

inline Constellation4D build_named(const std::string& name) {
    if (name == "rs64") return build_rs64(kRs64DefaultRingRatio, kRs64DefaultRotationRad);
    if (name == "2a8psk") return build_2a8psk(kRingRatio2A8Psk8dB);
    if (name == "64prs") return build_64prs(kRingRatio64Prs8dB, kAngle64Prs8dBRad);
    if (name == "pdm8qamstar") return build_pdm8qamstar();
    throw std::invalid_argument("unknown format name: " + name);
}

/// Point carrying the given 6-bit word.
inline Point4D map_bits(const Constellation4D& c, std::uint8_t bits) {
    return c.point_of_label(bits);
}

struct GeometryMetrics {
    double msed = 0.0;
    std::size_t kissing = 0;       // pair count at MSED
    double papr = 0.0;
    bool constant_modulus = false;
    bool gray_at_msed = false;
};

struct SedHistogram {
    struct Entry {
        double d2 = 0.0;
        std::size_t count_dh1 = 0;
        std::size_t count_dhgt1 = 0;
    };
    std::vector<Entry> entries;    // d2 strictly increasing
};

/// Complete pairwise SED census split by Hamming distance 1 vs > 1.
/// Bins within `merge_tol` of each other collapse.
inline SedHistogram sed_histogram(const Constellation4D& c, double merge_tol = 1e-6) {
    const std::size_t n = c.points.size();
    std::vector<std::pair<double, int>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            int dh = __builtin_popcount(unsigned(c.labels[i] ^ c.labels[j]));
            pairs.emplace_back(sed4(c.points[i], c.points[j]), dh);
        }
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    SedHistogram h;
    for (const auto& [d2, dh] : pairs) {
        if (h.entries.empty() || d2 - h.entries.back().d2 > merge_tol) {
            h.entries.push_back({d2, 0, 0});
        }
        if (dh == 1) ++h.entries.back().count_dh1;
        else ++h.entries.back().count_dhgt1;
    }
    return h;
}

/// Minimum squared distance, kissing number, PAPR and labeling flags.
/// Pairs within `rel_tol` (relative) of the minimum count toward the kissing
/// number.
inline GeometryMetrics geometry_metrics(const Constellation4D& c, double rel_tol = 1e-9) {
    const std::size_t n = c.points.size();
    GeometryMetrics m;
    double msed = 1e300;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            msed = std::min(msed, sed4(c.points[i], c.points[j]));
    m.msed = msed;
    m.gray_at_msed = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (sed4(c.points[i], c.points[j]) <= msed * (1.0 + rel_tol)) {
                ++m.kissing;
                if (__builtin_popcount(unsigned(c.labels[i] ^ c.labels[j])) != 1)
                    m.gray_at_msed = false;
            }
        }
    double emax = 0.0, emin = 1e300, esum = 0.0;
    for (const auto& p : c.points) {
        double e = energy4(p);
        emax = std::max(emax, e);
        emin = std::min(emin, e);
        esum += e;
    }
    m.papr = emax / (esum / double(n));
    m.constant_modulus = (emax - emin) <= 1e-12 * emax;
    return m;
}

/// Plain-text table: one row per symbol, columns
///   label(binary, b1 first)  Re(x)  Im(x)  Re(y)  Im(y)
/// with 12 significant digits.
inline void write_table(const Constellation4D& c, std::ostream& os) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        std::string bits(6, '0');
        for (int b = 0; b < 6; ++b)
            if (c.labels[i] & (1 << (5 - b))) bits[b] = '1';
        char line[256];
        std::snprintf(line, sizeof line, "%s %.12g %.12g %.12g %.12g\n", bits.c_str(),
                      c.points[i].x.real(), c.points[i].x.imag(),
                      c.points[i].y.real(), c.points[i].y.imag());
        os << line;
    }
}

inline Constellation4D read_table(std::istream& is, const std::string& name = "imported") {
    Constellation4D c;
    c.name = name;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string bits;
        double xr, xi, yr, yi;
        if (!(ss >> bits >> xr >> xi >> yr >> yi))
            throw std::runtime_error("bad constellation table row: " + line);
        if (bits.size() != 6) throw std::runtime_error("label must have 6 bits");
        std::uint8_t lab = 0;
        for (char ch : bits) {
            if (ch != '0' && ch != '1') throw std::runtime_error("label must be binary");
            lab = std::uint8_t((lab << 1) | (ch == '1'));
        }
        c.points.push_back({{xr, xi}, {yr, yi}});
        c.labels.push_back(lab);
    }
    if (c.points.size() != 64) throw std::runtime_error("expected 64 rows");
    c.rebuild_index();
    return c;
}

} // namespace fourd
