#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "fourd/constellation.hpp"
#include "fourd/rng.hpp"

using namespace fourd;

namespace {

// independent brute-force oracle: minimum pairwise SED and its multiplicity
// computed directly from the coordinates, no library metric involved
std::pair<double, int> brute_msed(const std::vector<Point4D>& pts, double rel_tol = 1e-9) {
    double best = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d = std::norm(pts[i].x - pts[j].x) + std::norm(pts[i].y - pts[j].y);
            best = std::min(best, d);
        }
    int count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d = std::norm(pts[i].x - pts[j].x) + std::norm(pts[i].y - pts[j].y);
            if (d <= best * (1.0 + rel_tol)) ++count;
        }
    return {best, count};
}

std::vector<Constellation4D> all_formats() {
    return {build_rs64(kRs64DefaultRingRatio, kRs64DefaultRotationRad),
            build_2a8psk(kRingRatio2A8Psk8dB),
            build_64prs(kRingRatio64Prs8dB, kAngle64Prs8dBRad),
            build_pdm8qamstar()};
}

// table targets: (d2, count) pairs for Hamming-distance-1 SEDs, matched with
// a 0.03 window (printed values aggregate bins below their 2-decimal
// resolution)
struct TableColumn {
    const char* name;
    double msed;
    std::size_t nd;
    double papr;
    bool gray;
    bool cm;
    std::vector<std::pair<double, std::size_t>> dh1;
};

const std::vector<TableColumn>& table_targets() {
    static const std::vector<TableColumn> t = {
        {"PDM-8QAM-star", 0.84, 192, 1.58, false, false, {{0.84, 128}, {3.15, 64}}},
        {"4D-2A-8PSK", 0.88, 128, 1.0, true, true, {{0.88, 128}, {3.46, 64}}},
        {"4D-64PRS", 0.69, 32, 1.0, true, true, {{0.69, 32}, {0.90, 64}, {0.98, 64}, {5.50, 32}}},
        {"4D-2A-RS64", 0.80, 64, 1.0, true, true,
         {{0.8, 64}, {0.94, 64}, {1.39, 16}, {3.2, 32}, {5.46, 16}}},
    };
    return t;
}

void check_against_column(const Constellation4D& c, const TableColumn& col) {
    INFO(col.name);
    auto m = geometry_metrics(c);
    CHECK(std::abs(m.msed - col.msed) <= 0.01);
    CHECK(m.kissing == col.nd);
    CHECK(std::abs(m.papr - col.papr) <= 0.01);
    CHECK(m.gray_at_msed == col.gray);
    CHECK(m.constant_modulus == col.cm);

    auto h = sed_histogram(c);
    const double win = 0.03;
    std::size_t matched_bins = 0;
    for (const auto& [v, n] : col.dh1) {
        std::size_t total = 0;
        for (const auto& e : h.entries)
            if (std::abs(e.d2 - v) <= win) total += e.count_dh1;
        INFO("entry d2=" << v);
        CHECK(total == n);
    }
    for (const auto& e : h.entries) {
        if (e.count_dh1 == 0) continue;
        bool covered = false;
        for (const auto& [v, n] : col.dh1) covered = covered || std::abs(e.d2 - v) <= win;
        INFO("unexpected DH=1 bin at d2=" << e.d2);
        CHECK(covered);
        ++matched_bins;
    }
    CHECK(matched_bins > 0);
}

} // namespace

TEST_CASE("labels are a bijection and normalization holds for every format") {
    for (const auto& c : all_formats()) {
        INFO(c.name);
        REQUIRE(c.points.size() == 64);
        std::set<int> labs(c.labels.begin(), c.labels.end());
        CHECK(labs.size() == 64);
        double ex = 0, ey = 0;
        for (const auto& p : c.points) { ex += std::norm(p.x); ey += std::norm(p.y); }
        CHECK(std::abs(ex / 64.0 - 1.0) < 1e-12);
        CHECK(std::abs(ey / 64.0 - 1.0) < 1e-12);
    }
}

TEST_CASE("table of geometry metrics matches the published column values") {
    auto formats = all_formats();
    const auto& targets = table_targets();
    check_against_column(formats[3], targets[0]);
    check_against_column(formats[1], targets[1]);
    check_against_column(formats[2], targets[2]);
    check_against_column(formats[0], targets[3]);
}

TEST_CASE("rs64: ring switching structure") {
    auto c = build_rs64(0.5, kPi / 8.0);
    const double r1 = std::abs(c.points[0].x);  // config A: X inner
    int x_inner = 0, y_inner = 0;
    for (const auto& p : c.points) {
        const bool xi = std::abs(std::abs(p.x) - r1) < 1e-9;
        const bool yi = std::abs(std::abs(p.y) - r1) < 1e-9;
        CHECK(xi != yi);  // exactly one polarization on the inner ring
        x_inner += xi;
        y_inner += yi;
    }
    CHECK(x_inner == 32);
    CHECK(y_inner == 32);

    // every 2D projection has 12 distinct points (4 inner + 8 outer)
    for (int pol = 0; pol < 2; ++pol) {
        std::vector<cdouble> proj;
        for (const auto& p : c.points) proj.push_back(pol == 0 ? p.x : p.y);
        std::vector<cdouble> uniq;
        for (auto v : proj) {
            bool found = false;
            for (auto u : uniq) found = found || std::abs(u - v) < 1e-9;
            if (!found) uniq.push_back(v);
        }
        CHECK(uniq.size() == 12);
    }
}

TEST_CASE("rs64: 32 pairs near d2=0.94 with Hamming distance above one") {
    auto h = sed_histogram(build_rs64(0.5, kPi / 8.0));
    std::size_t n = 0;
    for (const auto& e : h.entries)
        if (std::abs(e.d2 - 0.94) <= 0.03) n += e.count_dhgt1;
    CHECK(n == 32);
}

TEST_CASE("rs64: rotation changes the distance profile but not the minimum at r=1/2") {
    // brute-force oracle: at ring ratio 0.5 the QPSK-adjacent and cross-ring
    // gaps coincide, so MSED is rotation-invariant while the kissing number
    // inflates at rotation 0; at r=0.55 the cross-ring gap shrinks below and
    // rotation 0 strictly reduces MSED.
    auto rot = build_rs64(0.5, kPi / 8.0);
    auto norot = build_rs64(0.5, 0.0);
    auto [m_rot, n_rot] = brute_msed(rot.points);
    auto [m_norot, n_norot] = brute_msed(norot.points);
    CHECK(std::abs(m_rot - 0.8) < 1e-12);
    CHECK(std::abs(m_norot - m_rot) < 1e-12);
    CHECK(n_norot > n_rot);
    CHECK(n_rot == 64);
    CHECK(n_norot == 80);

    auto rot55 = build_rs64(0.55, kPi / 8.0);
    auto norot55 = build_rs64(0.55, 0.0);
    CHECK(brute_msed(norot55.points).first < brute_msed(rot55.points).first - 1e-6);
}

TEST_CASE("rs64: quadrant bits move only their polarization") {
    auto c = build_rs64(0.5, kPi / 8.0);
    for (int lab = 0; lab < 64; ++lab) {
        for (int bit : {5, 4}) {  // b1, b2
            Point4D a = map_bits(c, std::uint8_t(lab));
            Point4D b = map_bits(c, std::uint8_t(lab ^ (1 << bit)));
            CHECK(std::abs(a.y - b.y) < 1e-12);
            CHECK(std::abs(a.x - b.x) > 1e-9);
        }
    }
}

TEST_CASE("map_bits inverts the labeling and spans 64 distinct points") {
    for (const auto& c : all_formats()) {
        std::vector<Point4D> seen;
        for (int lab = 0; lab < 64; ++lab) {
            Point4D p = map_bits(c, std::uint8_t(lab));
            CHECK(c.labels[c.index_of_label(std::uint8_t(lab))] == lab);
            for (const auto& q : seen)
                CHECK(std::norm(p.x - q.x) + std::norm(p.y - q.y) > 1e-12);
            seen.push_back(p);
        }
    }
}

TEST_CASE("metrics are invariant under pre-normalization scaling and global rotation") {
    Rng rng(42);
    auto base = build_rs64(0.5, kPi / 8.0);
    auto m0 = geometry_metrics(base);
    for (int trial = 0; trial < 5; ++trial) {
        Constellation4D c = base;
        const double s = 0.25 + 4.0 * rng.uniform();
        const cdouble rot = std::polar(1.0, 2.0 * kPi * rng.uniform());
        for (auto& p : c.points) { p.x *= s * rot; p.y *= s * rot; }
        c.normalize_per_polarization();
        auto m = geometry_metrics(c);
        CHECK(std::abs(m.msed - m0.msed) < 1e-9);
        CHECK(m.kissing == m0.kissing);
        CHECK(std::abs(m.papr - m0.papr) < 1e-9);
        CHECK(m.gray_at_msed == m0.gray_at_msed);
    }
}

TEST_CASE("histogram totals cover every pair") {
    for (const auto& c : all_formats()) {
        auto h = sed_histogram(c);
        std::size_t total = 0;
        double prev = -1.0;
        for (const auto& e : h.entries) {
            total += e.count_dh1 + e.count_dhgt1;
            CHECK(e.d2 > prev);
            prev = e.d2;
        }
        CHECK(total == 64 * 63 / 2);
    }
}

TEST_CASE("2a8psk: degenerate ring ratio collapses the rings, labels stay complete") {
    auto c = build_2a8psk(1.0);
    REQUIRE(c.points.size() == 64);
    std::set<int> labs(c.labels.begin(), c.labels.end());
    CHECK(labs.size() == 64);
    // the two amplitude rings coincide: each 2D projection drops from 16 to
    // 8 distinct values (phase information only)
    for (int pol = 0; pol < 2; ++pol) {
        std::vector<cdouble> uniq;
        for (const auto& p : c.points) {
            const cdouble v = pol == 0 ? p.x : p.y;
            bool found = false;
            for (auto u : uniq) found = found || std::abs(u - v) < 1e-9;
            if (!found) uniq.push_back(v);
        }
        CHECK(uniq.size() == 8);
    }
    // at any ratio below one the projections carry both rings
    auto c2 = build_2a8psk(kRingRatio2A8Psk8dB);
    std::vector<cdouble> uniq;
    for (const auto& p : c2.points) {
        bool found = false;
        for (auto u : uniq) found = found || std::abs(u - p.x) < 1e-9;
        if (!found) uniq.push_back(p.x);
    }
    CHECK(uniq.size() == 16);
}

TEST_CASE("constant modulus formats have identical 4D energy across points") {
    for (const auto& c : all_formats()) {
        if (!geometry_metrics(c).constant_modulus) continue;
        double e0 = energy4(c.points[0]);
        for (const auto& p : c.points)
            CHECK(std::abs(energy4(p) - e0) <= 1e-12 * e0);
    }
}

TEST_CASE("plain-text table round trip") {
    for (const auto& c : all_formats()) {
        std::stringstream ss;
        write_table(c, ss);
        Constellation4D back = read_table(ss, c.name);
        REQUIRE(back.points.size() == 64);
        for (std::size_t i = 0; i < 64; ++i) {
            CHECK(back.labels[i] == c.labels[i]);
            CHECK(std::abs(back.points[i].x - c.points[i].x) < 1e-10);
            CHECK(std::abs(back.points[i].y - c.points[i].y) < 1e-10);
        }
    }
}

TEST_CASE("builders reject out-of-range ring ratio") {
    CHECK_THROWS_AS(build_rs64(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_rs64(1.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_2a8psk(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_64prs(0.0, 0.4), std::invalid_argument);
}
