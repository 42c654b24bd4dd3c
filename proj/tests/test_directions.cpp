#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rigidlab/directions.hpp"

using namespace rigidlab;

namespace {

constexpr double kPi = std::numbers::pi;

const Box kBox{-2.0, 2.0, -2.0, 2.0};

// Distance of a unit vector from the great circle of the plane z = px x + py y.
double circle_residual(const UnitVec3& v, double px, double py) {
    return std::fabs(v.z() - px * v.x() - py * v.y()) /
           std::sqrt(px * px + py * py + 1.0);
}

ArcProfile synthetic_profile(const std::vector<double>& zmax, double zmin_value) {
    ArcProfile p;
    const std::size_t n = zmax.size();
    p.bins.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        p.bins[k].theta_lo = -kPi + 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        p.bins[k].theta_hi =
            -kPi + 2.0 * kPi * static_cast<double>(k + 1) / static_cast<double>(n);
        p.bins[k].zmax = zmax[k];
        p.bins[k].zmin = zmin_value;
        p.bins[k].count = 1;
    }
    return p;
}

}  // namespace

TEST_CASE("constant fields give horizontal chords only") {
    DirectionSet ds = sample_direction_set(make_field("5", 2), kBox, 100, 42);
    REQUIRE(ds.samples.size() == 2 * 100 * 99 / 2);
    for (const auto& v : ds.samples) CHECK(v.z() == 0.0);
}

TEST_CASE("plane chords lie on the plane's great circle") {
    DirectionSet ds = sample_direction_set(make_field("1+2*x+3*y", 2), kBox, 150, 7);
    for (const auto& v : ds.samples) CHECK(circle_residual(v, 2.0, 3.0) <= 1e-10);
}

TEST_CASE("steep chords of x^2 reach high z") {
    DirectionSet ds = sample_direction_set(make_field("x^2", 2), kBox, 200, 3);
    double zmax = 0.0;
    for (const auto& v : ds.samples) zmax = std::max(zmax, v.z());
    // e.g. the chord (2,0,4)-(1.9,0,3.61) already has z-component ~0.97
    CHECK(zmax >= 0.9);
}

TEST_CASE("sampling is deterministic and antipodally closed") {
    ScalarField f = make_field("x^2-y", 2);
    DirectionSet a = sample_direction_set(f, kBox, 120, 99);
    DirectionSet b = sample_direction_set(f, kBox, 120, 99);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK((a.samples[i].vec() - b.samples[i].vec()).norm() == 0.0);

    // multiset closed under v -> -v: negating everything and sorting gives
    // the same canonical list
    std::vector<Eigen::Vector3d> neg;
    neg.reserve(a.samples.size());
    for (const auto& v : a.samples) neg.push_back(-v.vec());
    std::sort(neg.begin(), neg.end(), [](const auto& p, const auto& q) {
        if (p.x() != q.x()) return p.x() < q.x();
        if (p.y() != q.y()) return p.y() < q.y();
        return p.z() < q.z();
    });
    for (std::size_t i = 0; i < neg.size(); ++i)
        CHECK((neg[i] - a.samples[i].vec()).norm() == 0.0);

    DirectionSet c = sample_direction_set(f, kBox, 120, 100);
    bool all_equal = c.samples.size() == a.samples.size();
    if (all_equal)
        for (std::size_t i = 0; i < c.samples.size(); ++i)
            all_equal = all_equal && (c.samples[i].vec() - a.samples[i].vec()).norm() == 0.0;
    CHECK(!all_equal);  // a different seed moves the samples
}

TEST_CASE("pair budget caps the chord count") {
    DirectionSet ds = sample_direction_set(make_field("x*y", 2), kBox, 80, 5, 500);
    CHECK(ds.meta.pairs_used == 500);
    CHECK(ds.samples.size() == 1000);
}

TEST_CASE("near-vertical chords are rejected, stored samples stay off the poles") {
    // extreme slope: most chords point almost straight up and get dropped
    DirectionSet ds = sample_direction_set(make_field("1000000000*x", 2), kBox, 200, 12);
    CHECK(ds.samples.size() < 2 * (200 * 199 / 2));  // some chords rejected
    for (const auto& v : ds.samples) CHECK(std::fabs(v.z()) <= 1.0 - 1e-12);
}

TEST_CASE("sampling input validation") {
    ScalarField f = make_field("x", 2);
    CHECK_THROWS_AS(sample_direction_set(f, kBox, 1, 0), TooFewSamples);
    CHECK_THROWS_AS(sample_direction_set(f, Box{1, 1, 0, 2}, 10, 0), ConfigError);
    CHECK_THROWS_AS(sample_direction_set(make_field("ln(x)", 2), Box{-1, 1, -1, 1}, 10, 0),
                    DomainError);
}

TEST_CASE("profile of a constant field is the equator") {
    DirectionSet ds = sample_direction_set(make_field("7", 2), kBox, 200, 11);
    ArcProfile p = estimate_profile(ds, 36);
    for (const auto& b : p.bins) {
        REQUIRE(b.count > 0);
        CHECK(b.zmax == 0.0);
        CHECK(b.zmin == 0.0);
    }
}

TEST_CASE("profile of a plane matches the analytic direction circle") {
    // z(theta) = u / sqrt(1 + u^2) with u = 2 cos(theta) + 3 sin(theta);
    // bin zmax estimates the maximum of z over the bin's azimuth range.
    DirectionSet ds = sample_direction_set(make_field("1+2*x+3*y", 2), Box{-5, 5, -5, 5}, 2000, 1);
    const std::size_t bins = 360;
    ArcProfile p = estimate_profile(ds, bins);
    auto curve = [](double theta) {
        double u = 2.0 * std::cos(theta) + 3.0 * std::sin(theta);
        return u / std::sqrt(1.0 + u * u);
    };
    for (const auto& b : p.bins) {
        REQUIRE(b.count > 0);
        double analytic = -1.0;
        for (int i = 0; i <= 20; ++i)
            analytic = std::max(
                analytic, curve(b.theta_lo + (b.theta_hi - b.theta_lo) * i / 20.0));
        CHECK(std::fabs(b.zmax - analytic) <= 0.02);
    }
}

TEST_CASE("profile of two antipodal samples") {
    DirectionSet ds;
    UnitVec3 v{1.0, 0.0, 0.0};
    ds.samples = {v, -v};
    ArcProfile p = estimate_profile(ds, 8);
    std::size_t nonempty = 0;
    for (const auto& b : p.bins) {
        if (b.count == 0) continue;
        ++nonempty;
        CHECK(b.count == 1);
        CHECK(b.zmax == 0.0);
        CHECK(b.zmin == 0.0);
    }
    CHECK(nonempty == 2);  // the sample and its antipode
    CHECK_THROWS_AS(estimate_profile(DirectionSet{}, 8), EmptyDirectionSet);
    CHECK_THROWS_AS(estimate_profile(ds, 4), ConfigError);
}

TEST_CASE("profile antipodal consistency is exact for even bin counts") {
    DirectionSet ds = sample_direction_set(make_field("x^2+sin(y)", 2), kBox, 300, 17);
    const std::size_t bins = 36;
    ArcProfile p = estimate_profile(ds, bins);
    CHECK(p.meta.antipodal_tolerance == 0.0);
    CHECK(p.meta.sample_count == ds.samples.size());
    for (std::size_t k = 0; k < bins; ++k) {
        const auto& a = p.bins[k];
        const auto& b = p.bins[(k + bins / 2) % bins];
        REQUIRE(a.count == b.count);
        if (a.count == 0) continue;
        CHECK(a.zmin == -b.zmax);
        CHECK(a.zmax == -b.zmin);
    }
}

TEST_CASE("deformation laws") {
    ScalarField f = make_field("1+2*x+3*y", 2);
    DirectionSet ds = sample_direction_set(f, kBox, 120, 2);

    DirectionSet same = deform_direction_set(ds, 1.0);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        CHECK((same.samples[i].vec() - ds.samples[i].vec()).norm() == 0.0);

    DirectionSet equator = sample_direction_set(make_field("3", 2), kBox, 80, 2);
    DirectionSet eq2 = deform_direction_set(equator, 17.5);
    for (std::size_t i = 0; i < equator.samples.size(); ++i)
        CHECK((eq2.samples[i].vec() - equator.samples[i].vec()).norm() == 0.0);

    DirectionSet doubled = deform_direction_set(ds, 2.0);
    for (const auto& v : doubled.samples) CHECK(circle_residual(v, 4.0, 6.0) <= 1e-10);
    CHECK(doubled.meta.scale_applied == 2.0);

    DirectionSet split = deform_direction_set(deform_direction_set(ds, 3.0), 2.0);
    DirectionSet direct = deform_direction_set(ds, 6.0);
    for (std::size_t i = 0; i < split.samples.size(); ++i)
        CHECK((split.samples[i].vec() - direct.samples[i].vec()).norm() <= 1e-12);

    CHECK_THROWS_AS(deform_direction_set(ds, 0.0), ConfigError);
}

TEST_CASE("classify sampled profiles: planes and constants are Case A") {
    for (const char* src : {"1+2*x+3*y", "7"}) {
        DirectionSet ds = sample_direction_set(make_field(src, 2), Box{-5, 5, -5, 5}, 1200, 4);
        ArcProfile p = estimate_profile(ds, 180);
        CaseLabel label = classify(p);
        CAPTURE(src);
        CHECK(label.kind == CaseKind::A);
    }
}

TEST_CASE("classify synthetic profiles B, C, D") {
    const std::size_t n = 360;

    std::vector<double> all_pole(n, 1.0);
    CHECK(classify(synthetic_profile(all_pole, -1.0)).kind == CaseKind::B);

    std::vector<double> one_gap(n, 1.0);
    one_gap[77] = 0.0;
    CaseLabel c_label = classify(synthetic_profile(one_gap, -1.0));
    CHECK(c_label.kind == CaseKind::C);
    double center = -kPi + 2.0 * kPi * (77 + 0.5) / static_cast<double>(n);
    CHECK(c_label.witness_azimuth == doctest::Approx(center).epsilon(1e-12));

    std::vector<double> interval_gap(n, 1.0);
    for (std::size_t k = 100; k < 140; ++k) interval_gap[k] = 0.0;
    CaseLabel d_label = classify(synthetic_profile(interval_gap, -1.0));
    CHECK(d_label.kind == CaseKind::D);
    double length = d_label.interval_hi - d_label.interval_lo;
    CHECK(length > 0.0);
    CHECK(length < kPi);
    CHECK(length == doctest::Approx(40.0 * 2.0 * kPi / 360.0).epsilon(1e-12));

    // wrap-around interval
    std::vector<double> wrapped(n, 1.0);
    for (std::size_t k = 350; k < 360; ++k) wrapped[k] = 0.0;
    for (std::size_t k = 0; k < 10; ++k) wrapped[k] = 0.0;
    CHECK(classify(synthetic_profile(wrapped, -1.0)).kind == CaseKind::D);

    // two clusters: no case fits
    std::vector<double> two(n, 1.0);
    two[10] = 0.0;
    two[200] = 0.0;
    CHECK(classify(synthetic_profile(two, -1.0)).kind == CaseKind::Indeterminate);

    // a two-bin cluster is too wide for C and too short for D
    std::vector<double> twobins(n, 1.0);
    twobins[50] = twobins[51] = 0.0;
    CHECK(classify(synthetic_profile(twobins, -1.0)).kind == CaseKind::Indeterminate);

    // half circle and more: length constraint fails
    std::vector<double> half(n, 1.0);
    for (std::size_t k = 0; k < 180; ++k) half[k] = 0.0;
    CHECK(classify(synthetic_profile(half, -1.0)).kind == CaseKind::Indeterminate);
}

TEST_CASE("classify rejects profiles with empty bins") {
    std::vector<double> zs(16, 1.0);
    ArcProfile p = synthetic_profile(zs, -1.0);
    p.bins[3].count = 0;
    CHECK(classify(p).kind == CaseKind::Indeterminate);
}

TEST_CASE("classify is total and keeps its witnesses consistent on random profiles") {
    std::mt19937_64 rng(60601);
    std::uniform_real_distribution<double> z(-1.0, 1.0);
    std::uniform_int_distribution<int> nbins_pick(8, 96);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = nbins_pick(rng);
        std::vector<double> zmax(n);
        for (auto& v : zmax) v = std::fabs(z(rng));
        // sprinkle exact pole/equator values to hit every branch
        for (int k = 0; k < n; k += 5) zmax[k] = (trial % 2) ? 1.0 : 0.0;
        ArcProfile p = synthetic_profile(zmax, -1.0);
        CaseLabel label = classify(p);
        if (label.kind == CaseKind::D) {
            double len = label.interval_hi - label.interval_lo;
            CHECK(len > 0.0);
            CHECK(len < kPi);
        }
        if (label.kind == CaseKind::A || label.kind == CaseKind::C) {
            CHECK(label.witness_azimuth >= -kPi);
            CHECK(label.witness_azimuth <= kPi);
        }
    }
}

TEST_CASE("classification is invariant under whole-bin rotation") {
    const std::size_t n = 120;
    std::vector<double> base(n, 1.0);
    for (std::size_t k = 30; k < 50; ++k) base[k] = 0.0;
    CaseLabel reference = classify(synthetic_profile(base, -1.0));
    REQUIRE(reference.kind == CaseKind::D);

    const double width = 2.0 * kPi / static_cast<double>(n);
    for (std::size_t shift : {1u, 13u, 59u, 119u}) {
        std::vector<double> rotated(n);
        for (std::size_t k = 0; k < n; ++k) rotated[(k + shift) % n] = base[k];
        CaseLabel moved = classify(synthetic_profile(rotated, -1.0));
        CHECK(moved.kind == CaseKind::D);
        double len_ref = reference.interval_hi - reference.interval_lo;
        double len_moved = moved.interval_hi - moved.interval_lo;
        CHECK(len_moved == doctest::Approx(len_ref).epsilon(1e-12));
        // the witness interval shifts with the relabeling
        double expect_lo = reference.interval_lo + static_cast<double>(shift) * width;
        if (expect_lo > kPi) expect_lo -= 2.0 * kPi;
        CHECK(moved.interval_lo == doctest::Approx(expect_lo).epsilon(1e-9));
    }
}
