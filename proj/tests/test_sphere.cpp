#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "rigidlab/sphere.hpp"
#include "test_util.hpp"

using namespace rigidlab;
using testutil::random_unit;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("chord directions") {
    UnitVec3 v = direction({1, 0, 0}, {0, 0, 0});
    CHECK(v.x() == 1.0);
    CHECK(v.y() == 0.0);
    CHECK(v.z() == 0.0);

    CHECK_THROWS_AS(direction({1, 1, 1}, {1, 1, 1}), DegenerateChord);

    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        Eigen::Vector3d p = testutil::random_vec(rng, 5.0);
        Eigen::Vector3d q = testutil::random_vec(rng, 5.0);
        if ((p - q).norm() < 1e-9) continue;
        UnitVec3 a = direction(p, q);
        UnitVec3 b = direction(q, p);
        CHECK((a.vec() + b.vec()).norm() <= 1e-15);
        CHECK(std::fabs(a.vec().norm() - 1.0) <= 1e-12);
    }
}

TEST_CASE("psi fixes poles and equator") {
    for (double c : {0.1, 0.5, 2.0, 10.0}) {
        CHECK((psi(c, {0, 0, 1}).vec() - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);
        CHECK((psi(c, {0, 0, -1}).vec() - Eigen::Vector3d(0, 0, -1)).norm() == 0.0);
        CHECK((psi(c, {1, 0, 0}).vec() - Eigen::Vector3d(1, 0, 0)).norm() == 0.0);
        UnitVec3 e{0.3, -0.8, 0.0};
        CHECK((psi(c, e).vec() - e.vec()).norm() <= 1e-15);  // one renormalization ulp
    }
    CHECK_THROWS(psi(0.0, {1, 0, 0}));
    CHECK_THROWS(psi(-2.0, {1, 0, 0}));
}

TEST_CASE("psi at a worked point") {
    double r = std::sqrt(2.0) / 2.0;
    UnitVec3 img = psi(2.0, {0.0, r, r});
    Eigen::Vector3d expect = Eigen::Vector3d(0, 1, 2) / std::sqrt(5.0);
    CHECK(std::fabs(img.x() - expect.x()) <= 1e-15);
    CHECK(std::fabs(img.y() - expect.y()) <= 1e-15);
    CHECK(std::fabs(img.z() - expect.z()) <= 1e-15);
}

TEST_CASE("psi laws on random vectors") {
    std::mt19937_64 rng(7);
    const double cs[] = {0.1, 0.5, 2.0, 10.0};
    for (int i = 0; i < 1000; ++i) {
        UnitVec3 v = random_unit(rng);
        CHECK((psi(1.0, v).vec() - v.vec()).norm() <= 1e-15);
        for (double c1 : cs) {
            CHECK(std::fabs(psi(c1, v).vec().norm() - 1.0) <= 1e-12);
            CHECK((psi(c1, -v).vec() + psi(c1, v).vec()).norm() <= 1e-12);
            if (std::fabs(v.z()) < 1.0 - 1e-9 && (v.x() != 0.0 || v.y() != 0.0))
                CHECK(azimuth(psi(c1, v)) == doctest::Approx(azimuth(v)).epsilon(1e-12));
            for (double c2 : cs)
                CHECK((psi(c1, psi(c2, v)).vec() - psi(c1 * c2, v).vec()).norm() <= 1e-12);
        }
    }
}

TEST_CASE("azimuth convention (-pi, pi]") {
    CHECK(azimuth({1, 0, 0}) == 0.0);
    CHECK(azimuth({0, 1, 0}) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(azimuth({-1, 0, 0}) == kPi);  // never -pi
    CHECK(azimuth(UnitVec3{-1.0, -0.0, 0.0}) == kPi);
}

TEST_CASE("isometry composition") {
    std::mt19937_64 rng(11);
    RigidIsometry id = RigidIsometry::identity();
    for (int i = 0; i < 50; ++i) {
        RigidIsometry phi = testutil::random_isometry(rng);
        RigidIsometry left = compose(id, phi);
        CHECK((left.ort - phi.ort).cwiseAbs().maxCoeff() == 0.0);
        CHECK((left.trans - phi.trans).norm() == 0.0);

        RigidIsometry round = compose(phi, inverse(phi));
        CHECK((round.ort - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(round.trans.norm() <= 1e-10);

        CHECK(phi.orthogonality_error() <= 1e-10);
        CHECK(std::fabs(std::fabs(phi.ort.determinant()) - 1.0) <= 1e-10);
    }

    RigidIsometry t1 = translation({1, 2, 3});
    RigidIsometry t2 = translation({-4, 0.5, 7});
    RigidIsometry both = compose(t1, t2);
    CHECK((both.ort - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((both.trans - Eigen::Vector3d(-3, 2.5, 10)).norm() == 0.0);
}

TEST_CASE("rotation about the x-axis") {
    RigidIsometry r0 = rotation_about_x(0.0);
    CHECK((r0.ort - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);

    RigidIsometry r90 = rotation_about_x(kPi / 2);
    CHECK((r90.apply({0, 1, 0}) - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-15);

    for (double a : {0.3, -1.2, 2.9}) {
        RigidIsometry round = compose(rotation_about_x(a), rotation_about_x(-a));
        CHECK((round.ort - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("isometries preserve pairwise distances") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        RigidIsometry phi = testutil::random_isometry(rng);
        Eigen::Vector3d p = testutil::random_vec(rng, 10.0);
        Eigen::Vector3d q = testutil::random_vec(rng, 10.0);
        double before = (p - q).norm();
        double after = (phi.apply(p) - phi.apply(q)).norm();
        CHECK(std::fabs(after - before) <= 1e-10);
    }
}

TEST_CASE("nearest orthogonal projection") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
    for (int i = 0; i < 50; ++i) {
        Eigen::Matrix3d r = testutil::random_isometry(rng).ort;
        Eigen::Matrix3d perturbed = r;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) perturbed(a, b) += noise(rng);
        Eigen::Matrix3d projected = nearest_orthogonal(perturbed);
        CHECK((projected.transpose() * projected - Eigen::Matrix3d::Identity())
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10);
        CHECK((projected - r).cwiseAbs().maxCoeff() <= 5e-3);
    }
}
