#pragma once

#include <Eigen/Core>

#include "rigidlab/errors.hpp"

namespace rigidlab {

// Unit vector on S^2. Renormalized on every construction so that
// |norm - 1| <= 1e-12 holds through arbitrary composition chains.
class UnitVec3 {
public:
    UnitVec3(double x, double y, double z) : UnitVec3(Eigen::Vector3d(x, y, z)) {}

    explicit UnitVec3(const Eigen::Vector3d& v) {
        double n = v.norm();
        if (n < 1e-300) throw Error("UnitVec3: cannot normalize a zero vector");
        v_ = v / n;
    }

    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    const Eigen::Vector3d& vec() const { return v_; }

    // exact componentwise negation; the antipode of a unit vector is unit
    UnitVec3 operator-() const {
        UnitVec3 out(*this);
        out.v_ = -out.v_;
        return out;
    }

private:
    Eigen::Vector3d v_;
};

// Azimuth of v in (-pi, pi], measured as atan2(y, x).
double azimuth(const UnitVec3& v);

// Chord direction (p - q) / |p - q|. Throws DegenerateChord for |p-q| < 1e-12.
UnitVec3 direction(const Eigen::Vector3d& p, const Eigen::Vector3d& q);

// The sphere self-map (x, y, z) -> (x, y, cz) / |(x, y, cz)| describing how a
// direction set deforms under horizontal scaling of the graph. Requires c > 0.
UnitVec3 psi(double c, const UnitVec3& v);

// Rigid isometry of R^3 stored as orthogonal part + translation part;
// applies as p -> ort * p + trans.
struct RigidIsometry {
    Eigen::Matrix3d ort = Eigen::Matrix3d::Identity();
    Eigen::Vector3d trans = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return ort * p + trans; }

    // Max entrywise deviation of ort^T ort from the identity.
    double orthogonality_error() const;

    bool orientation_preserving() const { return ort.determinant() > 0.0; }

    static RigidIsometry identity() { return {}; }
};

// Applies b, then a: ort = a.ort b.ort, trans = a.ort b.trans + a.trans.
RigidIsometry compose(const RigidIsometry& a, const RigidIsometry& b);

RigidIsometry inverse(const RigidIsometry& iso);

RigidIsometry rotation_about_x(double angle);

RigidIsometry translation(const Eigen::Vector3d& t);

// Nearest orthogonal matrix (polar factor). Used to restore the
// orthogonality invariant after numeric fitting.
Eigen::Matrix3d nearest_orthogonal(const Eigen::Matrix3d& m);

}  // namespace rigidlab
