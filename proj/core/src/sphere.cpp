#include "rigidlab/sphere.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace rigidlab {

double azimuth(const UnitVec3& v) {
    double t = std::atan2(v.y(), v.x());
    if (t == -std::numbers::pi) t = std::numbers::pi;  // convention (-pi, pi]
    return t;
}

UnitVec3 direction(const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
    Eigen::Vector3d d = p - q;
    double n = d.norm();
    if (n < 1e-12) throw DegenerateChord("direction: points closer than 1e-12");
    return UnitVec3(Eigen::Vector3d(d / n));
}

UnitVec3 psi(double c, const UnitVec3& v) {
    if (!(c > 0.0)) throw Error("psi: scale must be positive");
    // c = 1 and equator points are fixed exactly; skip the renormalization
    if (c == 1.0 || v.z() == 0.0) return v;
    return UnitVec3(v.x(), v.y(), c * v.z());
}

double RigidIsometry::orthogonality_error() const {
    Eigen::Matrix3d g = ort.transpose() * ort - Eigen::Matrix3d::Identity();
    return g.cwiseAbs().maxCoeff();
}

RigidIsometry compose(const RigidIsometry& a, const RigidIsometry& b) {
    return {a.ort * b.ort, a.ort * b.trans + a.trans};
}

RigidIsometry inverse(const RigidIsometry& iso) {
    Eigen::Matrix3d rt = iso.ort.transpose();
    return {rt, -(rt * iso.trans)};
}

RigidIsometry rotation_about_x(double angle) {
    double c = std::cos(angle);
    double s = std::sin(angle);
    RigidIsometry r;
    r.ort << 1, 0, 0,
             0, c, -s,
             0, s, c;
    return r;
}

RigidIsometry translation(const Eigen::Vector3d& t) {
    RigidIsometry r;
    r.trans = t;
    return r;
}

Eigen::Matrix3d nearest_orthogonal(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace rigidlab
