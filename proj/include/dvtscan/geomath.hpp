#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "errors.hpp"

namespace dvtscan {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat67 = Eigen::Matrix<double, 6, 7>;

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return m;
}

/// Unit quaternion Q = {eta, eps} with the real part kept non-negative.
///
/// The canonical sign (eta >= 0) is applied at construction. Products and
/// differences that must stay continuous use the shorter-arc flip via
/// `shorter_arc_to` before combining.
class UnitQuaternion {
public:
    UnitQuaternion() = default;

    UnitQuaternion(double eta, const Vec3& eps) {
        const double n = std::sqrt(eta * eta + eps.squaredNorm());
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw InvalidArgument("quaternion with zero or non-finite norm");
        }
        eta_ = eta / n;
        eps_ = eps / n;
        if (eta_ < 0.0) {
            eta_ = -eta_;
            eps_ = -eps_;
        }
    }

    UnitQuaternion(double w, double x, double y, double z) : UnitQuaternion(w, Vec3(x, y, z)) {}

    static UnitQuaternion identity() { return {}; }

    static UnitQuaternion from_rotation(const Mat3& r) {
        const Eigen::Quaterniond q(r);
        return {q.w(), Vec3(q.x(), q.y(), q.z())};
    }

    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 a = axis.normalized();
        return {std::cos(angle / 2.0), a * std::sin(angle / 2.0)};
    }

    [[nodiscard]] double eta() const { return eta_; }
    [[nodiscard]] const Vec3& eps() const { return eps_; }
    [[nodiscard]] Eigen::Vector4d coeffs() const { return {eta_, eps_.x(), eps_.y(), eps_.z()}; }

    [[nodiscard]] UnitQuaternion conj() const {
        UnitQuaternion q;
        q.eta_ = eta_;
        q.eps_ = -eps_;
        return q;
    }

    [[nodiscard]] double dot(const UnitQuaternion& o) const { return eta_ * o.eta_ + eps_.dot(o.eps_); }

    /// Hamilton product.
    [[nodiscard]] UnitQuaternion operator*(const UnitQuaternion& o) const {
        const double w = eta_ * o.eta_ - eps_.dot(o.eps_);
        const Vec3 v = eta_ * o.eps_ + o.eta_ * eps_ + eps_.cross(o.eps_);
        return {w, v};
    }

    [[nodiscard]] Mat3 rotation() const {
        return Eigen::Quaterniond(eta_, eps_.x(), eps_.y(), eps_.z()).toRotationMatrix();
    }

    [[nodiscard]] Vec3 rotate(const Vec3& v) const { return rotation() * v; }

    /// Geodesic angle between the two rotations, in [0, pi].
    [[nodiscard]] double angle_to(const UnitQuaternion& o) const {
        return 2.0 * std::acos(std::min(1.0, std::abs(dot(o))));
    }

private:
    double eta_{1.0};
    Vec3 eps_{Vec3::Zero()};
};

/// log(Q) = arccos(eta) * eps / |eps|, or zero when |eps| = 0.
inline Vec3 quat_log(const UnitQuaternion& q) {
    const double n = q.eps().norm();
    if (n <= 0.0) {
        return Vec3::Zero();
    }
    // atan2 is arccos(eta) on the unit sphere without the loss of precision near eta = 1.
    return std::atan2(n, q.eta()) * q.eps() / n;
}

/// exp(r) = [cos|r|, sin|r| r/|r|], identity for r = 0.
inline UnitQuaternion quat_exp(const Vec3& r) {
    const double n = r.norm();
    if (n <= 0.0) {
        return UnitQuaternion::identity();
    }
    return {std::cos(n), std::sin(n) * r / n};
}

/// e_o = -R * vec(conj(Q) * Q_d), with Q_d flipped onto Q's hemisphere first.
inline Vec3 orientation_error(const UnitQuaternion& q, const UnitQuaternion& q_d, const Mat3& r) {
    const Eigen::Vector4d a = q.coeffs();
    Eigen::Vector4d b = q_d.coeffs();
    if (a.dot(b) < 0.0) {
        b = -b;
    }
    // vec(conj(a) * b), written out to avoid re-canonicalizing the product's sign.
    const Vec3 ea = a.tail<3>();
    const Vec3 eb = b.tail<3>();
    const Vec3 v = a[0] * eb - b[0] * ea - ea.cross(eb);
    return -r * v;
}

inline UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InvalidArgument("slerp parameter outside [0, 1]");
    }
    const Eigen::Vector4d a = q0.coeffs();
    Eigen::Vector4d b = q1.coeffs();
    double d = a.dot(b);
    if (d < -1.0 + 1e-12) {
        throw DegenerateInterpolationError();
    }
    if (d < 0.0) {
        b = -b;
        d = -d;
    }
    d = std::min(d, 1.0);
    const double omega = std::acos(d);
    Eigen::Vector4d out;
    if (omega < 1e-12) {
        out = a + t * (b - a);
    } else {
        const double so = std::sin(omega);
        out = (std::sin((1.0 - t) * omega) / so) * a + (std::sin(t * omega) / so) * b;
    }
    return {out[0], out.tail<3>()};
}

/// Great-circle interpolation of unit 3-vectors.
inline Vec3 slerp_direction(const Vec3& a, const Vec3& b, double t) {
    const double d = std::clamp(a.dot(b), -1.0, 1.0);
    if (d < -1.0 + 1e-12) {
        throw DegenerateInterpolationError();
    }
    const double omega = std::acos(d);
    if (omega < 1e-12) {
        return (a + t * (b - a)).normalized();
    }
    const double so = std::sin(omega);
    return ((std::sin((1.0 - t) * omega) / so) * a + (std::sin(t * omega) / so) * b).normalized();
}

/// Rigid transform ^A_B T: maps B-frame coordinates into A.
class FrameTransform {
public:
    FrameTransform() = default;

    FrameTransform(const Mat3& rotation, const Vec3& translation) : r_(rotation), p_(translation) {
        if ((r_ * r_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
            std::abs(r_.determinant() - 1.0) > 1e-9) {
            throw InvalidArgument("rotation matrix is not orthonormal with det = +1");
        }
    }

    [[nodiscard]] const Mat3& rotation() const { return r_; }
    [[nodiscard]] const Vec3& translation() const { return p_; }

    [[nodiscard]] Vec3 apply(const Vec3& x) const { return r_ * x + p_; }

    [[nodiscard]] FrameTransform operator*(const FrameTransform& o) const {
        FrameTransform t;
        t.r_ = r_ * o.r_;
        t.p_ = r_ * o.p_ + p_;
        return t;
    }

    [[nodiscard]] FrameTransform inverse() const {
        FrameTransform t;
        t.r_ = r_.transpose();
        t.p_ = -(t.r_ * p_);
        return t;
    }

    [[nodiscard]] Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = r_;
        m.topRightCorner<3, 1>() = p_;
        return m;
    }

    /// 6x6 wrench transform [R, 0; [p]x R, R] for wrenches stacked as [f; tau].
    [[nodiscard]] Mat6 twist() const {
        Mat6 t = Mat6::Zero();
        t.topLeftCorner<3, 3>() = r_;
        t.bottomLeftCorner<3, 3>() = skew(p_) * r_;
        t.bottomRightCorner<3, 3>() = r_;
        return t;
    }

private:
    Mat3 r_{Mat3::Identity()};
    Vec3 p_{Vec3::Zero()};
};

struct Pose {
    Vec3 position{Vec3::Zero()};
    UnitQuaternion orientation{};

    [[nodiscard]] Mat3 rotation() const { return orientation.rotation(); }
    [[nodiscard]] FrameTransform transform() const { return {rotation(), position}; }
    /// Probe axis: third column of the rotation.
    [[nodiscard]] Vec3 z_axis() const { return rotation().col(2); }
};

struct Wrench {
    Vec3 force{Vec3::Zero()};
    Vec3 torque{Vec3::Zero()};

    [[nodiscard]] Vec6 stacked() const {
        Vec6 v;
        v << force, torque;
        return v;
    }
    static Wrench from_stacked(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

inline Wrench wrench_transform(const Mat6& t_tw, const Wrench& w) {
    return Wrench::from_stacked(t_tw * w.stacked());
}

}  // namespace dvtscan
