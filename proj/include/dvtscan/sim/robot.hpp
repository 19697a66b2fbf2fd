#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "../controller.hpp"
#include "../errors.hpp"
#include "../geomath.hpp"

namespace dvtscan::sim {

/// Modified (Craig) DH row: Rot_x(alpha) Trans_x(a) Rot_z(theta + offset) Trans_z(d).
struct DhRow {
    double a{0.0};
    double alpha{0.0};
    double d{0.0};
    double theta_offset{0.0};

    [[nodiscard]] Mat4 transform(double q) const {
        const double ct = std::cos(q + theta_offset);
        const double st = std::sin(q + theta_offset);
        const double ca = std::cos(alpha);
        const double sa = std::sin(alpha);
        Mat4 t;
        t << ct, -st, 0, a,
             st * ca, ct * ca, -sa, -sa * d,
             st * sa, ct * sa, ca, ca * d,
             0, 0, 0, 1;
        return t;
    }
};

struct RobotModel {
    std::array<DhRow, 7> dh{};
    DhRow flange{};                 // fixed joint-7 to flange step
    FrameTransform flange_to_probe; // ^F_P T
    Vec7 inertia{Vec7::Ones()};
    Vec7 q_min{Vec7::Constant(-std::numbers::pi)};
    Vec7 q_max{Vec7::Constant(std::numbers::pi)};
    Vec7 tau_max{Vec7::Constant(87.0)};

    void validate() const {
        if ((inertia.array() <= 0.0).any()) {
            throw ConfigError("robot inertia diagonal must be positive");
        }
        if ((q_min.array() >= q_max.array()).any()) {
            throw ConfigError("robot joint limits must satisfy min < max");
        }
        if ((tau_max.array() <= 0.0).any()) {
            throw ConfigError("robot torque limits must be positive");
        }
    }

    /// Seven-joint arm with Panda-like geometry and a straight probe on the flange.
    /// The probe axis is the joint-7 axis, so wrist roll spins the probe about its tip.
    static RobotModel panda_like(double probe_length = 0.12) {
        constexpr double h = std::numbers::pi / 2.0;
        RobotModel m;
        m.dh = {DhRow{0.0, 0.0, 0.333, 0.0},     DhRow{0.0, -h, 0.0, 0.0},  DhRow{0.0, h, 0.316, 0.0},
                DhRow{0.0825, h, 0.0, 0.0},      DhRow{-0.0825, -h, 0.384, 0.0}, DhRow{0.0, h, 0.0, 0.0},
                DhRow{0.088, h, 0.0, 0.0}};
        m.flange = DhRow{0.0, 0.0, 0.107, 0.0};
        m.flange_to_probe = FrameTransform(Mat3::Identity(), Vec3(0.0, 0.0, probe_length));
        m.inertia << 0.6, 0.6, 0.4, 0.4, 0.15, 0.1, 0.05;
        m.q_min << -2.8973, -1.7628, -2.8973, -3.0718, -2.8973, -0.0175, -2.8973;
        // Joint 4 upper bound relaxed to include the zero configuration.
        m.q_max << 2.8973, 1.7628, 2.8973, 0.0, 2.8973, 3.7525, 2.8973;
        m.tau_max << 87, 87, 87, 87, 12, 12, 12;
        return m;
    }
};

struct Kinematics {
    Pose pose;
    Mat67 jacobian{Mat67::Zero()};
    FrameTransform t_bp;
};

inline void check_joint_limits(const RobotModel& m, const Vec7& q) {
    for (int i = 0; i < 7; ++i) {
        if (!(q(i) >= m.q_min(i) && q(i) <= m.q_max(i))) {
            throw JointLimitError(i, q(i));
        }
    }
}

/// Probe pose and geometric Jacobian at the probe tip.
inline Kinematics kinematics(const RobotModel& m, const Vec7& q, bool enforce_limits = true) {
    if (enforce_limits) {
        check_joint_limits(m, q);
    }
    std::array<Vec3, 7> axis;
    std::array<Vec3, 7> origin;
    Mat4 t = Mat4::Identity();
    for (int i = 0; i < 7; ++i) {
        t = t * m.dh[i].transform(q(i));
        axis[i] = t.block<3, 1>(0, 2);
        origin[i] = t.block<3, 1>(0, 3);
    }
    t = t * m.flange.transform(0.0) * m.flange_to_probe.matrix();

    Kinematics k;
    Mat3 r = t.topLeftCorner<3, 3>();
    // Re-orthonormalize to keep FrameTransform's check happy after long chains.
    const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    const Vec3 p = t.block<3, 1>(0, 3);
    k.pose.position = p;
    k.pose.orientation = UnitQuaternion::from_rotation(r);
    k.t_bp = FrameTransform(r, p);
    for (int i = 0; i < 7; ++i) {
        k.jacobian.block<3, 1>(0, i) = axis[i].cross(p - origin[i]);
        k.jacobian.block<3, 1>(3, i) = axis[i];
    }
    return k;
}

inline RobotState make_state(const RobotModel& m, const Vec7& q, const Vec7& qdot = Vec7::Zero()) {
    const Kinematics k = kinematics(m, q);
    RobotState rs;
    rs.q = q;
    rs.qdot = qdot;
    rs.ee_pose = k.pose;
    rs.jacobian = k.jacobian;
    rs.xdot = k.jacobian * qdot;
    return rs;
}

struct StepResult {
    RobotState state;
    bool saturated{false};
};

/// Semi-implicit Euler on I qdd = tau + J^T w_ext. The external wrench is in {B}
/// and acts at the probe tip.
inline StepResult robot_step(const RobotModel& m, const RobotState& st, const Vec7& tau, const Wrench& w_ext,
                             double dt, long tick = 0) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("robot_step needs dt > 0");
    }
    StepResult out;
    Vec7 t = tau;
    for (int i = 0; i < 7; ++i) {
        if (std::abs(t(i)) > m.tau_max(i)) {
            t(i) = std::copysign(m.tau_max(i), t(i));
            out.saturated = true;
        }
    }
    const Vec7 qdd = (t + st.jacobian.transpose() * w_ext.stacked()).cwiseQuotient(m.inertia);
    const Vec7 qdot = st.qdot + qdd * dt;
    const Vec7 q = st.q + qdot * dt;
    if (!q.allFinite() || !qdot.allFinite()) {
        throw SimulationDivergedError(tick - 1);
    }
    out.state = make_state(m, q, qdot);
    return out;
}

/// Damped least-squares IK with a pull toward the seed posture.
inline Vec7 solve_ik(const RobotModel& m, const Pose& target, const Vec7& seed, int iterations = 500,
                     double tol = 1e-10) {
    Vec7 q = seed;
    const double lambda = 0.02;
    for (int it = 0; it < iterations; ++it) {
        const Kinematics k = kinematics(m, q, false);
        Vec6 err;
        err << target.position - k.pose.position, -orientation_error(k.pose.orientation, target.orientation, k.pose.rotation());
        if (err.squaredNorm() < tol * tol) {
            break;
        }
        const Mat67& j = k.jacobian;
        const Mat6 jjt = j * j.transpose() + lambda * lambda * Mat6::Identity();
        Vec7 dq = j.transpose() * jjt.ldlt().solve(err);
        if (it < iterations / 2) {
            // Damped projector is not exact, so the posture pull is dropped for the final polish.
            const Mat7 n = Mat7::Identity() - j.transpose() * jjt.ldlt().solve(j);
            dq += 0.1 * n * (seed - q);
        }
        q += dq;
        q = q.cwiseMax(m.q_min).cwiseMin(m.q_max);
    }
    const Kinematics k = kinematics(m, q, false);
    if ((k.pose.position - target.position).norm() > 1e-6 || k.pose.orientation.angle_to(target.orientation) > 1e-5) {
        throw ScenarioError("inverse kinematics did not converge to the start pose");
    }
    check_joint_limits(m, q);
    return q;
}

/// Posture seed that points the probe down toward a workspace point.
inline Vec7 downward_seed(const Vec3& target) {
    Vec7 q;
    q << std::atan2(target.y(), target.x()), 0.3, 0.0, -2.0, 0.0, 2.3, std::numbers::pi / 4.0;
    return q;
}

}  // namespace dvtscan::sim
