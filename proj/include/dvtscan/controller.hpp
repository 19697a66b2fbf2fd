#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geomath.hpp"

namespace dvtscan {

struct ControllerGains {
    Vec6 kp_c;  // N/m (translation), N*m/rad (rotation)
    Vec6 kd_c;
    Vec7 kp_q;  // null-space posture stiffness
    Vec7 kd_q;
    double damping_ratio{0.8};

    /// Diagonal damping from stiffness: kd = 2 * ratio * sqrt(kp).
    static ControllerGains from_stiffness(const Vec6& kp_c, const Vec7& kp_q, double damping_ratio = 0.8) {
        if ((kp_c.array() < 0.0).any() || (kp_q.array() < 0.0).any() || damping_ratio < 0.0) {
            throw InvalidArgument("controller gains must be non-negative");
        }
        ControllerGains g;
        g.kp_c = kp_c;
        g.kp_q = kp_q;
        g.damping_ratio = damping_ratio;
        g.kd_c = 2.0 * damping_ratio * kp_c.cwiseSqrt();
        g.kd_q = 2.0 * damping_ratio * kp_q.cwiseSqrt();
        return g;
    }

    static ControllerGains defaults() {
        Vec6 kp;
        kp << 1200, 1200, 1200, 90, 90, 90;
        return from_stiffness(kp, Vec7::Constant(1e-3), 0.8);
    }
};

struct ShapeConstants {
    double zeta;
    double k_h;
    double k_n;
};

/// T(z) = (k_h k_s^2 / k_c) (1 - z^2) / (1 - k_s^2 z^2)^2
inline double barrier_gain(double z, double k_h, double k_s, double k_c) {
    const double ks2 = k_s * k_s;
    const double d = 1.0 - ks2 * z * z;
    return (k_h * ks2 / k_c) * (1.0 - z * z) / (d * d);
}

inline ShapeConstants derive_constants(double k_s, double k_c) {
    // The radicand below is non-positive for k_s <= 1/sqrt(3).
    if (!(k_s > 1.0 / std::sqrt(3.0) && k_s < 1.0)) {
        throw InvalidShapeParameter(k_s);
    }
    if (!(k_c > 0.0)) {
        throw InvalidArgument("force error constraint k_c must be positive");
    }
    const double radicand = (3.0 * k_s - std::sqrt(4.0 - 3.0 * k_s * k_s)) / (2.0 * k_s);
    if (!(radicand > 0.0)) {
        throw InvalidShapeParameter(k_s);
    }
    ShapeConstants c{};
    c.zeta = std::sqrt(radicand);
    c.k_h = std::log(std::sqrt((1.0 + c.zeta) / (1.0 - c.zeta)));
    c.k_n = 1.0 / (barrier_gain(c.zeta, c.k_h, k_s, k_c) * c.zeta);
    return c;
}

/// Parameters of the transformed-error force law. Build with `make` so the
/// derived triple always matches (k_s, k_c).
struct ForceLawParams {
    double k_c{0.4};
    double k_s{0.99};
    double zeta{};
    double k_h{};
    double k_n{};
    double k_mf{0.008};
    double k_f{0.0065};

    static ForceLawParams make(double k_c = 0.4, double k_s = 0.99, double k_mf = 0.008, double k_f = 0.0065) {
        const ShapeConstants c = derive_constants(k_s, k_c);
        return {k_c, k_s, c.zeta, c.k_h, c.k_n, k_mf, k_f};
    }
};

/// Bounded-barrier error transform. Finite for every e_f; |eps| = |e_f| once |e_f| >= k_c.
inline double transform_error(double e_f, const ForceLawParams& p) {
    const double z = std::tanh(p.k_h * std::clamp(e_f, -p.k_c, p.k_c) / p.k_c);
    return std::abs(e_f) * p.k_n * barrier_gain(z, p.k_h, p.k_s, p.k_c) * z;
}

/// v_f' = -k_mf * eps_f - k_f * e_f  (m/s along the probe axis)
inline double force_law(double e_f, const ForceLawParams& p) {
    return -p.k_mf * transform_error(e_f, p) - p.k_f * e_f;
}

/// Linear feedback baseline v' = -k e_f.
inline double baseline_force_law(double e_f, double k) {
    if (!(k > 0.0)) {
        throw InvalidArgument("baseline gain must be positive");
    }
    return -k * e_f;
}

/// Piecewise clamp used by the contact detector: 0 below f_lo, f inside, f_hi above.
inline double contact_clamp(double f, double f_lo, double f_hi) {
    if (f < f_lo) {
        return 0.0;
    }
    return f > f_hi ? f_hi : f;
}

struct SoftLandingState {
    double alpha{0.0};
    double f_lo{1.0};
    double f_hi{2.0};
    double k_alpha{10.0};
    double v0{0.015};

    void validate() const {
        if (!(f_lo < f_hi) || !(k_alpha > 0.0)) {
            throw InvalidArgument("soft landing needs f_lo < f_hi and k_alpha > 0");
        }
    }
};

/// One explicit Euler step of alpha' = k_alpha (Clamp(f) - f_hi alpha); alpha kept in [0, 1].
inline double soft_landing_update(SoftLandingState& st, double f, double dt) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("soft landing step needs dt > 0");
    }
    const double rate = st.k_alpha * (contact_clamp(f, st.f_lo, st.f_hi) - st.f_hi * st.alpha);
    st.alpha = std::clamp(st.alpha + rate * dt, 0.0, 1.0);
    return st.alpha;
}

inline double blend_velocity(double alpha, double v_f_prime, double v0) {
    return alpha * v_f_prime + (1.0 - alpha) * v0;
}

/// Axial force f = n_s^T T_tw w with n_s = [n_z; 0]. The wrench is the load the
/// probe applies to the tissue, expressed in {P}; compression reads positive.
inline double measured_axial_force(const Wrench& w_p, const Mat6& t_tw, const Vec3& n_z) {
    Vec6 n_s = Vec6::Zero();
    n_s.head<3>() = n_z;
    return n_s.dot(t_tw * w_p.stacked());
}

struct RobotState {
    Vec7 q{Vec7::Zero()};
    Vec7 qdot{Vec7::Zero()};
    Pose ee_pose{};
    Vec6 xdot{Vec6::Zero()};
    Mat67 jacobian{Mat67::Zero()};
};

struct ForceTrackingTarget {
    double f_d{0.0};
    Vec3 x_d{Vec3::Zero()};
    UnitQuaternion q_d{};
    Vec7 q_posture{Vec7::Zero()};
    double fz_integral{0.0};  // axial offset from x_d along the probe axis, m

    /// Starts the axial offset at the probe's current axial position relative to x_d.
    void anchor(const RobotState& rs) {
        fz_integral = rs.ee_pose.z_axis().dot(rs.ee_pose.position - x_d);
    }
};

/// N = I - J^T (J^T)^+ from a thin SVD of J; throws on rank deficiency.
inline Mat7 null_space_projector(const Mat67& j) {
    const Eigen::JacobiSVD<Mat67> svd(j, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > 1e-6 * std::max(sv(0), 1e-300)) {
            ++rank;
        }
    }
    if (rank < 6) {
        throw SingularConfigurationError(rank);
    }
    const Eigen::Matrix<double, 7, 6> v = svd.matrixV().leftCols<6>();
    return Mat7::Identity() - v * v.transpose();
}

/// Moore-Penrose inverse of J^T (6x7).
inline Mat67 transpose_pinv(const Mat67& j) {
    return (j * j.transpose()).ldlt().solve(j);
}

struct HfmcTerms {
    Vec7 tau;
    Vec7 task;   // J^T(-Kp x_e - Kd xdot)
    Vec7 null;   // N(-Kp_q q_e - Kd_q qdot)
    Vec6 pose_error;
};

/// Hybrid force/motion torque. Advances tgt.fz_integral by v_f * dt.
inline HfmcTerms hfmc_terms(const RobotState& rs, ForceTrackingTarget& tgt, double v_f, const ControllerGains& g,
                            double dt) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("control step needs dt > 0");
    }
    const Mat3 r = rs.ee_pose.rotation();
    const Vec3 n_z = r.col(2);
    tgt.fz_integral += v_f * dt;

    const Mat3 p_m = Mat3::Identity() - n_z * n_z.transpose();
    // The axial set-point rides on the target's own axial coordinate so a
    // turning probe axis does not drag the set-point with the base-frame lever arm.
    const Vec3 x_des = p_m * tgt.x_d + n_z * (n_z.dot(tgt.x_d) + tgt.fz_integral);

    HfmcTerms out;
    out.pose_error << rs.ee_pose.position - x_des, orientation_error(rs.ee_pose.orientation, tgt.q_d, r);
    const Vec6 wrench = -g.kp_c.cwiseProduct(out.pose_error) - g.kd_c.cwiseProduct(rs.xdot);
    out.task = rs.jacobian.transpose() * wrench;

    const Mat7 n = null_space_projector(rs.jacobian);
    const Vec7 q_e = rs.q - tgt.q_posture;
    // The posture spring uses the restoring sign: -Kp_q q_e with q_e = q - q_d.
    out.null = n * (-g.kp_q.cwiseProduct(q_e) - g.kd_q.cwiseProduct(rs.qdot));
    out.tau = out.task + out.null;
    return out;
}

inline Vec7 hfmc_torque(const RobotState& rs, ForceTrackingTarget& tgt, double v_f, const ControllerGains& g,
                        double dt) {
    return hfmc_terms(rs, tgt, v_f, g, dt).tau;
}

enum class ForceLawKind { proposed, fundamental };

/// Contact detector + force law + velocity blend, evaluated once per control tick.
struct ForceLoop {
    ForceLawKind kind{ForceLawKind::proposed};
    ForceLawParams law{ForceLawParams::make()};
    double baseline_gain{0.005};
    SoftLandingState landing{};

    [[nodiscard]] double command(double e_f) const {
        return kind == ForceLawKind::proposed ? force_law(e_f, law) : baseline_force_law(e_f, baseline_gain);
    }

    /// Updates alpha from the measured force and returns v_f.
    double step(double f, double f_d, double dt) {
        const double a = soft_landing_update(landing, f, dt);
        return blend_velocity(a, command(f - f_d), landing.v0);
    }
};

}  // namespace dvtscan
